#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sentry/classifier.hpp"
#include "sentry/rng.hpp"

namespace sentry {

// Label-preserving stochastic transform family. Seven ops valid for generic
// vectors; rotation/translation/cutout switch to geometric variants when the
// input carries image geometry. Severity 0 is the identity for every op.
enum class TransformTag {
    gaussian_noise,
    feature_scale,
    rotation,
    translation,
    cutout,
    contrast,
    elastic_jitter,
};

constexpr int kNumTransformTags = 7;

const char* transform_tag_name(TransformTag tag);

// Per-unit-severity coefficients mapping severity M onto each op's parameter
// range. Defaults were calibrated once on the synthetic shift so that a
// source-trained model keeps well over 60% label agreement under any single
// op at M=2 (see tests); they are echoed into every resolved run config.
struct SeverityMap {
    double noise_sigma = 0.03;      // additive noise stddev per unit M
    double feature_scale = 0.05;    // per-feature multiplicative range
    double rotation_rad = 0.10;     // rotation angle bound (plane or image)
    double translation = 0.05;      // vector shift magnitude bound
    double translation_px = 0.70;   // image shift bound in pixels
    double cutout_frac = 0.04;      // zeroed span / patch as fraction of extent
    double contrast = 0.06;         // gain range around the feature mean
    double elastic = 0.02;          // smoothed additive jitter amplitude
};

struct TransformSpec {
    TransformTag tag;
    double severity = 0.0;
    std::uint64_t seed = 0;  // parameters are drawn from this seed at apply time
};

using TransformChain = std::vector<TransformSpec>;

// Optional image shape; rows*cols must equal the input dim when set.
struct InputGeometry {
    int rows = 0;
    int cols = 0;
    bool is_image() const { return rows > 0 && cols > 0; }
};

// N transforms sampled uniformly with replacement, each with a fresh seed.
TransformChain sample_chain(Rng& rng, int n, double severity);

std::vector<double> apply_transform(const TransformSpec& spec, std::span<const double> x,
                                    const InputGeometry& geom, const SeverityMap& map);

std::vector<double> apply_chain(const TransformChain& chain, std::span<const double> x,
                                const InputGeometry& geom, const SeverityMap& map);

// k independently sampled chains applied to x; list order is generation order.
std::vector<std::vector<double>> committee(Rng& rng, std::span<const double> x, int k, int n,
                                           double severity, const InputGeometry& geom,
                                           const SeverityMap& map);

enum class Voting { majority, unanimous };

// Per-instance record of the committee check. Member indices are 0-based;
// -1 means no member matched (or mismatched).
struct CommitteeVerdict {
    int clean_pred = -1;
    std::vector<int> member_preds;
    std::vector<char> matches;
    bool consistent = false;
    int last_match = -1;
    int last_mismatch = -1;
};

// Pure decision rule: majority needs matches to strictly outnumber
// mismatches (ties are inconsistent); unanimous needs every member to match.
bool decide_consistent(int n_match, int n_total, Voting voting);

CommitteeVerdict check_consistency(const Classifier& model, std::span<const double> x,
                                   const std::vector<std::vector<double>>& members, Voting voting);

}  // namespace sentry
