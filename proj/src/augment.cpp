#include "sentry/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sentry {

namespace {

// bilinear sample with zero padding outside the image
double sample_bilinear(std::span<const double> img, int rows, int cols, double r, double c) {
    const int r0 = static_cast<int>(std::floor(r));
    const int c0 = static_cast<int>(std::floor(c));
    const double fr = r - r0;
    const double fc = c - c0;
    auto at = [&](int ri, int ci) -> double {
        if (ri < 0 || ri >= rows || ci < 0 || ci >= cols) return 0.0;
        return img[static_cast<std::size_t>(ri) * cols + ci];
    };
    return at(r0, c0) * (1 - fr) * (1 - fc) + at(r0, c0 + 1) * (1 - fr) * fc +
           at(r0 + 1, c0) * fr * (1 - fc) + at(r0 + 1, c0 + 1) * fr * fc;
}

std::vector<double> warp_image(std::span<const double> x, int rows, int cols, double angle,
                               double dr, double dc) {
    std::vector<double> out(x.size(), 0.0);
    const double cr = (rows - 1) / 2.0;
    const double cc = (cols - 1) / 2.0;
    const double ca = std::cos(angle);
    const double sa = std::sin(angle);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            // inverse map: rotate about center, then un-shift
            const double yr = r - cr - dr;
            const double yc = c - cc - dc;
            const double sr = ca * yr + sa * yc + cr;
            const double sc = -sa * yr + ca * yc + cc;
            out[static_cast<std::size_t>(r) * cols + c] = sample_bilinear(x, rows, cols, sr, sc);
        }
    }
    return out;
}

}  // namespace

const char* transform_tag_name(TransformTag tag) {
    switch (tag) {
        case TransformTag::gaussian_noise: return "gaussian_noise";
        case TransformTag::feature_scale: return "feature_scale";
        case TransformTag::rotation: return "rotation";
        case TransformTag::translation: return "translation";
        case TransformTag::cutout: return "cutout";
        case TransformTag::contrast: return "contrast";
        case TransformTag::elastic_jitter: return "elastic_jitter";
    }
    return "?";
}

TransformChain sample_chain(Rng& rng, int n, double severity) {
    if (n < 1) throw std::invalid_argument("sample_chain: transform count must be >= 1");
    if (severity < 0.0) throw std::invalid_argument("sample_chain: severity must be >= 0");
    TransformChain chain;
    chain.reserve(n);
    for (int i = 0; i < n; ++i) {
        const auto tag = static_cast<TransformTag>(rng.below(kNumTransformTags));
        chain.push_back({tag, severity, rng.next_u64()});
    }
    return chain;
}

std::vector<double> apply_transform(const TransformSpec& spec, std::span<const double> x,
                                    const InputGeometry& geom, const SeverityMap& map) {
    if (geom.is_image() &&
        static_cast<std::size_t>(geom.rows) * geom.cols != x.size())
        throw std::invalid_argument("apply_transform: geometry " + std::to_string(geom.rows) + "x" +
                                    std::to_string(geom.cols) + " does not cover dim " +
                                    std::to_string(x.size()));
    const double m = spec.severity;
    const std::size_t dim = x.size();
    Rng rng(spec.seed);
    std::vector<double> out(x.begin(), x.end());

    switch (spec.tag) {
        case TransformTag::gaussian_noise: {
            const double sigma = m * map.noise_sigma;
            for (auto& v : out) v += sigma * rng.gaussian();
            break;
        }
        case TransformTag::feature_scale: {
            const double a = m * map.feature_scale;
            for (auto& v : out) v *= 1.0 + a * rng.uniform(-1.0, 1.0);
            break;
        }
        case TransformTag::rotation: {
            const double angle = m * map.rotation_rad * rng.uniform(-1.0, 1.0);
            if (geom.is_image()) {
                out = warp_image(x, geom.rows, geom.cols, angle, 0.0, 0.0);
            } else if (dim >= 2) {
                std::size_t i = rng.below(dim);
                std::size_t j = rng.below(dim - 1);
                if (j >= i) ++j;
                const double ca = std::cos(angle), sa = std::sin(angle);
                const double xi = out[i], xj = out[j];
                out[i] = ca * xi - sa * xj;
                out[j] = sa * xi + ca * xj;
            }
            break;
        }
        case TransformTag::translation: {
            if (geom.is_image()) {
                const double bound = m * map.translation_px;
                const double dr = bound * rng.uniform(-1.0, 1.0);
                const double dc = bound * rng.uniform(-1.0, 1.0);
                out = warp_image(x, geom.rows, geom.cols, 0.0, dr, dc);
            } else {
                // random unit direction scaled by the severity bound
                std::vector<double> dir(dim);
                double norm2 = 0.0;
                for (auto& d : dir) {
                    d = rng.gaussian();
                    norm2 += d * d;
                }
                const double norm = std::sqrt(norm2);
                const double step = m * map.translation * rng.uniform(-1.0, 1.0);
                if (norm > 0.0)
                    for (std::size_t j = 0; j < dim; ++j) out[j] += step * dir[j] / norm;
            }
            break;
        }
        case TransformTag::cutout: {
            if (geom.is_image()) {
                const int side =
                    static_cast<int>(std::llround(m * map.cutout_frac * std::min(geom.rows, geom.cols)));
                if (side > 0) {
                    const int r0 = static_cast<int>(rng.below(std::max(1, geom.rows - side + 1)));
                    const int c0 = static_cast<int>(rng.below(std::max(1, geom.cols - side + 1)));
                    for (int r = r0; r < std::min(geom.rows, r0 + side); ++r)
                        for (int c = c0; c < std::min(geom.cols, c0 + side); ++c)
                            out[static_cast<std::size_t>(r) * geom.cols + c] = 0.0;
                }
            } else {
                const std::size_t len =
                    static_cast<std::size_t>(std::llround(m * map.cutout_frac * static_cast<double>(dim)));
                if (len > 0) {
                    const std::size_t start = rng.below(dim);
                    for (std::size_t j = 0; j < std::min(len, dim); ++j)
                        out[(start + j) % dim] = 0.0;
                }
            }
            break;
        }
        case TransformTag::contrast: {
            const double gain = 1.0 + m * map.contrast * rng.uniform(-1.0, 1.0);
            double mean = 0.0;
            for (double v : out) mean += v;
            mean /= static_cast<double>(dim);
            for (auto& v : out) v = mean + gain * (v - mean);
            break;
        }
        case TransformTag::elastic_jitter: {
            // additive noise smoothed over neighboring features
            const double amp = m * map.elastic;
            std::vector<double> noise(dim);
            for (auto& v : noise) v = rng.gaussian();
            for (std::size_t j = 0; j < dim; ++j) {
                const double left = noise[j > 0 ? j - 1 : j];
                const double right = noise[j + 1 < dim ? j + 1 : j];
                out[j] += amp * (left + noise[j] + right) / 3.0;
            }
            break;
        }
    }
    return out;
}

std::vector<double> apply_chain(const TransformChain& chain, std::span<const double> x,
                                const InputGeometry& geom, const SeverityMap& map) {
    std::vector<double> cur(x.begin(), x.end());
    for (const auto& spec : chain) cur = apply_transform(spec, cur, geom, map);
    return cur;
}

std::vector<std::vector<double>> committee(Rng& rng, std::span<const double> x, int k, int n,
                                           double severity, const InputGeometry& geom,
                                           const SeverityMap& map) {
    if (k < 1) throw std::invalid_argument("committee: size must be >= 1");
    std::vector<std::vector<double>> members;
    members.reserve(k);
    for (int i = 0; i < k; ++i)
        members.push_back(apply_chain(sample_chain(rng, n, severity), x, geom, map));
    return members;
}

bool decide_consistent(int n_match, int n_total, Voting voting) {
    if (voting == Voting::unanimous) return n_match == n_total;
    return n_match > n_total - n_match;
}

CommitteeVerdict check_consistency(const Classifier& model, std::span<const double> x,
                                   const std::vector<std::vector<double>>& members, Voting voting) {
    if (members.empty()) throw std::invalid_argument("check_consistency: empty committee");
    CommitteeVerdict v;
    v.clean_pred = model.predict(x);
    v.member_preds.reserve(members.size());
    v.matches.reserve(members.size());
    int n_match = 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
        const int pred = model.predict(members[i]);
        const bool match = pred == v.clean_pred;
        v.member_preds.push_back(pred);
        v.matches.push_back(match ? 1 : 0);
        if (match) {
            v.last_match = static_cast<int>(i);
            ++n_match;
        } else {
            v.last_mismatch = static_cast<int>(i);
        }
    }
    v.consistent = decide_consistent(n_match, static_cast<int>(members.size()), voting);
    return v;
}

}  // namespace sentry
