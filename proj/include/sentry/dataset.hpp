#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sentry/augment.hpp"
#include "sentry/rng.hpp"

namespace sentry {

enum class Domain { source, target };
enum class Split { train, test };

struct LabelHistogram {
    std::vector<std::int64_t> counts;

    std::int64_t total() const;
    // max count / min count; throws if any class count is zero (undefined)
    double imbalance_factor() const;
    bool operator==(const LabelHistogram&) const = default;
};

// Fixed pool of examples. Ground-truth labels sit behind two audited
// accessors so tests can prove the training path never touches target labels:
// label() is the training-path read (samplers, CE loss, oracle selection) and
// eval_label() the metrics/diagnostics read. raw_label() is reserved for
// construction and serialization, before any training starts.
class Dataset {
public:
    Dataset(Domain domain, Split split, int num_classes);

    // label -1 marks an unlabeled example
    void add(std::vector<double> x, int label);

    std::size_t size() const { return xs_.size(); }
    int num_classes() const { return num_classes_; }
    int dim() const { return xs_.empty() ? 0 : static_cast<int>(xs_[0].size()); }
    Domain domain() const { return domain_; }
    Split split() const { return split_; }
    bool has_labels() const;

    const std::vector<double>& x(std::size_t i) const { return xs_.at(i); }

    int label(std::size_t i) const;       // training path, counted
    int eval_label(std::size_t i) const;  // evaluation path, counted separately
    int raw_label(std::size_t i) const { return labels_.at(i); }

    int pseudo(std::size_t i) const { return pseudo_.at(i); }
    void set_pseudo(std::size_t i, int c);

    std::uint64_t train_label_reads() const { return train_reads_; }
    std::uint64_t eval_label_reads() const { return eval_reads_; }

    LabelHistogram label_histogram() const;   // over raw ground truth
    LabelHistogram pseudo_histogram() const;  // over current pseudolabels

    InputGeometry geometry;  // optional image shape

private:
    Domain domain_;
    Split split_;
    int num_classes_;
    std::vector<std::vector<double>> xs_;
    std::vector<int> labels_;
    std::vector<int> pseudo_;
    mutable std::uint64_t train_reads_ = 0;
    mutable std::uint64_t eval_reads_ = 0;
};

// Two-domain synthetic construction: C Gaussian blobs with means on a circle
// in the first two dimensions; the target domain applies a fixed covariate
// shift (rotation of the first two dims, a translation, extra noise) to the
// shared generators. Label distributions are per-domain categorical draws.
struct SyntheticSpec {
    int num_classes = 5;
    int dim = 2;
    int train_per_domain = 2000;
    int test_per_domain = 1000;
    double class_sep = 2.2;     // radius of the class-mean circle
    double noise_sigma = 0.35;  // blob stddev
    double shift_rotation = 0.5;
    double shift_translation = 0.4;
    double shift_noise = 0.0;
    std::vector<double> source_probs;  // empty = uniform
    std::vector<double> target_probs;  // empty = uniform
};

struct DatasetPair {
    Dataset src_train;
    Dataset src_test;
    Dataset tgt_train;
    Dataset tgt_test;
};

// Train/test splits for both domains; any class with < 2 examples in any
// split is an error. Target ground truth is retained (evaluation only).
DatasetPair make_synthetic_pair(Rng& rng, const SyntheticSpec& spec);

// Long-tails a labeled dataset to realized imbalance factor exactly
// target_if. class_order[rank] names the class holding that rank (largest
// first); per-rank keep-counts follow the geometric profile
// n_max * (1/IF)^(rank/(C-1)) with the end points pinned so that
// n_max / n_min == target_if exactly. target_total > 0 asks for a total kept
// count within ±C of that value. Subsampling is uniform without replacement.
std::pair<Dataset, LabelHistogram> long_tail(Rng& rng, const Dataset& ds, double target_if,
                                             const std::vector<int>& class_order,
                                             std::int64_t target_total = 0);

}  // namespace sentry
