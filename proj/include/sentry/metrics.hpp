#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sentry/batch_eval.hpp"
#include "sentry/classifier.hpp"
#include "sentry/dataset.hpp"
#include "sentry/run_record.hpp"

namespace sentry {

// rows = ground truth, columns = prediction
struct ConfusionMatrix {
    int num_classes = 0;
    std::vector<std::int64_t> counts;  // row-major C*C

    std::int64_t& at(int truth, int pred);
    std::int64_t at(int truth, int pred) const;
};

// Predictions over a labeled evaluation split (eval-path label reads).
ConfusionMatrix build_confusion(const Classifier& model, const Dataset& ds,
                                Exec exec = Exec::serial);

// Mean over classes of diagonal / row-sum; an empty row is an error.
double mean_per_class_accuracy(const ConfusionMatrix& cm);

// Precision of the consistency signal against ground truth. absent (nullopt)
// when the corresponding group is empty — never reported as 0.
struct PrecisionRecord {
    std::optional<double> correct_given_consistent;
    std::optional<double> incorrect_given_inconsistent;
};

PrecisionRecord checker_precision(const std::vector<CommitteeVerdict>& verdicts,
                                  const std::vector<int>& ground_truth);
// Same, replayed from logged per-batch verdicts of one epoch (gt = -1 rows
// are skipped).
PrecisionRecord checker_precision(const std::vector<BatchVerdict>& verdicts, int epoch);

struct GradientPoint {
    double p = 0.0;
    double d_em = 0.0;   // d/dp [p log p + (1-p) log(1-p)] = log(p/(1-p))
    double d_bce = 0.0;  // d/dp [-log(1-p)] = 1/(1-p), true class first
};

struct GradientCorrelation {
    std::vector<GradientPoint> table;
    double pearson = 0.0;
};

// Closed-form comparison of the entropy-maximization and BCE gradients on a
// grid of wrong-class probabilities.
GradientCorrelation gradient_correlation_study(const std::vector<double>& p_grid);

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b);

struct SelectionSeries {
    std::vector<double> frac_min;                         // per epoch
    std::vector<double> frac_max;                         // per epoch
    std::vector<std::vector<double>> per_class_frac_min;  // [epoch][gt class], eval-only
};

// Aggregates logged verdicts into per-epoch selection fractions and, where
// ground truth was logged, a per-class entropy-min breakdown.
SelectionSeries selection_fraction_series(const RunRecord& run, int num_classes);

}  // namespace sentry
