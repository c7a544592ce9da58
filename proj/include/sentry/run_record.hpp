#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sentry {

// One epoch of training telemetry. Precision fields use -1 for "absent"
// (no instance in the group that epoch) and serialize as empty CSV cells.
struct EpochRecord {
    int epoch = 0;
    double loss_total = 0.0;
    double loss_ce = 0.0;
    double loss_ie = 0.0;
    double loss_sentry = 0.0;
    double accuracy = 0.0;  // mean per-class accuracy on the held-out split
    double frac_min = 0.0;  // share of judged target instances sent to entropy min
    double frac_max = 0.0;
    double precision_correct = -1.0;    // P(correct | selected for min)
    double precision_incorrect = -1.0;  // P(incorrect | selected for max)
    std::vector<std::int64_t> pseudo_hist;
    double wall_seconds = 0.0;  // summary only; excluded from epochs.csv
};

// One judged target instance (for replaying selection statistics). gt is the
// evaluation-path ground truth, -1 when withheld. n_match/k preserve the raw
// vote so the unanimous/majority relation can be checked from logs.
struct BatchVerdict {
    int epoch = 0;
    int batch = 0;
    std::int64_t instance = 0;
    int clean_pred = -1;
    int n_match = 0;
    int k = 0;
    bool consistent = false;
    bool selected_min = false;
    bool selected_max = false;
    int gt = -1;
};

struct RunRecord {
    std::vector<EpochRecord> epochs;
    std::vector<BatchVerdict> verdicts;
    double total_wall_seconds = 0.0;
    double final_accuracy = 0.0;
};

// Deterministic float formatting (%.17g round-trip) shared by all writers.
std::string format_double(double v);

// epochs.csv: fixed column order, pseudo-histogram flattened to one column
// per class; no wall-clock columns so identical runs are byte-identical.
void write_epochs_csv(const std::string& path, const RunRecord& run);
void write_batches_csv(const std::string& path, const RunRecord& run);

}  // namespace sentry
