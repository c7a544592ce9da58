#pragma once

#include <string>
#include <vector>

#include "sentry/classifier.hpp"
#include "sentry/config.hpp"
#include "sentry/dataset.hpp"
#include "sentry/run_record.hpp"

namespace sentry {

struct TrainResult {
    Classifier model;
    RunRecord record;
};

// Supervised training on the labeled source split (cross-entropy only) with
// the configured source sampler; logs per-epoch loss and eval-split mean
// per-class accuracy. epochs == 0 returns the model unchanged.
TrainResult train_source(Classifier model, const Dataset& src_train, const Dataset& src_eval,
                         const TrainConfig& cfg, int epochs);

// The full adaptation loop. Per batch: class-balanced source batch,
// pseudo-balanced target batch, clean target predictions, committees and
// verdicts (selection modes committee / oracle-correct), pre-step pseudolabel
// update, queue enqueue, composite loss, optimizer step. Per epoch: pseudo
// pool refresh, target-test evaluation, telemetry row. Mutates tgt_train's
// pseudolabels. checkpoint_dir enables mid-run checkpoints at the configured
// cadence.
TrainResult adapt_sentry(Classifier model, const Dataset& src_train, Dataset& tgt_train,
                         const Dataset& tgt_test, const TrainConfig& cfg,
                         const std::string& checkpoint_dir = "");

struct GridCell {
    std::string name;  // "k=3 n=1 ..." joined axis assignments
    TrainConfig cfg;
    TrainResult result;
};

// Cross-product of the axis values applied onto the base config, one
// adapt_sentry per cell from the same pretrained model and seed; each cell
// gets a fresh copy of the target training set (pseudolabels reset).
std::vector<GridCell> run_ablation_grid(const Classifier& pretrained, const Dataset& src_train,
                                        const Dataset& tgt_train, const Dataset& tgt_test,
                                        const TrainConfig& base,
                                        const std::vector<GridAxis>& axes);

}  // namespace sentry
