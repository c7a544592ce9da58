#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sentry/augment.hpp"
#include "sentry/classifier.hpp"

namespace sentry {

// Execution mode for the batched kernels. `serial` is the straight-line
// reference; `parallel` distributes work across OpenMP threads but performs
// the same floating-point operations in the same per-value order, so the two
// modes (and any thread count) produce bit-identical results. Tests assert
// this; the bench tool measures the difference in speed only.
enum class Exec { serial, parallel };

// Per-instance loss callback used by batched_loss_grad. Receives the instance
// index and its forward trace, writes d(loss_i)/d(logits) into `du` (zeroed,
// length num_classes) and returns the instance's scalar loss contribution.
// Called exactly once per instance; must be safe to invoke concurrently for
// distinct indices and must not throw.
using LogitGradFn =
    std::function<double(std::size_t idx, const ForwardTrace& t, std::span<double> du)>;

// Plain sums over instances (no batch-size normalization; callers scale).
struct BatchGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

// Forward + reverse pass over a batch. Serial mode: one instance at a time,
// accumulating straight through Classifier::backward. Parallel mode runs two
// phases: (1) per-instance traces, logit grads and layer-local pullbacks,
// parallel over instances; (2) parameter-gradient assembly, parallel over
// parameter rows with a serial inner loop over instances in index order.
// Every scalar parameter therefore receives identical contributions in
// identical order in both modes.
BatchGrad batched_loss_grad(const Classifier& model, const std::vector<std::vector<double>>& xs,
                            const LogitGradFn& fn, Exec exec);

std::vector<int> predict_batch(const Classifier& model, const std::vector<std::vector<double>>& xs,
                               Exec exec);

struct CommitteeSetup {
    int k = 3;
    int n = 3;
    double severity = 2.0;
    Voting voting = Voting::majority;
    InputGeometry geom;
    SeverityMap map;
};

struct CommitteeBatch {
    std::vector<CommitteeVerdict> verdicts;
    std::vector<std::vector<std::vector<double>>> members;  // [instance][member][dim]
};

// Builds and judges one committee per instance. `seeds` carries one RNG seed
// per instance, drawn serially by the caller from its augmentation stream;
// given the seeds, each instance's committee is independent of the others, so
// parallel evaluation is trivially deterministic.
CommitteeBatch committee_eval(const Classifier& model, const std::vector<std::vector<double>>& xs,
                              std::span<const std::uint64_t> seeds, const CommitteeSetup& setup,
                              Exec exec);

// OpenMP plumbing (1 / no-op when built without OpenMP).
int max_threads();
void set_threads(int n);

}  // namespace sentry
