#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sentry/classifier.hpp"

namespace sentry {

enum class OptKind { sgd, adam };

struct OptimizerSpec {
    OptKind kind = OptKind::adam;
    double lr = 2e-4;
    double momentum = 0.9;  // sgd only
    double beta1 = 0.9;     // adam
    double beta2 = 0.999;
    double eps = 1e-8;
};

OptKind parse_opt_kind(const std::string& name);
const char* opt_kind_name(OptKind kind);

// Mutable optimizer state; buffers are lazily sized to the parameter count.
struct OptimizerState {
    OptimizerSpec spec;
    std::vector<double> m;  // sgd velocity / adam first moment
    std::vector<double> v;  // adam second moment
    std::int64_t step = 0;
};

// One in-place parameter update. SGD: v ← μv + g, w ← w − lr·v.
// Adam: standard bias-corrected update. NaN/Inf anywhere in grad aborts with
// a diagnostic naming the first bad index.
void grad_step(Classifier& model, std::span<const double> grad, OptimizerState& state);

}  // namespace sentry
