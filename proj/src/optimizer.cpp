#include "sentry/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace sentry {

OptKind parse_opt_kind(const std::string& name) {
    if (name == "sgd") return OptKind::sgd;
    if (name == "adam") return OptKind::adam;
    throw std::invalid_argument("unknown optimizer '" + name + "' (want sgd|adam)");
}

const char* opt_kind_name(OptKind kind) { return kind == OptKind::sgd ? "sgd" : "adam"; }

void grad_step(Classifier& model, std::span<const double> grad, OptimizerState& state) {
    auto params = model.params();
    if (grad.size() != params.size())
        throw std::invalid_argument("grad_step: gradient has " + std::to_string(grad.size()) +
                                    " entries, model has " + std::to_string(params.size()));
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (!std::isfinite(grad[i]))
            throw std::runtime_error("grad_step: non-finite gradient at parameter " +
                                     std::to_string(i) + " (training diverged)");

    const auto& spec = state.spec;
    if (state.m.size() != params.size()) state.m.assign(params.size(), 0.0);
    ++state.step;

    if (spec.kind == OptKind::sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.m[i] = spec.momentum * state.m[i] + grad[i];
            params[i] -= spec.lr * state.m[i];
        }
        return;
    }

    if (state.v.size() != params.size()) state.v.assign(params.size(), 0.0);
    const double bc1 = 1.0 - std::pow(spec.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(spec.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = spec.beta1 * state.m[i] + (1.0 - spec.beta1) * grad[i];
        state.v[i] = spec.beta2 * state.v[i] + (1.0 - spec.beta2) * grad[i] * grad[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= spec.lr * mhat / (std::sqrt(vhat) + spec.eps);
    }
}

}  // namespace sentry
