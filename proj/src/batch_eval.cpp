#include "sentry/batch_eval.hpp"

#include <atomic>
#include <exception>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sentry {

namespace {

void check_dims(const Classifier& model, const std::vector<std::vector<double>>& xs) {
    const auto dim = static_cast<std::size_t>(model.spec().input_dim);
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (xs[i].size() != dim)
            throw std::invalid_argument("batch: instance " + std::to_string(i) + " has dim " +
                                        std::to_string(xs[i].size()) + ", model expects " +
                                        std::to_string(dim));
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
    if (n >= 1) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

BatchGrad batched_loss_grad(const Classifier& model, const std::vector<std::vector<double>>& xs,
                            const LogitGradFn& fn, Exec exec) {
    check_dims(model, xs);
    const std::size_t b = xs.size();
    const auto& spec = model.spec();
    const int c_count = spec.num_classes;

    BatchGrad out;
    out.grad.assign(model.params().size(), 0.0);
    if (b == 0) return out;

    if (exec == Exec::serial) {
        // reference path: one instance at a time, straight through backward()
        ForwardTrace t;
        std::vector<double> du(c_count);
        for (std::size_t i = 0; i < b; ++i) {
            model.forward(xs[i], t);
            du.assign(c_count, 0.0);
            out.loss += fn(i, t, du);
            model.backward(xs[i], t, du, out.grad);
        }
        return out;
    }

    // phase 1: per-instance forward + local pullbacks, parallel over instances
    std::vector<ForwardTrace> traces(b);
    std::vector<std::vector<double>> dus(b);
    std::vector<BackpropLocal> locals(b);
    std::vector<double> losses(b, 0.0);
    std::atomic<bool> failed{false};
    std::exception_ptr err;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(b); ++ii) {
        if (failed.load(std::memory_order_relaxed)) continue;
        try {
            const auto i = static_cast<std::size_t>(ii);
            model.forward(xs[i], traces[i]);
            dus[i].assign(c_count, 0.0);
            losses[i] = fn(i, traces[i], dus[i]);
            model.backward_locals(traces[i], dus[i], locals[i]);
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical(sentry_batch_err)
#endif
            {
                if (!failed.exchange(true)) err = std::current_exception();
            }
        }
    }
    if (failed.load()) std::rethrow_exception(err);

    // loss: serial sum in index order, same sequence as the reference path
    for (std::size_t i = 0; i < b; ++i) out.loss += losses[i];

    // phase 2: gradient assembly, parallel over parameter rows. For each
    // scalar parameter the inner loop adds the same products in the same
    // instance order as the reference path, so sums are bit-identical.
    const int d = spec.feature_dim();
    const double tmp = spec.temperature;
    double* grad = out.grad.data();

    const std::size_t head = model.head_offset();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int c = 0; c < c_count; ++c) {
        double* gr = grad + head + static_cast<std::size_t>(c) * d;
        for (std::size_t i = 0; i < b; ++i) {
            const double g = dus[i][c] / tmp;
            const double* z = traces[i].unit_feat.data();
            for (int j = 0; j < d; ++j) gr[j] += g * z[j];
        }
    }

    for (std::size_t l = 0; l < spec.hidden.size(); ++l) {
        const int rows = spec.hidden[l];
        const int in = l == 0 ? spec.input_dim : spec.hidden[l - 1];
        double* gw = grad + model.weight_offset(l);
        double* gb = grad + model.bias_offset(l);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int r = 0; r < rows; ++r) {
            double* gr = gw + static_cast<std::size_t>(r) * in;
            for (std::size_t i = 0; i < b; ++i) {
                const double g = locals[i].dpre[l][r];
                const double* a = l == 0 ? xs[i].data() : traces[i].act[l - 1].data();
                for (int j = 0; j < in; ++j) gr[j] += g * a[j];
                gb[r] += g;
            }
        }
    }
    return out;
}

std::vector<int> predict_batch(const Classifier& model, const std::vector<std::vector<double>>& xs,
                               Exec exec) {
    check_dims(model, xs);
    std::vector<int> preds(xs.size(), -1);
    if (exec == Exec::serial) {
        for (std::size_t i = 0; i < xs.size(); ++i) preds[i] = model.predict(xs[i]);
        return preds;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(xs.size()); ++i)
        preds[static_cast<std::size_t>(i)] = model.predict(xs[static_cast<std::size_t>(i)]);
    return preds;
}

CommitteeBatch committee_eval(const Classifier& model, const std::vector<std::vector<double>>& xs,
                              std::span<const std::uint64_t> seeds, const CommitteeSetup& setup,
                              Exec exec) {
    check_dims(model, xs);
    if (seeds.size() != xs.size())
        throw std::invalid_argument("committee_eval: " + std::to_string(seeds.size()) +
                                    " seeds for " + std::to_string(xs.size()) + " instances");
    CommitteeBatch out;
    out.verdicts.resize(xs.size());
    out.members.resize(xs.size());

    auto eval_one = [&](std::size_t i) {
        Rng rng(seeds[i]);
        out.members[i] = committee(rng, xs[i], setup.k, setup.n, setup.severity, setup.geom,
                                   setup.map);
        out.verdicts[i] = check_consistency(model, xs[i], out.members[i], setup.voting);
    };

    if (exec == Exec::serial) {
        for (std::size_t i = 0; i < xs.size(); ++i) eval_one(i);
        return out;
    }
    std::atomic<bool> failed{false};
    std::exception_ptr err;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(xs.size()); ++i) {
        if (failed.load(std::memory_order_relaxed)) continue;
        try {
            eval_one(static_cast<std::size_t>(i));
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical(sentry_committee_err)
#endif
            {
                if (!failed.exchange(true)) err = std::current_exception();
            }
        }
    }
    if (failed.load()) std::rethrow_exception(err);
    return out;
}

}  // namespace sentry
