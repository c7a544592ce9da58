#include "sentry/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sentry {

ClassDistribution forward_dist(const Classifier& model, std::span<const double> x) {
    return {model.forward(x), DistSource::model_output};
}

int pseudolabel(const Classifier& model, std::span<const double> x) { return model.predict(x); }

double entropy(std::span<const double> p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

double entropy(const ClassDistribution& dist) { return entropy(dist.p); }

LossValue loss_ce(const Classifier& model, const std::vector<std::vector<double>>& xs,
                  const std::vector<int>& ys, Exec exec) {
    if (xs.size() != ys.size())
        throw std::invalid_argument("loss_ce: " + std::to_string(xs.size()) + " inputs vs " +
                                    std::to_string(ys.size()) + " labels");
    const int c_count = model.spec().num_classes;
    for (std::size_t i = 0; i < ys.size(); ++i)
        if (ys[i] < 0 || ys[i] >= c_count)
            throw std::invalid_argument("loss_ce: label " + std::to_string(ys[i]) +
                                        " out of range [0, " + std::to_string(c_count) + ")");

    // per instance: -log p_y; d/du = p - onehot(y)
    auto fn = [&ys](std::size_t i, const ForwardTrace& t, std::span<double> du) {
        const int y = ys[i];
        for (std::size_t c = 0; c < du.size(); ++c) du[c] = t.probs[c];
        du[y] -= 1.0;
        return -std::log(t.probs[y]);
    };
    BatchGrad bg = batched_loss_grad(model, xs, fn, exec);
    const double inv = xs.empty() ? 0.0 : 1.0 / static_cast<double>(xs.size());
    LossValue out{bg.loss * inv, std::move(bg.grad)};
    for (auto& g : out.grad) g *= inv;
    return out;
}

LossValue loss_ie(const Classifier& model, const std::vector<std::vector<double>>& xs,
                  const ClassDistribution& q, Exec exec) {
    const int c_count = model.spec().num_classes;
    if (static_cast<int>(q.p.size()) != c_count)
        throw std::invalid_argument("loss_ie: q has " + std::to_string(q.p.size()) +
                                    " classes, model has " + std::to_string(c_count));
    std::vector<double> logq(c_count);
    for (int c = 0; c < c_count; ++c) {
        if (q.p[c] == 0.0)
            throw std::invalid_argument("loss_ie: q[" + std::to_string(c) +
                                        "] is exactly zero (smoothing contract violated)");
        logq[c] = std::log(q.p[c]);
    }

    // per instance: Σ_c p_c log q_c; d/du_j = p_j (log q_j - Σ_c p_c log q_c)
    auto fn = [&logq](std::size_t, const ForwardTrace& t, std::span<double> du) {
        double s = 0.0;
        for (std::size_t c = 0; c < du.size(); ++c) s += t.probs[c] * logq[c];
        for (std::size_t c = 0; c < du.size(); ++c) du[c] = t.probs[c] * (logq[c] - s);
        return s;
    };
    BatchGrad bg = batched_loss_grad(model, xs, fn, exec);
    const double inv = xs.empty() ? 0.0 : 1.0 / static_cast<double>(xs.size());
    LossValue out{bg.loss * inv, std::move(bg.grad)};
    for (auto& g : out.grad) g *= inv;
    return out;
}

LossValue selective_entropy_loss(const Classifier& model, const std::vector<EntropyTerm>& terms,
                                 double norm_n, Exec exec) {
    if (norm_n <= 0.0)
        throw std::invalid_argument("selective_entropy_loss: norm_n must be positive");
    std::vector<std::vector<double>> xs;
    xs.reserve(terms.size());
    for (const auto& term : terms) {
        if (term.x == nullptr)
            throw std::invalid_argument("selective_entropy_loss: null input in term");
        xs.push_back(*term.x);
    }

    // per instance: sign * H(p); dH/du_j = -p_j (log p_j + H)
    auto fn = [&terms](std::size_t i, const ForwardTrace& t, std::span<double> du) {
        const double h = entropy(t.probs);
        const double sign = terms[i].sign;
        for (std::size_t c = 0; c < du.size(); ++c) {
            const double lp = t.probs[c] > 0.0 ? std::log(t.probs[c]) : 0.0;
            du[c] = -sign * t.probs[c] * (lp + h);
        }
        return sign * h;
    };
    BatchGrad bg = batched_loss_grad(model, xs, fn, exec);
    const double inv = 1.0 / norm_n;
    LossValue out{bg.loss * inv, std::move(bg.grad)};
    for (auto& g : out.grad) g *= inv;
    return out;
}

std::vector<EntropyTerm> sentry_terms(const std::vector<CommitteeVerdict>& verdicts,
                                      const std::vector<std::vector<std::vector<double>>>& members,
                                      bool entmax, bool on_augmented,
                                      const std::vector<std::vector<double>>* clean_xs) {
    if (verdicts.size() != members.size())
        throw std::invalid_argument("sentry_terms: " + std::to_string(verdicts.size()) +
                                    " verdicts vs " + std::to_string(members.size()) +
                                    " member lists");
    if (!on_augmented && (clean_xs == nullptr || clean_xs->size() != verdicts.size()))
        throw std::invalid_argument("sentry_terms: clean inputs required when not on augmented");
    std::vector<EntropyTerm> terms;
    terms.reserve(verdicts.size());
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        const auto& v = verdicts[i];
        if (v.consistent) {
            if (v.last_match < 0)
                throw std::logic_error("sentry_terms: consistent verdict without a match");
            const auto* x = on_augmented ? &members[i][v.last_match] : &(*clean_xs)[i];
            terms.push_back({x, +1.0});
        } else if (entmax) {
            if (v.last_mismatch < 0)
                throw std::logic_error("sentry_terms: inconsistent verdict without a mismatch");
            const auto* x = on_augmented ? &members[i][v.last_mismatch] : &(*clean_xs)[i];
            terms.push_back({x, -1.0});
        }
    }
    return terms;
}

LossValue loss_sentry(const Classifier& model, const std::vector<CommitteeVerdict>& verdicts,
                      const std::vector<std::vector<std::vector<double>>>& members, bool entmax,
                      Exec exec) {
    if (verdicts.empty()) throw std::invalid_argument("loss_sentry: empty verdict list");
    const auto terms = sentry_terms(verdicts, members, entmax, /*on_augmented=*/true);
    return selective_entropy_loss(model, terms, static_cast<double>(verdicts.size()), exec);
}

TotalLoss compose_total(const Classifier& model, const std::vector<std::vector<double>>& src_xs,
                        const std::vector<int>& src_ys,
                        const std::vector<std::vector<double>>& tgt_xs,
                        const std::vector<EntropyTerm>& terms, double term_norm,
                        const ClassDistribution& q, double lambda_ie, double lambda_sentry,
                        Exec exec) {
    if (lambda_ie < 0.0 || lambda_sentry < 0.0)
        throw std::invalid_argument("loss weights must be nonnegative");

    TotalLoss out;
    LossValue ce = loss_ce(model, src_xs, src_ys, exec);
    out.ce = ce.value;
    out.total = std::move(ce);

    // zero-weight components are skipped entirely so the remaining sum is
    // bit-identical to computing the active terms alone
    if (lambda_ie > 0.0) {
        LossValue ie = loss_ie(model, tgt_xs, q, exec);
        out.ie = ie.value;
        out.total.value += lambda_ie * ie.value;
        for (std::size_t i = 0; i < out.total.grad.size(); ++i)
            out.total.grad[i] += lambda_ie * ie.grad[i];
    }
    if (lambda_sentry > 0.0 && !terms.empty()) {
        LossValue se = selective_entropy_loss(model, terms, term_norm, exec);
        out.sentry = se.value;
        out.total.value += lambda_sentry * se.value;
        for (std::size_t i = 0; i < out.total.grad.size(); ++i)
            out.total.grad[i] += lambda_sentry * se.grad[i];
    }
    return out;
}

TotalLoss loss_total(const Classifier& model, const std::vector<std::vector<double>>& src_xs,
                     const std::vector<int>& src_ys, const std::vector<std::vector<double>>& tgt_xs,
                     const std::vector<CommitteeVerdict>& verdicts,
                     const std::vector<std::vector<std::vector<double>>>& members,
                     const ClassDistribution& q, double lambda_ie, double lambda_sentry,
                     bool entmax, Exec exec) {
    std::vector<EntropyTerm> terms;
    double norm = 1.0;
    if (lambda_sentry > 0.0) {
        if (verdicts.empty()) throw std::invalid_argument("loss_total: empty verdict list");
        terms = sentry_terms(verdicts, members, entmax, /*on_augmented=*/true);
        norm = static_cast<double>(verdicts.size());
    }
    return compose_total(model, src_xs, src_ys, tgt_xs, terms, norm, q, lambda_ie, lambda_sentry,
                         exec);
}

}  // namespace sentry
