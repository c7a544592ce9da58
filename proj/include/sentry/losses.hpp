#pragma once

#include <span>
#include <vector>

#include "sentry/augment.hpp"
#include "sentry/batch_eval.hpp"
#include "sentry/classifier.hpp"

namespace sentry {

// Scalar loss plus its exact gradient w.r.t. the flat parameter vector.
struct LossValue {
    double value = 0.0;
    std::vector<double> grad;
};

enum class DistSource { model_output, queue_empirical };

struct ClassDistribution {
    std::vector<double> p;
    DistSource source = DistSource::model_output;
};

// Model's predictive distribution for one input.
ClassDistribution forward_dist(const Classifier& model, std::span<const double> x);

// argmax of forward_dist; ties resolved to the lowest class index.
int pseudolabel(const Classifier& model, std::span<const double> x);

// Shannon entropy, natural log, 0*log 0 := 0.
double entropy(std::span<const double> p);
double entropy(const ClassDistribution& dist);

// Mean cross-entropy −log p(y|x) over a labeled batch.
LossValue loss_ce(const Classifier& model, const std::vector<std::vector<double>>& xs,
                  const std::vector<int>& ys, Exec exec = Exec::serial);

// Mean of Σ_c p(c|x) log q(c); q is a constant (no gradient through it).
// q must be smoothed: any exact zero entry is an error.
LossValue loss_ie(const Classifier& model, const std::vector<std::vector<double>>& xs,
                  const ClassDistribution& q, Exec exec = Exec::serial);

// One selected entropy contribution: evaluate H(p(.|x)) on `x` and add it
// with `sign` (+1 entropy minimization, -1 maximization). The pointed-to
// input must outlive the loss call.
struct EntropyTerm {
    const std::vector<double>* x = nullptr;
    double sign = 1.0;
};

// (1/norm_n) * Σ_i sign_i * H_i with exact gradients. norm_n is the group
// proportion denominator (usually the number of judged instances), which may
// exceed terms.size() when a group is dropped.
LossValue selective_entropy_loss(const Classifier& model, const std::vector<EntropyTerm>& terms,
                                 double norm_n, Exec exec = Exec::serial);

// Builds the entropy terms the committee verdicts call for: consistent
// instances minimize on their last matching member, inconsistent ones
// maximize on their last mismatching member (dropped when entmax is off).
// With on_augmented=false both evaluate on the clean input instead, in which
// case clean_xs must be non-null and index-aligned with verdicts.
std::vector<EntropyTerm> sentry_terms(const std::vector<CommitteeVerdict>& verdicts,
                                      const std::vector<std::vector<std::vector<double>>>& members,
                                      bool entmax, bool on_augmented,
                                      const std::vector<std::vector<double>>* clean_xs = nullptr);

// Proportion-weighted selective entropy over committee verdicts:
// (n_cons/n)*mean_cons H − (n_inc/n)*mean_inc H, each instance evaluated on
// its last matching / mismatching augmented member. Errors on empty verdicts.
LossValue loss_sentry(const Classifier& model, const std::vector<CommitteeVerdict>& verdicts,
                      const std::vector<std::vector<std::vector<double>>>& members,
                      bool entmax = true, Exec exec = Exec::serial);

struct TotalLoss {
    LossValue total;
    double ce = 0.0;
    double ie = 0.0;
    double sentry = 0.0;
};

// L_CE + λ_IE·L_IE + λ_SENTRY·L_SENTRY. A component with λ = 0 is skipped
// outright, so the remaining terms are bit-identical to computing them alone.
// `terms`/`term_norm` carry the selective-entropy part (already built for the
// active selection mode).
TotalLoss compose_total(const Classifier& model, const std::vector<std::vector<double>>& src_xs,
                        const std::vector<int>& src_ys,
                        const std::vector<std::vector<double>>& tgt_xs,
                        const std::vector<EntropyTerm>& terms, double term_norm,
                        const ClassDistribution& q, double lambda_ie, double lambda_sentry,
                        Exec exec = Exec::serial);

// Composite with committee semantics (terms derived from the verdicts).
TotalLoss loss_total(const Classifier& model, const std::vector<std::vector<double>>& src_xs,
                     const std::vector<int>& src_ys, const std::vector<std::vector<double>>& tgt_xs,
                     const std::vector<CommitteeVerdict>& verdicts,
                     const std::vector<std::vector<std::vector<double>>>& members,
                     const ClassDistribution& q, double lambda_ie, double lambda_sentry,
                     bool entmax = true, Exec exec = Exec::serial);

}  // namespace sentry
