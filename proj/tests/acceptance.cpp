// Acceptance gate for the adaptation laboratory. Eleven criteria, one
// PASS/FAIL line each on stdout with the measured numbers inline; exit code
// is the number of failed criteria. Progress chatter goes to stderr.
//
// Criteria 5-7 run the full pipeline at one pinned configuration (below).
// The expected orderings were calibrated on this exact setting; every run is
// deterministic, so reruns reproduce the same accuracies bit for bit.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sentry/augment.hpp"
#include "sentry/batch_eval.hpp"
#include "sentry/cli.hpp"
#include "sentry/classifier.hpp"
#include "sentry/config.hpp"
#include "sentry/dataset.hpp"
#include "sentry/idx_io.hpp"
#include "sentry/losses.hpp"
#include "sentry/metrics.hpp"
#include "sentry/optimizer.hpp"
#include "sentry/pseudo_queue.hpp"
#include "sentry/rng.hpp"
#include "sentry/run_record.hpp"
#include "sentry/sampler.hpp"
#include "sentry/trainer.hpp"
#include "test_util.hpp"

using namespace sentry;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double secs_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int g_failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
    std::printf("%s criterion %2d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

double median5(std::vector<double> v) {
    if (v.size() != 5) throw std::logic_error("median5 wants 5 runs");
    std::sort(v.begin(), v.end());
    return v[2];
}

// ---------------------------------------------------------------------------
// pinned tolerances and budgets
constexpr double kFdTol = 1e-4;          // criterion 1: max relative gradient error
constexpr double kFdBudgetS = 30.0;      // criterion 1: wall budget
constexpr double kFormTol = 1e-12;       // criterion 4: closed-form match
constexpr double kPearsonMin = 0.9;      // criterion 4
constexpr double kGradBudgetS = 1.0;     // criterion 4: wall budget
constexpr double kGapMin = 0.05;         // criterion 5: lead over plain entropy-min
constexpr double kRunBudgetS = 300.0;    // criterion 5: per-run wall budget
constexpr int kSeeds = 5;                // criteria 5-7: seeds 1..5
constexpr int kMonotoneSeedsMin = 4;     // criterion 7
constexpr double kSamplerSigmas = 3.0;   // criterion 8

// the one pinned configuration every empirical criterion runs at
constexpr const char* kPinnedConfig =
    "data.classes = 5\n"
    "data.dim = 2\n"
    "data.train_per_domain = 8000\n"
    "data.test_per_domain = 1000\n"
    "data.noise_sigma = 0.33\n"
    "data.shift_rotation = 0.5\n"
    "data.shift_noise = 0.15\n"
    "data.target_if = 20\n"
    "data.target_total = 2224\n"
    "model.temperature = 0.03\n"
    "train.lr = 0.0007\n"
    "train.m = 2.25\n"
    "train.source_epochs = 40\n"
    "train.epochs = 30\n";

RunConfig pinned_config(std::uint64_t seed, double target_if) {
    RunConfig cfg = parse_config_text(kPinnedConfig);
    apply_kv(cfg, "seed", std::to_string(seed));
    apply_kv(cfg, "data.target_if", format_double(target_if));
    cfg.validate();
    return cfg;
}

Classifier model_for(const RunConfig& cfg) {
    ClassifierSpec spec;
    spec.input_dim = cfg.data.synth.dim;
    spec.hidden = cfg.train.hidden;
    spec.num_classes = cfg.data.synth.num_classes;
    spec.temperature = cfg.train.temperature;
    Rng rng(mix_seed(cfg.seed, "model-init"));
    return Classifier(spec, rng);
}

struct ModeRun {
    double final_accuracy = 0.0;  // mean per-class accuracy on the target test split
    double wall_seconds = 0.0;    // pretrain share + adaptation
    RunRecord record;
};

ModeRun run_mode(const Classifier& pretrained, double pretrain_s, const DatasetPair& pair,
                 const TrainConfig& base, SelectionMode sel, bool entmax) {
    TrainConfig cfg = base;
    cfg.selection = sel;
    cfg.entmax = entmax;
    Dataset tgt = pair.tgt_train;  // fresh pseudolabels per run
    const auto t0 = Clock::now();
    TrainResult res = adapt_sentry(pretrained, pair.src_train, tgt, pair.tgt_test, cfg);
    ModeRun out;
    out.final_accuracy = res.record.final_accuracy;
    out.wall_seconds = pretrain_s + secs_since(t0);
    out.record = std::move(res.record);
    return out;
}

// shared study state for criteria 5, 6, and 7
struct Study {
    bool ready = false;
    std::string error;
    // per-seed final accuracies at the pinned IF=20 setting
    std::vector<double> committee, committee_no_entmax, all_instances, oracle_both, oracle_min;
    std::vector<RunRecord> committee_records;  // for the selection-fraction criterion
    // sweep endpoints for the imbalance-robustness criterion
    std::vector<double> if1_committee, if1_all, if50_committee, if50_all;
    double max_run_seconds = 0.0;
};

Study run_study() {
    Study st;
    try {
        for (int seed = 1; seed <= kSeeds; ++seed) {
            const RunConfig cfg = pinned_config(seed, 20.0);
            const auto t_data = Clock::now();
            const DatasetPair pair = build_datasets(cfg);
            const auto t_pre = Clock::now();
            const Classifier pre =
                train_source(model_for(cfg), pair.src_train, pair.src_test, cfg.train,
                             cfg.train.source_epochs)
                    .model;
            const double pretrain_s = secs_since(t_pre);
            std::fprintf(stderr, "[study] seed %d: data %.1fs pretrain %.1fs\n", seed,
                         std::chrono::duration<double>(t_pre - t_data).count(), pretrain_s);

            auto record = [&](std::vector<double>& into, SelectionMode sel, bool entmax,
                              bool keep_record) {
                ModeRun run = run_mode(pre, pretrain_s, pair, cfg.train, sel, entmax);
                into.push_back(run.final_accuracy);
                st.max_run_seconds = std::max(st.max_run_seconds, run.wall_seconds);
                if (keep_record) st.committee_records.push_back(std::move(run.record));
            };
            record(st.committee, SelectionMode::committee, true, true);
            record(st.committee_no_entmax, SelectionMode::committee, false, false);
            record(st.all_instances, SelectionMode::all, false, false);
            record(st.oracle_both, SelectionMode::oracle_correct, true, false);
            record(st.oracle_min, SelectionMode::oracle_correct, false, false);
            std::fprintf(stderr,
                         "[study] seed %d IF=20: committee %.4f cons-only %.4f all %.4f "
                         "oracle %.4f/%.4f\n",
                         seed, st.committee.back(), st.committee_no_entmax.back(),
                         st.all_instances.back(), st.oracle_both.back(), st.oracle_min.back());

            // imbalance sweep endpoints reuse the same pretrained model: the
            // source domain does not depend on the target imbalance factor
            for (double target_if : {1.0, 50.0}) {
                const RunConfig swept = pinned_config(seed, target_if);
                const DatasetPair spair = build_datasets(swept);
                auto& c_into = target_if == 1.0 ? st.if1_committee : st.if50_committee;
                auto& a_into = target_if == 1.0 ? st.if1_all : st.if50_all;
                ModeRun c = run_mode(pre, pretrain_s, spair, swept.train,
                                     SelectionMode::committee, true);
                ModeRun a = run_mode(pre, pretrain_s, spair, swept.train,
                                     SelectionMode::all, false);
                c_into.push_back(c.final_accuracy);
                a_into.push_back(a.final_accuracy);
                st.max_run_seconds =
                    std::max({st.max_run_seconds, c.wall_seconds, a.wall_seconds});
                std::fprintf(stderr, "[study] seed %d IF=%g: committee %.4f all %.4f\n", seed,
                             target_if, c.final_accuracy, a.final_accuracy);
            }
        }
        st.ready = true;
    } catch (const std::exception& e) {
        st.error = e.what();
    }
    return st;
}

// ---------------------------------------------------------------------------

void criterion_1_gradients() {
    try {
        const auto t0 = Clock::now();
        double worst = 0.0;
        int sentry_checked = 0;
        for (int seed = 0; seed < 20; ++seed) {
            Rng rng(1000 + seed);
            const double temp = 0.5 + rng.uniform();
            auto model = testutil::small_model(2000 + seed, 3, {4}, 3, temp);
            auto xs = testutil::random_batch(rng, 4, 3);
            while (testutil::near_relu_kink(model, xs)) xs = testutil::random_batch(rng, 4, 3);
            const std::vector<int> ys = {0, 2, 1, 0};

            auto track = [&](const std::vector<double>& grad, auto&& f) {
                worst = std::max(worst,
                                 testutil::max_rel_err(grad, testutil::fd_gradient(model, f)));
            };

            const auto ce = loss_ce(model, xs, ys);
            track(ce.grad, [&](const Classifier& m) { return loss_ce(m, xs, ys).value; });

            ClassDistribution q;
            q.p = {0.5, 0.2, 0.3};
            const auto ie = loss_ie(model, xs, q);
            track(ie.grad, [&](const Classifier& m) { return loss_ie(m, xs, q).value; });

            std::vector<EntropyTerm> all_terms;
            for (const auto& x : xs) all_terms.push_back({&x, +1.0});
            const auto sel = selective_entropy_loss(model, all_terms, double(xs.size()));
            track(sel.grad, [&](const Classifier& m) {
                return selective_entropy_loss(m, all_terms, double(xs.size())).value;
            });

            // committees and verdicts frozen; differentiate through the model only
            SeverityMap map;
            InputGeometry geom;
            std::vector<CommitteeVerdict> verdicts;
            std::vector<std::vector<std::vector<double>>> members;
            for (const auto& x : xs) {
                members.push_back(committee(rng, x, 3, 2, 1.5, geom, map));
                verdicts.push_back(check_consistency(model, x, members.back(), Voting::majority));
            }
            bool kink = false;
            for (const auto& mem : members) kink = kink || testutil::near_relu_kink(model, mem);
            if (kink) continue;
            ++sentry_checked;

            const auto ls = loss_sentry(model, verdicts, members);
            track(ls.grad, [&](const Classifier& m) {
                return loss_sentry(m, verdicts, members).value;
            });
            const auto tot = loss_total(model, xs, ys, xs, verdicts, members, q, 0.1, 1.0);
            track(tot.total.grad, [&](const Classifier& m) {
                return loss_total(m, xs, ys, xs, verdicts, members, q, 0.1, 1.0).total.value;
            });
        }
        const double elapsed = secs_since(t0);
        const bool ok = worst < kFdTol && sentry_checked >= 15 && elapsed < kFdBudgetS;
        report(1, ok,
               "finite-difference check of every loss over 20 models: max relative error " +
                   fmt(worst, 8) + " (tol " + fmt(kFdTol, 6) + "), selective-loss models " +
                   std::to_string(sentry_checked) + "/20, " + fmt(elapsed, 1) + "s (budget " +
                   fmt(kFdBudgetS, 0) + "s)");
    } catch (const std::exception& e) {
        report(1, false, std::string("exception: ") + e.what());
    }
}

void criterion_2_reductions() {
    try {
        SyntheticSpec spec;
        spec.num_classes = 3;
        spec.dim = 2;
        spec.train_per_domain = 200;
        spec.test_per_domain = 120;
        spec.noise_sigma = 0.25;
        Rng drng(mix_seed(2, "data"));
        const DatasetPair pair = make_synthetic_pair(drng, spec);

        ClassifierSpec mspec;
        mspec.input_dim = 2;
        mspec.hidden = {16};
        mspec.num_classes = 3;
        mspec.temperature = 0.05;
        Rng init(mix_seed(2, "model-init"));
        const Classifier model0(mspec, init);

        TrainConfig cfg;
        cfg.seed = 2;
        cfg.exec = Exec::serial;
        cfg.batch = 50;
        cfg.epochs = 3;
        cfg.hidden = {16};

        auto same = [](const Classifier& a, const Classifier& b) {
            if (a.params().size() != b.params().size()) return false;
            for (std::size_t i = 0; i < a.params().size(); ++i)
                if (a.params()[i] != b.params()[i]) return false;
            return true;
        };

        // zero adaptation weights + no selection == plain source training
        TrainConfig none = cfg;
        none.selection = SelectionMode::none;
        none.lambda_ie = 0.0;
        none.lambda_sentry = 0.0;
        const auto plain = train_source(model0, pair.src_train, pair.src_test, none, 3);
        Dataset tgt_a = pair.tgt_train;
        const auto reduced = adapt_sentry(model0, pair.src_train, tgt_a, pair.tgt_test, none);
        const bool source_identical = same(plain.model, reduced.model);

        // all-instances selection without entropy-max == a straight-line
        // entropy-minimization loop written here from scratch
        TrainConfig allm = cfg;
        allm.batch = 25;
        allm.epochs = 2;
        allm.selection = SelectionMode::all;
        allm.entmax = false;
        Dataset tgt_b = pair.tgt_train;
        const auto via_trainer =
            adapt_sentry(model0, pair.src_train, tgt_b, pair.tgt_test, allm);
        Classifier hand = model0;
        {
            Dataset tgt = pair.tgt_train;
            std::vector<std::vector<double>> all_xs;
            for (std::size_t i = 0; i < tgt.size(); ++i) all_xs.push_back(tgt.x(i));
            const auto preds = predict_batch(hand, all_xs, allm.exec);
            for (std::size_t i = 0; i < tgt.size(); ++i) tgt.set_pseudo(i, preds[i]);
            SamplerState src_sampler(allm.src_sampler, mix_seed(allm.seed, "source-sampler"));
            src_sampler.build_pools(pair.src_train);
            SamplerState tgt_sampler(allm.tgt_sampler, mix_seed(allm.seed, "target-sampler"));
            tgt_sampler.build_pools(tgt);
            PseudoLabelQueue queue(allm.queue, 3);
            OptimizerState opt{allm.opt};
            const int batches = static_cast<int>(pair.src_train.size()) / allm.batch;
            for (int epoch = 0; epoch < allm.epochs; ++epoch) {
                for (int b = 0; b < batches; ++b) {
                    const auto src_idx = src_sampler.next_batch(pair.src_train, allm.batch);
                    const auto tgt_idx = tgt_sampler.next_batch(tgt, allm.batch);
                    std::vector<std::vector<double>> src_xs, tgt_xs;
                    std::vector<int> src_ys;
                    for (std::size_t i : src_idx) {
                        src_xs.push_back(pair.src_train.x(i));
                        src_ys.push_back(pair.src_train.label(i));
                    }
                    for (std::size_t i : tgt_idx) tgt_xs.push_back(tgt.x(i));
                    const auto preds2 = predict_batch(hand, tgt_xs, allm.exec);
                    for (std::size_t j = 0; j < tgt_idx.size(); ++j) {
                        tgt.set_pseudo(tgt_idx[j], preds2[j]);
                        queue.enqueue(preds2[j]);
                    }
                    std::vector<EntropyTerm> terms;
                    for (std::size_t j = 0; j < tgt_idx.size(); ++j)
                        terms.push_back({&tgt_xs[j], +1.0});
                    const TotalLoss tl = compose_total(
                        hand, src_xs, src_ys, tgt_xs, terms,
                        static_cast<double>(tgt_idx.size()), queue.distribution(),
                        allm.lambda_ie, allm.lambda_sentry, allm.exec);
                    grad_step(hand, tl.total.grad, opt);
                }
                refresh_pseudo_pools(tgt_sampler, tgt);
            }
        }
        const bool cem_identical = same(via_trainer.model, hand);

        // zero augmentation severity leaves no instance inconsistent
        TrainConfig zerom = cfg;
        zerom.batch = 25;
        zerom.epochs = 2;
        zerom.m = 0.0;
        Dataset tgt_c = pair.tgt_train;
        const auto zero = adapt_sentry(model0, pair.src_train, tgt_c, pair.tgt_test, zerom);
        bool all_consistent = !zero.record.verdicts.empty();
        for (const auto& v : zero.record.verdicts)
            all_consistent = all_consistent && v.consistent && v.n_match == zerom.k;
        for (const auto& e : zero.record.epochs)
            all_consistent = all_consistent && e.frac_min == 1.0 && e.frac_max == 0.0;

        const bool ok = source_identical && cem_identical && all_consistent;
        report(2, ok,
               std::string("reduction identities at seed 2: zero-weight adaptation == source "
                           "training bitwise: ") +
                   (source_identical ? "yes" : "NO") +
                   "; all-instances/no-entmax == hand-written entropy-min loop bitwise: " +
                   (cem_identical ? "yes" : "NO") +
                   "; zero-severity committees all consistent: " +
                   (all_consistent ? "yes" : "NO"));
    } catch (const std::exception& e) {
        report(2, false, std::string("exception: ") + e.what());
    }
}

void criterion_3_voting() {
    try {
        // pure decision rule against brute-force counting, every pattern
        int patterns = 0;
        bool rule_ok = true, subset_ok = true;
        for (int k = 1; k <= 5; ++k) {
            for (int bits = 0; bits < (1 << k); ++bits) {
                const int n_match = __builtin_popcount(static_cast<unsigned>(bits));
                const bool brute_major = n_match > k - n_match;
                const bool brute_unan = n_match == k;
                rule_ok = rule_ok &&
                          decide_consistent(n_match, k, Voting::majority) == brute_major &&
                          decide_consistent(n_match, k, Voting::unanimous) == brute_unan;
                subset_ok = subset_ok && (!brute_unan || brute_major);
                ++patterns;
            }
        }

        // full verdict construction: two inputs with different predictions
        // realize every agreement pattern end to end
        auto model = testutil::small_model(77, 3, {4}, 3, 1.0);
        Rng rng(7);
        std::vector<double> a(3), b(3);
        int pred_a = 0, pred_b = 0;
        do {
            for (auto& v : a) v = rng.gaussian();
            for (auto& v : b) v = rng.gaussian();
            pred_a = model.predict(a);
            pred_b = model.predict(b);
        } while (pred_a == pred_b);
        bool verdict_ok = true;
        for (int k = 1; k <= 5; ++k) {
            for (int bits = 0; bits < (1 << k); ++bits) {
                std::vector<std::vector<double>> members;
                for (int i = 0; i < k; ++i)
                    members.push_back((bits >> i) & 1 ? a : b);
                const int n_match = __builtin_popcount(static_cast<unsigned>(bits));
                for (Voting voting : {Voting::majority, Voting::unanimous}) {
                    const CommitteeVerdict v = check_consistency(model, a, members, voting);
                    int counted = 0;
                    for (char m : v.matches) counted += m ? 1 : 0;
                    verdict_ok = verdict_ok && counted == n_match &&
                                 v.consistent == decide_consistent(n_match, k, voting) &&
                                 v.clean_pred == pred_a;
                }
            }
        }

        const bool ok = rule_ok && subset_ok && verdict_ok;
        report(3, ok,
               "exhaustive vote check, committee sizes 1..5 (" + std::to_string(patterns) +
                   " patterns x 2 rules): decision rule vs brute force " +
                   (rule_ok ? "match" : "MISMATCH") + ", unanimous subset-of majority " +
                   (subset_ok ? "holds" : "VIOLATED") + ", end-to-end verdicts " +
                   (verdict_ok ? "match" : "MISMATCH"));
    } catch (const std::exception& e) {
        report(3, false, std::string("exception: ") + e.what());
    }
}

void criterion_4_gradient_study() {
    try {
        const auto t0 = Clock::now();
        std::vector<double> grid;
        for (int i = 0; i < 100; ++i) grid.push_back(0.55 + 0.40 * i / 99.0);
        const GradientCorrelation gc = gradient_correlation_study(grid);
        double worst_form = 0.0;
        bool positive = true;
        for (const auto& pt : gc.table) {
            worst_form = std::max(worst_form,
                                  std::abs(pt.d_em - std::log(pt.p / (1.0 - pt.p))));
            worst_form = std::max(worst_form, std::abs(pt.d_bce - 1.0 / (1.0 - pt.p)));
            positive = positive && pt.d_em > 0.0 && pt.d_bce > 0.0;
        }
        const double elapsed = secs_since(t0);
        const bool ok = worst_form <= kFormTol && positive && gc.pearson > kPearsonMin &&
                        elapsed < kGradBudgetS;
        report(4, ok,
               "entropy-max vs flipped-CE gradients on p in [0.55,0.95]: closed forms within " +
                   fmt(worst_form, 16) + ", all positive: " + (positive ? "yes" : "NO") +
                   ", Pearson " + fmt(gc.pearson, 4) + " (min " + fmt(kPearsonMin, 1) + "), " +
                   fmt(elapsed, 3) + "s");
    } catch (const std::exception& e) {
        report(4, false, std::string("exception: ") + e.what());
    }
}

void criterion_5_comparison(const Study& st) {
    if (!st.ready) {
        report(5, false, "study failed: " + st.error);
        return;
    }
    try {
        const double m_committee = median5(st.committee);
        const double m_cons = median5(st.committee_no_entmax);
        const double m_all = median5(st.all_instances);
        const double m_oboth = median5(st.oracle_both);
        const double m_omin = median5(st.oracle_min);
        const bool ordering = m_committee > m_cons && m_cons > m_all;
        const bool gap = m_committee >= m_all + kGapMin;
        const bool oracle_chain = m_oboth >= m_omin && m_omin >= m_committee;
        const bool budget = st.max_run_seconds < kRunBudgetS;
        const bool ok = ordering && gap && oracle_chain && budget;
        report(5, ok,
               "median final mean-per-class accuracy over seeds 1-5: committee " +
                   fmt(m_committee) + " > consistent-only " + fmt(m_cons) +
                   " > all-instances " + fmt(m_all) + " (lead " +
                   fmt((m_committee - m_all) * 100.0, 1) + " pts, min " +
                   fmt(kGapMin * 100.0, 0) + "); oracle both-sides " + fmt(m_oboth) +
                   " >= oracle min-only " + fmt(m_omin) + " >= committee; slowest run " +
                   fmt(st.max_run_seconds, 1) + "s (budget " + fmt(kRunBudgetS, 0) + "s)");
    } catch (const std::exception& e) {
        report(5, false, std::string("exception: ") + e.what());
    }
}

void criterion_6_imbalance(const Study& st) {
    if (!st.ready) {
        report(6, false, "study failed: " + st.error);
        return;
    }
    try {
        const double c1 = median5(st.if1_committee), c50 = median5(st.if50_committee);
        const double a1 = median5(st.if1_all), a50 = median5(st.if50_all);
        const double deg_committee = c1 - c50;
        const double deg_all = a1 - a50;
        const bool ok = deg_committee < 0.5 * deg_all;
        report(6, ok,
               "imbalance 1 -> 50 median degradation: committee " + fmt(c1) + " -> " +
                   fmt(c50) + " (drop " + fmt(deg_committee) + "), all-instances " + fmt(a1) +
                   " -> " + fmt(a50) + " (drop " + fmt(deg_all) +
                   "); committee drop < half of all-instances drop: " +
                   (ok ? "yes" : "NO"));
    } catch (const std::exception& e) {
        report(6, false, std::string("exception: ") + e.what());
    }
}

void criterion_7_selection_drift(const Study& st) {
    if (!st.ready) {
        report(7, false, "study failed: " + st.error);
        return;
    }
    try {
        int improved = 0;
        std::string per_seed;
        for (const auto& rec : st.committee_records) {
            const auto& first = rec.epochs.front();
            const auto& last = rec.epochs.back();
            const bool up = last.frac_min > first.frac_min && last.frac_max < first.frac_max;
            improved += up ? 1 : 0;
            if (!per_seed.empty()) per_seed += ' ';
            per_seed += fmt(first.frac_min, 3) + "->" + fmt(last.frac_min, 3) +
                        (up ? "" : "(!)");
        }
        const bool ok = improved >= kMonotoneSeedsMin &&
                        st.committee_records.size() == static_cast<std::size_t>(kSeeds);
        report(7, ok,
               "entropy-min fraction rises and entropy-max fraction falls from first to last "
               "epoch on " +
                   std::to_string(improved) + "/" + std::to_string(kSeeds) +
                   " seeds (need >= " + std::to_string(kMonotoneSeedsMin) +
                   "); frac_min per seed: " + per_seed);
    } catch (const std::exception& e) {
        report(7, false, std::string("exception: ") + e.what());
    }
}

void criterion_8_sampler() {
    try {
        const RunConfig cfg = pinned_config(1, 20.0);
        const DatasetPair pair = build_datasets(cfg);
        const Dataset& tgt = pair.tgt_train;
        const int classes = tgt.num_classes();

        SamplerState balanced(SamplerMode::class_balanced, mix_seed(1, "source-sampler"));
        balanced.build_pools(tgt);
        std::vector<std::int64_t> counts(classes, 0);
        std::int64_t draws = 0;
        while (draws < 10000) {
            for (std::size_t i : balanced.next_batch(tgt, 100)) {
                ++counts[tgt.eval_label(i)];
                ++draws;
            }
        }
        const double expect = static_cast<double>(draws) / classes;
        const double sigma = std::sqrt(static_cast<double>(draws) * (1.0 / classes) *
                                       (1.0 - 1.0 / classes));
        double worst_dev = 0.0;
        for (auto c : counts)
            worst_dev = std::max(worst_dev, std::abs(static_cast<double>(c) - expect));
        const bool within = worst_dev <= kSamplerSigmas * sigma;

        // pseudo-balanced pools must mirror the pseudolabel histogram exactly
        Dataset pseudo_ds = tgt;
        for (std::size_t i = 0; i < pseudo_ds.size(); ++i)
            pseudo_ds.set_pseudo(i, static_cast<int>(i) % classes);
        SamplerState pseudo(SamplerMode::pseudo_balanced, 9);
        pseudo.build_pools(pseudo_ds);
        refresh_pseudo_pools(pseudo, pseudo_ds);
        const LabelHistogram hist = pseudo_ds.pseudo_histogram();
        bool pools_match = static_cast<int>(pseudo.pools().size()) == classes;
        for (int c = 0; c < classes && pools_match; ++c)
            pools_match = pseudo.pools()[c].size() ==
                          static_cast<std::size_t>(hist.counts[c]);

        const bool ok = within && pools_match;
        report(8, ok,
               "class-balanced sampler on the imbalance-20 target set: worst class deviation " +
                   fmt(worst_dev, 1) + " of " + std::to_string(draws) + " draws (3-sigma bound " +
                   fmt(kSamplerSigmas * sigma, 1) + "); pseudo pools == pseudolabel histogram: " +
                   (pools_match ? "yes" : "NO"));
    } catch (const std::exception& e) {
        report(8, false, std::string("exception: ") + e.what());
    }
}

void criterion_9_long_tail() {
    try {
        SyntheticSpec spec;
        spec.num_classes = 5;
        spec.dim = 2;
        spec.train_per_domain = 4000;
        spec.test_per_domain = 500;
        Rng drng(mix_seed(9, "data"));
        const DatasetPair pair = make_synthetic_pair(drng, spec);
        const std::vector<int> order = {0, 1, 2, 3, 4};

        std::string realized;
        bool exact = true;
        for (double target : {20.0, 50.0, 100.0}) {
            Rng lt(mix_seed(9, "long-tail"));
            const auto [ds, hist] = long_tail(lt, pair.tgt_train, target, order);
            const auto [mn, mx] =
                std::minmax_element(hist.counts.begin(), hist.counts.end());
            exact = exact && *mx == static_cast<std::int64_t>(target) * *mn &&
                    hist.imbalance_factor() == target;
            if (!realized.empty()) realized += ' ';
            realized += fmt(hist.imbalance_factor(), 1);
        }

        // equal-total contract: an off-grid request lands within +-C
        Rng probe(mix_seed(9, "long-tail"));
        const auto [ds0, hist0] = long_tail(probe, pair.tgt_train, 20.0, order);
        const std::int64_t request = hist0.total() + 3;
        Rng lt2(mix_seed(9, "long-tail"));
        const auto [ds2, hist2] = long_tail(lt2, pair.tgt_train, 20.0, order, request);
        const std::int64_t gap = std::abs(hist2.total() - request);
        const bool total_ok = gap <= spec.num_classes &&
                              hist2.imbalance_factor() == 20.0;

        const bool ok = exact && total_ok;
        report(9, ok,
               "long-tail profiles hit imbalance factors {" + realized +
                   "} exactly; total request " + std::to_string(request) + " realized as " +
                   std::to_string(hist2.total()) + " (gap " + std::to_string(gap) +
                   ", allowed " + std::to_string(spec.num_classes) + ")");
    } catch (const std::exception& e) {
        report(9, false, std::string("exception: ") + e.what());
    }
}

void criterion_10_replay() {
    try {
        const fs::path base =
            fs::temp_directory_path() /
            ("accept_replay_" + std::to_string(static_cast<unsigned>(::getpid())));
        fs::create_directories(base);
        RunConfig cfg = parse_config_text(
            "seed = 4\n"
            "data.classes = 3\n"
            "data.dim = 2\n"
            "data.train_per_domain = 200\n"
            "data.test_per_domain = 100\n"
            "train.batch = 50\n"
            "train.source_epochs = 2\n"
            "train.epochs = 3\n");
        cfg.command = Command::adapt;

        auto run_into = [&](const std::string& name) {
            RunConfig c = cfg;
            c.out_dir = (base / name).string();
            std::ostringstream sink;
            auto* saved = std::cout.rdbuf(sink.rdbuf());
            execute(c);
            std::cout.rdbuf(saved);
            std::ifstream in(c.out_dir + "/epochs.csv", std::ios::binary);
            std::ostringstream ss;
            ss << in.rdbuf();
            return ss.str();
        };
        const std::string first = run_into("first");
        const std::string second = run_into("second");
        std::error_code ec;
        fs::remove_all(base, ec);

        const bool ok = !first.empty() && first == second;
        report(10, ok,
               std::string("same adaptation run twice: epoch telemetry byte-identical: ") +
                   (ok ? "yes" : "NO") + " (" + std::to_string(first.size()) + " bytes)");
    } catch (const std::exception& e) {
        report(10, false, std::string("exception: ") + e.what());
    }
}

void criterion_11_idx() {
    try {
        const fs::path base =
            fs::temp_directory_path() /
            ("accept_idx_" + std::to_string(static_cast<unsigned>(::getpid())));
        fs::create_directories(base);
        auto put_u32 = [](std::string& s, std::uint32_t v) {
            s.push_back(static_cast<char>((v >> 24) & 0xff));
            s.push_back(static_cast<char>((v >> 16) & 0xff));
            s.push_back(static_cast<char>((v >> 8) & 0xff));
            s.push_back(static_cast<char>(v & 0xff));
        };
        std::string images, labels;
        put_u32(images, 0x00000803);
        put_u32(images, 2);
        put_u32(images, 2);
        put_u32(images, 2);
        for (unsigned char b : {0, 128, 255, 64, 10, 20, 30, 40})
            images.push_back(static_cast<char>(b));
        put_u32(labels, 0x00000801);
        put_u32(labels, 2);
        labels.push_back(1);
        labels.push_back(0);

        auto write_file = [](const fs::path& p, const std::string& bytes) {
            std::ofstream out(p, std::ios::binary);
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        };
        auto read_file = [](const fs::path& p) {
            std::ifstream in(p, std::ios::binary);
            std::ostringstream ss;
            ss << in.rdbuf();
            return ss.str();
        };

        write_file(base / "fix-images", images);
        write_file(base / "fix-labels", labels);
        const Dataset ds = load_idx((base / "fix-images").string(),
                                    (base / "fix-labels").string(), Domain::source,
                                    Split::train, 3);
        write_idx(ds, (base / "out-images").string(), (base / "out-labels").string());
        const bool fixture_ok = read_file(base / "out-images") == images &&
                                read_file(base / "out-labels") == labels;
        const Dataset again = load_idx((base / "out-images").string(),
                                       (base / "out-labels").string(), Domain::source,
                                       Split::train, 3);
        bool reparse_ok = again.size() == ds.size();
        for (std::size_t i = 0; reparse_ok && i < ds.size(); ++i)
            reparse_ok = ds.x(i) == again.x(i) && ds.raw_label(i) == again.raw_label(i);

        // the real corpus round-trips too when present on this machine
        std::string real_note = "real corpus not present, fixture only";
        bool real_ok = true;
        for (const std::string dir : {"data", "/root/data"}) {
            const fs::path img = fs::path(dir) / "train-images-idx3-ubyte";
            const fs::path lab = fs::path(dir) / "train-labels-idx1-ubyte";
            if (!fs::exists(img) || !fs::exists(lab)) continue;
            const Dataset mnist = load_idx(img.string(), lab.string());
            write_idx(mnist, (base / "mnist-images").string(),
                      (base / "mnist-labels").string());
            real_ok = read_file(base / "mnist-images") == read_file(img) &&
                      read_file(base / "mnist-labels") == read_file(lab);
            real_note = std::string("real corpus round-trip (") +
                        std::to_string(mnist.size()) + " examples): " +
                        (real_ok ? "byte-identical" : "MISMATCH");
            break;
        }
        std::error_code ec;
        fs::remove_all(base, ec);

        const bool ok = fixture_ok && reparse_ok && real_ok;
        report(11, ok,
               std::string("binary image format parse -> serialize -> parse: fixture bytes ") +
                   (fixture_ok ? "identical" : "DIFFER") + ", reparse " +
                   (reparse_ok ? "equal" : "DIFFERS") + "; " + real_note);
    } catch (const std::exception& e) {
        report(11, false, std::string("exception: ") + e.what());
    }
}

}  // namespace

int main() {
    criterion_1_gradients();
    criterion_2_reductions();
    criterion_3_voting();
    criterion_4_gradient_study();
    std::fprintf(stderr, "[study] running the pinned five-seed comparison (several minutes)\n");
    const Study st = run_study();
    criterion_5_comparison(st);
    criterion_6_imbalance(st);
    criterion_7_selection_drift(st);
    criterion_8_sampler();
    criterion_9_long_tail();
    criterion_10_replay();
    criterion_11_idx();
    if (g_failures == 0)
        std::fprintf(stderr, "all acceptance criteria passed\n");
    else
        std::fprintf(stderr, "%d acceptance criteria failed\n", g_failures);
    return g_failures;
}
