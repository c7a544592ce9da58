#include "sentry/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "sentry/batch_eval.hpp"
#include "sentry/checkpoint.hpp"
#include "sentry/losses.hpp"
#include "sentry/metrics.hpp"
#include "sentry/optimizer.hpp"
#include "sentry/pseudo_queue.hpp"
#include "sentry/sampler.hpp"

namespace sentry {

namespace {

using clock = std::chrono::steady_clock;

double seconds_since(clock::time_point t0) {
    return std::chrono::duration<double>(clock::now() - t0).count();
}

int batches_per_epoch(std::size_t n, int batch) {
    return std::max(1, static_cast<int>(n / static_cast<std::size_t>(batch)));
}

std::vector<std::vector<double>> gather_x(const Dataset& ds,
                                          const std::vector<std::size_t>& idx) {
    std::vector<std::vector<double>> xs;
    xs.reserve(idx.size());
    for (std::size_t i : idx) xs.push_back(ds.x(i));
    return xs;
}

void check_model_vs_data(const Classifier& model, const Dataset& ds, const char* name) {
    if (ds.size() == 0) throw std::invalid_argument(std::string(name) + ": empty dataset");
    if (ds.num_classes() != model.spec().num_classes)
        throw std::invalid_argument(std::string(name) + ": dataset has " +
                                    std::to_string(ds.num_classes()) + " classes, model has " +
                                    std::to_string(model.spec().num_classes));
    if (ds.dim() != model.spec().input_dim)
        throw std::invalid_argument(std::string(name) + ": dataset dim " +
                                    std::to_string(ds.dim()) + " vs model input " +
                                    std::to_string(model.spec().input_dim));
}

}  // namespace

TrainResult train_source(Classifier model, const Dataset& src_train, const Dataset& src_eval,
                         const TrainConfig& cfg, int epochs) {
    cfg.validate();
    check_model_vs_data(model, src_train, "train_source");
    if (!src_train.has_labels())
        throw std::invalid_argument("train_source: source train split must be fully labeled");

    RunRecord rec;
    const auto run_start = clock::now();

    SamplerState sampler(cfg.src_sampler, mix_seed(cfg.seed, "source-sampler"));
    sampler.build_pools(src_train);
    OptimizerState opt{cfg.opt};
    const int batches = batches_per_epoch(src_train.size(), cfg.batch);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        const auto t0 = clock::now();
        double ep_ce = 0.0;
        std::vector<double> epoch_grad;
        for (int b = 0; b < batches; ++b) {
            const auto idx = sampler.next_batch(src_train, cfg.batch);
            const auto xs = gather_x(src_train, idx);
            std::vector<int> ys;
            ys.reserve(idx.size());
            for (std::size_t i : idx) ys.push_back(src_train.label(i));
            LossValue ce = loss_ce(model, xs, ys, cfg.exec);
            ep_ce += ce.value;
            if (cfg.granularity == StepGranularity::batch) {
                grad_step(model, ce.grad, opt);
            } else {
                if (epoch_grad.empty()) epoch_grad.assign(ce.grad.size(), 0.0);
                for (std::size_t i = 0; i < ce.grad.size(); ++i) epoch_grad[i] += ce.grad[i];
            }
        }
        if (cfg.granularity == StepGranularity::epoch) {
            for (auto& g : epoch_grad) g /= batches;
            grad_step(model, epoch_grad, opt);
        }

        EpochRecord er;
        er.epoch = epoch;
        er.loss_ce = ep_ce / batches;
        er.loss_total = er.loss_ce;
        er.accuracy = mean_per_class_accuracy(build_confusion(model, src_eval, cfg.exec));
        er.wall_seconds = seconds_since(t0);
        rec.epochs.push_back(er);
    }
    rec.final_accuracy = rec.epochs.empty()
                             ? mean_per_class_accuracy(build_confusion(model, src_eval, cfg.exec))
                             : rec.epochs.back().accuracy;
    rec.total_wall_seconds = seconds_since(run_start);
    return {std::move(model), std::move(rec)};
}

TrainResult adapt_sentry(Classifier model, const Dataset& src_train, Dataset& tgt_train,
                         const Dataset& tgt_test, const TrainConfig& cfg,
                         const std::string& checkpoint_dir) {
    cfg.validate();
    check_model_vs_data(model, src_train, "adapt: source");
    check_model_vs_data(model, tgt_train, "adapt: target");
    check_model_vs_data(model, tgt_test, "adapt: target test");
    if (!src_train.has_labels())
        throw std::invalid_argument("adapt: source train split must be fully labeled");
    const SelectionMode sel = cfg.selection;
    if (sel == SelectionMode::oracle_correct && !tgt_train.has_labels())
        throw std::invalid_argument(
            "adapt: oracle-correct selection needs target ground truth, which this dataset lacks");
    const bool log_gt = tgt_train.has_labels();  // evaluation-path diagnostics only

    RunRecord rec;
    const auto run_start = clock::now();
    const int c_count = model.spec().num_classes;

    // init pseudolabels: clean-input argmax over every target-train instance
    {
        std::vector<std::vector<double>> xs;
        xs.reserve(tgt_train.size());
        for (std::size_t i = 0; i < tgt_train.size(); ++i) xs.push_back(tgt_train.x(i));
        const auto preds = predict_batch(model, xs, cfg.exec);
        for (std::size_t i = 0; i < tgt_train.size(); ++i) tgt_train.set_pseudo(i, preds[i]);
    }

    SamplerState src_sampler(cfg.src_sampler, mix_seed(cfg.seed, "source-sampler"));
    src_sampler.build_pools(src_train);
    SamplerState tgt_sampler(cfg.tgt_sampler, mix_seed(cfg.seed, "target-sampler"));
    tgt_sampler.build_pools(tgt_train);

    Rng aug_rng(mix_seed(cfg.seed, "augment"));
    PseudoLabelQueue queue(cfg.queue, c_count);
    OptimizerState opt{cfg.opt};

    const int batches = std::min(batches_per_epoch(src_train.size(), cfg.batch),
                                 batches_per_epoch(tgt_train.size(), cfg.batch));
    const bool committees_needed =
        sel == SelectionMode::committee || sel == SelectionMode::oracle_correct;
    const CommitteeSetup setup{cfg.k,      cfg.n,
                               cfg.m,      cfg.voting,
                               tgt_train.geometry, cfg.severity_map};

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = clock::now();
        double ep_total = 0.0, ep_ce = 0.0, ep_ie = 0.0, ep_sentry = 0.0;
        std::int64_t seen = 0, n_min = 0, n_max = 0;
        std::vector<double> epoch_grad;

        for (int b = 0; b < batches; ++b) {
            const auto src_idx = src_sampler.next_batch(src_train, cfg.batch);
            const auto tgt_idx = tgt_sampler.next_batch(tgt_train, cfg.batch);
            const auto src_xs = gather_x(src_train, src_idx);
            std::vector<int> src_ys;
            src_ys.reserve(src_idx.size());
            for (std::size_t i : src_idx) src_ys.push_back(src_train.label(i));
            const auto tgt_xs = gather_x(tgt_train, tgt_idx);

            CommitteeBatch cb;
            std::vector<int> clean_preds;
            if (committees_needed) {
                // per-instance seeds drawn serially so committee application
                // can run in parallel without touching the stream
                std::vector<std::uint64_t> seeds(tgt_idx.size());
                for (auto& s : seeds) s = aug_rng.next_u64();
                cb = committee_eval(model, tgt_xs, seeds, setup, cfg.exec);
                clean_preds.reserve(cb.verdicts.size());
                for (const auto& v : cb.verdicts) clean_preds.push_back(v.clean_pred);
            } else {
                clean_preds = predict_batch(model, tgt_xs, cfg.exec);
            }

            // pre-step pseudolabel update, then enqueue in batch order
            for (std::size_t j = 0; j < tgt_idx.size(); ++j) {
                tgt_train.set_pseudo(tgt_idx[j], clean_preds[j]);
                queue.enqueue(clean_preds[j]);
            }
            const ClassDistribution q = queue.distribution();

            // selection: which instances contribute entropy terms, and on
            // which inputs
            std::vector<EntropyTerm> terms;
            std::vector<char> sel_min(tgt_idx.size(), 0), sel_max(tgt_idx.size(), 0);
            double term_norm = static_cast<double>(tgt_idx.size());
            double lambda_sentry = cfg.lambda_sentry;
            switch (sel) {
                case SelectionMode::committee:
                    terms = sentry_terms(cb.verdicts, cb.members, cfg.entmax,
                                         cfg.backprop_on_augmented, &tgt_xs);
                    for (std::size_t j = 0; j < cb.verdicts.size(); ++j) {
                        sel_min[j] = cb.verdicts[j].consistent;
                        sel_max[j] = cfg.entmax && !cb.verdicts[j].consistent;
                    }
                    break;
                case SelectionMode::all:
                    for (std::size_t j = 0; j < tgt_idx.size(); ++j) {
                        terms.push_back({&tgt_xs[j], +1.0});
                        sel_min[j] = 1;
                    }
                    break;
                case SelectionMode::oracle_correct:
                    for (std::size_t j = 0; j < tgt_idx.size(); ++j) {
                        // training-path label read by design: this mode is the
                        // label-informed upper bound
                        const bool correct = tgt_train.label(tgt_idx[j]) == clean_preds[j];
                        const std::vector<double>* x =
                            cfg.backprop_on_augmented ? &cb.members[j].back() : &tgt_xs[j];
                        if (correct) {
                            terms.push_back({x, +1.0});
                            sel_min[j] = 1;
                        } else if (cfg.entmax) {
                            terms.push_back({x, -1.0});
                            sel_max[j] = 1;
                        }
                    }
                    break;
                case SelectionMode::none:
                    lambda_sentry = 0.0;
                    term_norm = 1.0;
                    break;
            }

            const TotalLoss tl = compose_total(model, src_xs, src_ys, tgt_xs, terms, term_norm,
                                               q, cfg.lambda_ie, lambda_sentry, cfg.exec);
            ep_total += tl.total.value;
            ep_ce += tl.ce;
            ep_ie += tl.ie;
            ep_sentry += tl.sentry;

            for (std::size_t j = 0; j < tgt_idx.size(); ++j) {
                BatchVerdict bv;
                bv.epoch = epoch;
                bv.batch = b;
                bv.instance = static_cast<std::int64_t>(tgt_idx[j]);
                bv.clean_pred = clean_preds[j];
                if (committees_needed) {
                    bv.k = cfg.k;
                    for (char m : cb.verdicts[j].matches) bv.n_match += m ? 1 : 0;
                    bv.consistent = cb.verdicts[j].consistent;
                } else {
                    bv.consistent = sel == SelectionMode::all;
                }
                bv.selected_min = sel_min[j] != 0;
                bv.selected_max = sel_max[j] != 0;
                bv.gt = log_gt ? tgt_train.eval_label(tgt_idx[j]) : -1;
                rec.verdicts.push_back(bv);
                ++seen;
                n_min += bv.selected_min ? 1 : 0;
                n_max += bv.selected_max ? 1 : 0;
            }

            if (cfg.granularity == StepGranularity::batch) {
                grad_step(model, tl.total.grad, opt);
            } else {
                if (epoch_grad.empty()) epoch_grad.assign(tl.total.grad.size(), 0.0);
                for (std::size_t i = 0; i < tl.total.grad.size(); ++i)
                    epoch_grad[i] += tl.total.grad[i];
            }
        }
        if (cfg.granularity == StepGranularity::epoch) {
            for (auto& g : epoch_grad) g /= batches;
            grad_step(model, epoch_grad, opt);
        }

        refresh_pseudo_pools(tgt_sampler, tgt_train);

        EpochRecord er;
        er.epoch = epoch;
        er.loss_total = ep_total / batches;
        er.loss_ce = ep_ce / batches;
        er.loss_ie = ep_ie / batches;
        er.loss_sentry = ep_sentry / batches;
        er.accuracy = mean_per_class_accuracy(build_confusion(model, tgt_test, cfg.exec));
        if (seen > 0) {
            er.frac_min = static_cast<double>(n_min) / static_cast<double>(seen);
            er.frac_max = static_cast<double>(n_max) / static_cast<double>(seen);
        }
        const PrecisionRecord pr = checker_precision(rec.verdicts, epoch);
        if (pr.correct_given_consistent) er.precision_correct = *pr.correct_given_consistent;
        if (pr.incorrect_given_inconsistent)
            er.precision_incorrect = *pr.incorrect_given_inconsistent;
        er.pseudo_hist = tgt_train.pseudo_histogram().counts;
        er.wall_seconds = seconds_since(t0);
        rec.epochs.push_back(er);

        if (!checkpoint_dir.empty() && cfg.checkpoint_every > 0 &&
            (epoch + 1) % cfg.checkpoint_every == 0)
            save_checkpoint(checkpoint_dir + "/checkpoint_epoch" + std::to_string(epoch) + ".bin",
                            model, aug_rng.save_state());
    }

    rec.final_accuracy = rec.epochs.empty()
                             ? mean_per_class_accuracy(build_confusion(model, tgt_test, cfg.exec))
                             : rec.epochs.back().accuracy;
    rec.total_wall_seconds = seconds_since(run_start);
    return {std::move(model), std::move(rec)};
}

namespace {

void apply_axis(TrainConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "k") cfg.k = std::stoi(value);
    else if (key == "n") cfg.n = std::stoi(value);
    else if (key == "voting") cfg.voting = parse_voting(value);
    else if (key == "selection") cfg.selection = parse_selection_mode(value);
    else if (key == "entmax") cfg.entmax = value == "true";
    else if (key == "src_sampler") cfg.src_sampler = parse_sampler_mode(value);
    else if (key == "tgt_sampler") cfg.tgt_sampler = parse_sampler_mode(value);
    else if (key == "backprop_augmented") cfg.backprop_on_augmented = value == "true";
    else throw ConfigError("grid." + key + ": not a grid axis");
}

}  // namespace

std::vector<GridCell> run_ablation_grid(const Classifier& pretrained, const Dataset& src_train,
                                        const Dataset& tgt_train, const Dataset& tgt_test,
                                        const TrainConfig& base,
                                        const std::vector<GridAxis>& axes) {
    if (axes.empty()) throw ConfigError("grid: no axes configured");
    for (const auto& axis : axes)
        if (axis.values.empty()) throw ConfigError("grid." + axis.key + ": empty value list");

    std::vector<GridCell> cells;
    std::vector<std::size_t> pick(axes.size(), 0);
    while (true) {
        GridCell cell{"", base, {pretrained, {}}};
        for (std::size_t a = 0; a < axes.size(); ++a) {
            if (a) cell.name += ' ';
            cell.name += axes[a].key + "=" + axes[a].values[pick[a]];
            apply_axis(cell.cfg, axes[a].key, axes[a].values[pick[a]]);
        }
        Dataset tgt_copy = tgt_train;  // fresh pseudolabels per cell
        cell.result = adapt_sentry(pretrained, src_train, tgt_copy, tgt_test, cell.cfg);
        cells.push_back(std::move(cell));

        std::size_t a = 0;
        for (; a < axes.size(); ++a) {
            if (++pick[a] < axes[a].values.size()) break;
            pick[a] = 0;
        }
        if (a == axes.size()) break;
    }
    return cells;
}

}  // namespace sentry
