#include "sentry/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sentry {

std::int64_t& ConfusionMatrix::at(int truth, int pred) {
    return counts.at(static_cast<std::size_t>(truth) * num_classes + pred);
}

std::int64_t ConfusionMatrix::at(int truth, int pred) const {
    return counts.at(static_cast<std::size_t>(truth) * num_classes + pred);
}

ConfusionMatrix build_confusion(const Classifier& model, const Dataset& ds, Exec exec) {
    ConfusionMatrix cm;
    cm.num_classes = ds.num_classes();
    cm.counts.assign(static_cast<std::size_t>(cm.num_classes) * cm.num_classes, 0);
    std::vector<std::vector<double>> xs;
    xs.reserve(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) xs.push_back(ds.x(i));
    const auto preds = predict_batch(model, xs, exec);
    for (std::size_t i = 0; i < ds.size(); ++i) ++cm.at(ds.eval_label(i), preds[i]);
    return cm;
}

double mean_per_class_accuracy(const ConfusionMatrix& cm) {
    if (cm.num_classes < 1) throw std::invalid_argument("confusion matrix is empty");
    double sum = 0.0;
    for (int t = 0; t < cm.num_classes; ++t) {
        std::int64_t row = 0;
        for (int p = 0; p < cm.num_classes; ++p) row += cm.at(t, p);
        if (row == 0)
            throw std::invalid_argument("mean per-class accuracy: class " + std::to_string(t) +
                                        " has no test examples");
        sum += static_cast<double>(cm.at(t, t)) / static_cast<double>(row);
    }
    return sum / cm.num_classes;
}

PrecisionRecord checker_precision(const std::vector<CommitteeVerdict>& verdicts,
                                  const std::vector<int>& ground_truth) {
    if (verdicts.size() != ground_truth.size())
        throw std::invalid_argument("checker_precision: " + std::to_string(verdicts.size()) +
                                    " verdicts vs " + std::to_string(ground_truth.size()) +
                                    " labels");
    std::int64_t n_cons = 0, n_cons_correct = 0, n_inc = 0, n_inc_wrong = 0;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        if (verdicts[i].consistent) {
            ++n_cons;
            if (verdicts[i].clean_pred == ground_truth[i]) ++n_cons_correct;
        } else {
            ++n_inc;
            if (verdicts[i].clean_pred != ground_truth[i]) ++n_inc_wrong;
        }
    }
    PrecisionRecord out;
    if (n_cons > 0)
        out.correct_given_consistent = static_cast<double>(n_cons_correct) / n_cons;
    if (n_inc > 0) out.incorrect_given_inconsistent = static_cast<double>(n_inc_wrong) / n_inc;
    return out;
}

PrecisionRecord checker_precision(const std::vector<BatchVerdict>& verdicts, int epoch) {
    std::int64_t n_cons = 0, n_cons_correct = 0, n_inc = 0, n_inc_wrong = 0;
    for (const auto& v : verdicts) {
        if (v.epoch != epoch || v.gt < 0) continue;
        if (v.consistent) {
            ++n_cons;
            if (v.clean_pred == v.gt) ++n_cons_correct;
        } else {
            ++n_inc;
            if (v.clean_pred != v.gt) ++n_inc_wrong;
        }
    }
    PrecisionRecord out;
    if (n_cons > 0)
        out.correct_given_consistent = static_cast<double>(n_cons_correct) / n_cons;
    if (n_inc > 0) out.incorrect_given_inconsistent = static_cast<double>(n_inc_wrong) / n_inc;
    return out;
}

GradientCorrelation gradient_correlation_study(const std::vector<double>& p_grid) {
    GradientCorrelation out;
    out.table.reserve(p_grid.size());
    std::vector<double> em, bce;
    for (double p : p_grid) {
        if (p <= 0.0 || p >= 1.0)
            throw std::invalid_argument("gradient study: p=" + std::to_string(p) +
                                        " outside (0,1)");
        GradientPoint pt;
        pt.p = p;
        pt.d_em = std::log(p / (1.0 - p));
        pt.d_bce = 1.0 / (1.0 - p);
        out.table.push_back(pt);
        em.push_back(pt.d_em);
        bce.push_back(pt.d_bce);
    }
    out.pearson = pearson_correlation(em, bce);
    return out;
}

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("pearson: need two equal-length series of >= 2 points");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) throw std::invalid_argument("pearson: constant series");
    return sab / std::sqrt(saa * sbb);
}

SelectionSeries selection_fraction_series(const RunRecord& run, int num_classes) {
    int max_epoch = -1;
    for (const auto& v : run.verdicts) max_epoch = std::max(max_epoch, v.epoch);
    SelectionSeries out;
    out.frac_min.assign(max_epoch + 1, 0.0);
    out.frac_max.assign(max_epoch + 1, 0.0);
    out.per_class_frac_min.assign(max_epoch + 1, std::vector<double>(num_classes, 0.0));

    std::vector<std::int64_t> seen(max_epoch + 1, 0), mins(max_epoch + 1, 0),
        maxs(max_epoch + 1, 0);
    std::vector<std::vector<std::int64_t>> cls_seen(max_epoch + 1,
                                                    std::vector<std::int64_t>(num_classes, 0));
    std::vector<std::vector<std::int64_t>> cls_min(max_epoch + 1,
                                                   std::vector<std::int64_t>(num_classes, 0));
    for (const auto& v : run.verdicts) {
        ++seen[v.epoch];
        if (v.selected_min) ++mins[v.epoch];
        if (v.selected_max) ++maxs[v.epoch];
        if (v.gt >= 0 && v.gt < num_classes) {
            ++cls_seen[v.epoch][v.gt];
            if (v.selected_min) ++cls_min[v.epoch][v.gt];
        }
    }
    for (int e = 0; e <= max_epoch; ++e) {
        if (seen[e] > 0) {
            out.frac_min[e] = static_cast<double>(mins[e]) / seen[e];
            out.frac_max[e] = static_cast<double>(maxs[e]) / seen[e];
        }
        for (int c = 0; c < num_classes; ++c)
            if (cls_seen[e][c] > 0)
                out.per_class_frac_min[e][c] =
                    static_cast<double>(cls_min[e][c]) / cls_seen[e][c];
    }
    return out;
}

}  // namespace sentry
