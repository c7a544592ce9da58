#include "sentry/run_record.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace sentry {

std::string format_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary: no platform newline games
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    return out;
}

}  // namespace

void write_epochs_csv(const std::string& path, const RunRecord& run) {
    auto out = open_out(path);
    const std::size_t c_count = run.epochs.empty() ? 0 : run.epochs.front().pseudo_hist.size();
    out << "epoch,loss_total,loss_ce,loss_ie,loss_sentry,accuracy,frac_min,frac_max,"
           "precision_correct,precision_incorrect";
    for (std::size_t c = 0; c < c_count; ++c) out << ",pseudo_c" << c;
    out << "\n";
    for (const auto& e : run.epochs) {
        out << e.epoch << ',' << format_double(e.loss_total) << ',' << format_double(e.loss_ce)
            << ',' << format_double(e.loss_ie) << ',' << format_double(e.loss_sentry) << ','
            << format_double(e.accuracy) << ',' << format_double(e.frac_min) << ','
            << format_double(e.frac_max) << ',';
        if (e.precision_correct >= 0.0) out << format_double(e.precision_correct);
        out << ',';
        if (e.precision_incorrect >= 0.0) out << format_double(e.precision_incorrect);
        if (e.pseudo_hist.size() != c_count)
            throw std::logic_error("epochs.csv: ragged pseudo histogram");
        for (std::int64_t h : e.pseudo_hist) out << ',' << h;
        out << "\n";
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

void write_batches_csv(const std::string& path, const RunRecord& run) {
    auto out = open_out(path);
    out << "epoch,batch,instance,clean_pred,n_match,k,consistent,selected_min,selected_max,gt\n";
    for (const auto& v : run.verdicts) {
        out << v.epoch << ',' << v.batch << ',' << v.instance << ',' << v.clean_pred << ','
            << v.n_match << ',' << v.k << ',' << int{v.consistent} << ',' << int{v.selected_min}
            << ',' << int{v.selected_max} << ',' << v.gt << "\n";
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace sentry
