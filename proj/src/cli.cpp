#include "sentry/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "sentry/checkpoint.hpp"
#include "sentry/idx_io.hpp"
#include "sentry/metrics.hpp"
#include "sentry/svg.hpp"
#include "sentry/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sentry {

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

void write_histogram_csv(const std::string& path, const LabelHistogram& hist) {
    std::ostringstream out;
    out << "class,count\n";
    for (std::size_t c = 0; c < hist.counts.size(); ++c)
        out << c << ',' << hist.counts[c] << '\n';
    write_text(path, out.str());
}

std::vector<int> identity_order(int num_classes) {
    std::vector<int> order(num_classes);
    std::iota(order.begin(), order.end(), 0);
    return order;
}

json histogram_json(const LabelHistogram& hist) {
    json j;
    j["counts"] = hist.counts;
    j["total"] = hist.total();
    bool has_zero = false;
    for (auto c : hist.counts) has_zero = has_zero || c == 0;
    if (!has_zero) j["imbalance_factor"] = hist.imbalance_factor();
    return j;
}

json epoch_json(const EpochRecord& er) {
    json j;
    j["epoch"] = er.epoch;
    j["loss_total"] = er.loss_total;
    j["loss_ce"] = er.loss_ce;
    j["loss_ie"] = er.loss_ie;
    j["loss_sentry"] = er.loss_sentry;
    j["accuracy"] = er.accuracy;
    j["frac_min"] = er.frac_min;
    j["frac_max"] = er.frac_max;
    if (er.precision_correct >= 0) j["precision_correct"] = er.precision_correct;
    if (er.precision_incorrect >= 0) j["precision_incorrect"] = er.precision_incorrect;
    j["wall_seconds"] = er.wall_seconds;
    return j;
}

json run_json(const RunRecord& rec) {
    json j;
    j["final_accuracy"] = rec.final_accuracy;
    j["total_wall_seconds"] = rec.total_wall_seconds;
    j["epochs"] = rec.epochs.size();
    if (!rec.epochs.empty()) j["last_epoch"] = epoch_json(rec.epochs.back());
    return j;
}

std::vector<double> iota_x(std::size_t n) {
    std::vector<double> x(n);
    std::iota(x.begin(), x.end(), 0.0);
    return x;
}

void write_run_charts(const std::string& dir, const RunRecord& rec) {
    if (rec.epochs.empty()) return;
    const std::size_t e = rec.epochs.size();
    SvgSeries acc{"mean per-class accuracy", iota_x(e), {}};
    SvgSeries lt{"total", iota_x(e), {}}, lc{"cross-entropy", iota_x(e), {}},
        li{"information maximization", iota_x(e), {}}, ls{"selective entropy", iota_x(e), {}};
    SvgSeries fmin{"entropy-min fraction", iota_x(e), {}},
        fmax{"entropy-max fraction", iota_x(e), {}};
    SvgSeries pc{"P(correct | consistent)", {}, {}}, pi{"P(incorrect | inconsistent)", {}, {}};
    for (const auto& er : rec.epochs) {
        acc.y.push_back(er.accuracy);
        lt.y.push_back(er.loss_total);
        lc.y.push_back(er.loss_ce);
        li.y.push_back(er.loss_ie);
        ls.y.push_back(er.loss_sentry);
        fmin.y.push_back(er.frac_min);
        fmax.y.push_back(er.frac_max);
        if (er.precision_correct >= 0) {
            pc.x.push_back(er.epoch);
            pc.y.push_back(er.precision_correct);
        }
        if (er.precision_incorrect >= 0) {
            pi.x.push_back(er.epoch);
            pi.y.push_back(er.precision_incorrect);
        }
    }
    write_line_chart_svg(dir + "/accuracy.svg", "target accuracy", "epoch", "accuracy", {acc});
    write_line_chart_svg(dir + "/loss.svg", "loss components", "epoch", "loss",
                         {lt, lc, li, ls});
    write_line_chart_svg(dir + "/selection_fractions.svg", "selection fractions", "epoch",
                         "fraction of batch", {fmin, fmax});
    std::vector<SvgSeries> prec;
    if (!pc.x.empty()) prec.push_back(pc);
    if (!pi.x.empty()) prec.push_back(pi);
    if (!prec.empty())
        write_line_chart_svg(dir + "/precision.svg", "consistency checker precision", "epoch",
                             "precision", prec);
}

void write_run_outputs(const std::string& dir, const RunRecord& rec, bool with_batches) {
    write_epochs_csv(dir + "/epochs.csv", rec);
    if (with_batches) write_batches_csv(dir + "/batches.csv", rec);
    write_run_charts(dir, rec);
}

Classifier make_model(const RunConfig& cfg, int input_dim, int num_classes) {
    ClassifierSpec spec;
    spec.input_dim = input_dim;
    spec.hidden = cfg.train.hidden;
    spec.num_classes = num_classes;
    spec.temperature = cfg.train.temperature;
    Rng rng(mix_seed(cfg.seed, "model-init"));
    return Classifier(spec, rng);
}

Classifier pretrained_model(const RunConfig& cfg, const DatasetPair& data) {
    if (!cfg.train.init_checkpoint.empty()) {
        Classifier model = load_checkpoint(cfg.train.init_checkpoint);
        if (model.spec().input_dim != data.src_train.dim() ||
            model.spec().num_classes != data.src_train.num_classes())
            throw std::runtime_error("init checkpoint shape does not match the data");
        return model;
    }
    Classifier model = make_model(cfg, data.src_train.dim(), data.src_train.num_classes());
    return train_source(std::move(model), data.src_train, data.src_test, cfg.train,
                        cfg.train.source_epochs)
        .model;
}

int cmd_build_data(const RunConfig& cfg, const DatasetPair& data) {
    const std::string dir = cfg.out_dir;
    write_histogram_csv(dir + "/src_train_hist.csv", data.src_train.label_histogram());
    write_histogram_csv(dir + "/src_test_hist.csv", data.src_test.label_histogram());
    write_histogram_csv(dir + "/tgt_train_hist.csv", data.tgt_train.label_histogram());
    write_histogram_csv(dir + "/tgt_test_hist.csv", data.tgt_test.label_histogram());
    json j;
    j["command"] = "build-data";
    j["src_train"] = histogram_json(data.src_train.label_histogram());
    j["src_test"] = histogram_json(data.src_test.label_histogram());
    j["tgt_train"] = histogram_json(data.tgt_train.label_histogram());
    j["tgt_test"] = histogram_json(data.tgt_test.label_histogram());
    j["dim"] = data.src_train.dim();
    write_text(dir + "/summary.txt", j.dump(2) + "\n");
    std::cout << "wrote histograms and summary to " << dir << "\n";
    return 0;
}

int cmd_train_source(const RunConfig& cfg, const DatasetPair& data) {
    Classifier model = make_model(cfg, data.src_train.dim(), data.src_train.num_classes());
    TrainResult res = train_source(std::move(model), data.src_train, data.src_test, cfg.train,
                                   cfg.train.source_epochs);
    const std::string dir = cfg.out_dir;
    write_run_outputs(dir, res.record, false);
    save_checkpoint(dir + "/model.bin", res.model, "");
    json j = run_json(res.record);
    j["command"] = "train-source";
    write_text(dir + "/summary.txt", j.dump(2) + "\n");
    std::cout << "source accuracy " << res.record.final_accuracy << ", outputs in " << dir
              << "\n";
    return 0;
}

int cmd_adapt(const RunConfig& cfg, DatasetPair& data) {
    Classifier model = pretrained_model(cfg, data);
    const double before =
        mean_per_class_accuracy(build_confusion(model, data.tgt_test, cfg.train.exec));
    TrainResult res = adapt_sentry(std::move(model), data.src_train, data.tgt_train,
                                   data.tgt_test, cfg.train, cfg.out_dir);
    const std::string dir = cfg.out_dir;
    write_run_outputs(dir, res.record, true);
    save_checkpoint(dir + "/model.bin", res.model, "");
    json j = run_json(res.record);
    j["command"] = "adapt";
    j["selection"] = selection_mode_name(cfg.train.selection);
    j["accuracy_before_adaptation"] = before;
    write_text(dir + "/summary.txt", j.dump(2) + "\n");
    std::cout << "target accuracy " << before << " -> " << res.record.final_accuracy
              << ", outputs in " << dir << "\n";
    return 0;
}

std::string cell_dir_name(const std::string& cell_name) {
    std::string s = cell_name;
    for (auto& ch : s)
        if (ch == ' ') ch = '_';
    return s;
}

int cmd_grid(const RunConfig& cfg, DatasetPair& data) {
    Classifier model = pretrained_model(cfg, data);
    const auto cells = run_ablation_grid(model, data.src_train, data.tgt_train, data.tgt_test,
                                         cfg.train, cfg.grid);
    const std::string dir = cfg.out_dir;
    std::ostringstream table;
    table << "cell,final_accuracy,frac_min_last,frac_max_last\n";
    json j;
    j["command"] = "grid";
    json jcells = json::array();
    for (const auto& cell : cells) {
        const std::string cdir = dir + "/cells/" + cell_dir_name(cell.name);
        fs::create_directories(cdir);
        write_run_outputs(cdir, cell.result.record, true);
        json cj = run_json(cell.result.record);
        cj["cell"] = cell.name;
        write_text(cdir + "/summary.txt", cj.dump(2) + "\n");
        jcells.push_back(cj);
        const auto& eps = cell.result.record.epochs;
        table << '"' << cell.name << "\"," << format_double(cell.result.record.final_accuracy)
              << ',' << format_double(eps.empty() ? 0.0 : eps.back().frac_min) << ','
              << format_double(eps.empty() ? 0.0 : eps.back().frac_max) << '\n';
    }
    write_text(dir + "/grid_summary.csv", table.str());
    j["cells"] = jcells;
    write_text(dir + "/summary.txt", j.dump(2) + "\n");
    std::cout << cells.size() << " grid cells, outputs in " << dir << "\n";
    return 0;
}

int cmd_analyze(const RunConfig& cfg) {
    const std::string dir = cfg.out_dir;

    // closed-form gradient comparison on a wrong-class probability grid
    std::vector<double> grid;
    for (int i = 1; i < 100; ++i) grid.push_back(0.5 + 0.5 * i / 100.0);
    const GradientCorrelation gc = gradient_correlation_study(grid);
    std::ostringstream out;
    out << "p,d_entropy_max,d_bce\n";
    for (const auto& pt : gc.table)
        out << format_double(pt.p) << ',' << format_double(pt.d_em) << ','
            << format_double(pt.d_bce) << '\n';
    write_text(dir + "/gradient_correlation.csv", out.str());
    SvgSeries em{"entropy maximization", {}, {}}, bce{"binary CE (flip target)", {}, {}};
    for (const auto& pt : gc.table) {
        em.x.push_back(pt.p);
        em.y.push_back(pt.d_em);
        bce.x.push_back(pt.p);
        bce.y.push_back(pt.d_bce);
    }
    write_line_chart_svg(dir + "/gradient_correlation.svg",
                         "gradient magnitude vs wrong-class probability", "p(wrong class)",
                         "d loss / d p", {em, bce});
    json j;
    j["command"] = "analyze";
    j["gradient_pearson"] = gc.pearson;

    if (!cfg.analyze_run_dir.empty()) {
        RunRecord rec;
        rec.verdicts = read_batches_csv(cfg.analyze_run_dir + "/batches.csv");
        int num_classes = 0;
        for (const auto& v : rec.verdicts)
            num_classes = std::max(num_classes, std::max(v.clean_pred, v.gt) + 1);
        if (rec.verdicts.empty()) throw std::runtime_error("no verdicts logged in that run");
        const SelectionSeries series = selection_fraction_series(rec, num_classes);
        const std::size_t e = series.frac_min.size();
        write_line_chart_svg(
            dir + "/selection_fractions.svg", "selection fractions (replayed)", "epoch",
            "fraction of batch",
            {{"entropy-min fraction", iota_x(e), series.frac_min},
             {"entropy-max fraction", iota_x(e), series.frac_max}});
        std::ostringstream pcs;
        pcs << "epoch";
        for (int c = 0; c < num_classes; ++c) pcs << ",class" << c;
        pcs << '\n';
        for (std::size_t ep = 0; ep < series.per_class_frac_min.size(); ++ep) {
            pcs << ep;
            for (double f : series.per_class_frac_min[ep]) pcs << ',' << format_double(f);
            pcs << '\n';
        }
        write_text(dir + "/per_class_selection.csv", pcs.str());
        SvgSeries ppc{"P(correct | consistent)", {}, {}}, ppi{"P(incorrect | inconsistent)", {}, {}};
        int max_epoch = -1;
        for (const auto& v : rec.verdicts) max_epoch = std::max(max_epoch, v.epoch);
        for (int ep = 0; ep <= max_epoch; ++ep) {
            const PrecisionRecord pr = checker_precision(rec.verdicts, ep);
            if (pr.correct_given_consistent) {
                ppc.x.push_back(ep);
                ppc.y.push_back(*pr.correct_given_consistent);
            }
            if (pr.incorrect_given_inconsistent) {
                ppi.x.push_back(ep);
                ppi.y.push_back(*pr.incorrect_given_inconsistent);
            }
        }
        std::vector<SvgSeries> prec;
        if (!ppc.x.empty()) prec.push_back(ppc);
        if (!ppi.x.empty()) prec.push_back(ppi);
        if (!prec.empty())
            write_line_chart_svg(dir + "/precision.svg",
                                 "consistency checker precision (replayed)", "epoch",
                                 "precision", prec);
        j["replayed_run"] = cfg.analyze_run_dir;
        j["replayed_epochs"] = e;
    }
    write_text(dir + "/summary.txt", j.dump(2) + "\n");
    std::cout << "analysis written to " << dir << "\n";
    return 0;
}

}  // namespace

DatasetPair build_datasets(const RunConfig& cfg) {
    DatasetPair pair = [&] {
        if (cfg.data.kind == "synthetic") {
            Rng rng(mix_seed(cfg.seed, "data"));
            return make_synthetic_pair(rng, cfg.data.synth);
        }
        // idx: the two domains share the covariates; the shift is injected
        // through the target label profile alone
        Dataset src_train = load_idx(cfg.data.images, cfg.data.labels, Domain::source,
                                     Split::train, cfg.data.idx_classes);
        const bool own_test = !cfg.data.test_images.empty();
        Dataset src_test = own_test
                               ? load_idx(cfg.data.test_images, cfg.data.test_labels,
                                          Domain::source, Split::test, cfg.data.idx_classes)
                               : load_idx(cfg.data.images, cfg.data.labels, Domain::source,
                                          Split::test, cfg.data.idx_classes);
        Dataset tgt_train = load_idx(cfg.data.images, cfg.data.labels, Domain::target,
                                     Split::train, cfg.data.idx_classes);
        Dataset tgt_test = own_test
                               ? load_idx(cfg.data.test_images, cfg.data.test_labels,
                                          Domain::target, Split::test, cfg.data.idx_classes)
                               : load_idx(cfg.data.images, cfg.data.labels, Domain::target,
                                          Split::test, cfg.data.idx_classes);
        return DatasetPair{std::move(src_train), std::move(src_test), std::move(tgt_train),
                           std::move(tgt_test)};
    }();
    if (cfg.data.target_if > 1.0 || cfg.data.target_total > 0) {
        Rng rng(mix_seed(cfg.seed, "long-tail"));
        const std::vector<int> order = cfg.data.class_order.empty()
                                           ? identity_order(pair.tgt_train.num_classes())
                                           : cfg.data.class_order;
        auto [tailed, hist] =
            long_tail(rng, pair.tgt_train, cfg.data.target_if, order, cfg.data.target_total);
        (void)hist;
        pair.tgt_train = std::move(tailed);
    }
    return pair;
}

std::vector<BatchVerdict> read_batches_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    const std::string expect =
        "epoch,batch,instance,clean_pred,n_match,k,consistent,selected_min,selected_max,gt";
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expect) throw std::runtime_error(path + ": unexpected header: " + line);
    std::vector<BatchVerdict> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (fields.size() != 10)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected 10 fields, got " + std::to_string(fields.size()));
        BatchVerdict v;
        v.epoch = std::stoi(fields[0]);
        v.batch = std::stoi(fields[1]);
        v.instance = std::stoll(fields[2]);
        v.clean_pred = std::stoi(fields[3]);
        v.n_match = std::stoi(fields[4]);
        v.k = std::stoi(fields[5]);
        v.consistent = fields[6] == "1";
        v.selected_min = fields[7] == "1";
        v.selected_max = fields[8] == "1";
        v.gt = std::stoi(fields[9]);
        out.push_back(v);
    }
    return out;
}

int execute(const RunConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    write_text(cfg.out_dir + "/resolved.cfg", serialize_config(cfg));
    if (cfg.command == Command::analyze) return cmd_analyze(cfg);
    DatasetPair data = build_datasets(cfg);
    switch (cfg.command) {
        case Command::build_data:
            return cmd_build_data(cfg, data);
        case Command::train_source:
            return cmd_train_source(cfg, data);
        case Command::adapt:
            return cmd_adapt(cfg, data);
        case Command::grid:
            return cmd_grid(cfg, data);
        case Command::analyze:
            break;
    }
    throw std::logic_error("unreachable command");
}

}  // namespace sentry
