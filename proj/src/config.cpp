#include "sentry/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sentry/run_record.hpp"

namespace sentry {

SelectionMode parse_selection_mode(const std::string& name) {
    if (name == "committee") return SelectionMode::committee;
    if (name == "all") return SelectionMode::all;
    if (name == "oracle-correct") return SelectionMode::oracle_correct;
    if (name == "none") return SelectionMode::none;
    throw ConfigError("unknown selection mode '" + name +
                      "' (want committee|all|oracle-correct|none)");
}

const char* selection_mode_name(SelectionMode mode) {
    switch (mode) {
        case SelectionMode::committee: return "committee";
        case SelectionMode::all: return "all";
        case SelectionMode::oracle_correct: return "oracle-correct";
        case SelectionMode::none: return "none";
    }
    return "?";
}

Voting parse_voting(const std::string& name) {
    if (name == "majority") return Voting::majority;
    if (name == "unanimous") return Voting::unanimous;
    throw ConfigError("unknown voting mode '" + name + "' (want majority|unanimous)");
}

const char* voting_name(Voting v) { return v == Voting::majority ? "majority" : "unanimous"; }

Command parse_command(const std::string& name) {
    if (name == "build-data") return Command::build_data;
    if (name == "train-source") return Command::train_source;
    if (name == "adapt") return Command::adapt;
    if (name == "grid") return Command::grid;
    if (name == "analyze") return Command::analyze;
    throw ConfigError("unknown command '" + name + "'");
}

const char* command_name(Command c) {
    switch (c) {
        case Command::build_data: return "build-data";
        case Command::train_source: return "train-source";
        case Command::adapt: return "adapt";
        case Command::grid: return "grid";
        case Command::analyze: return "analyze";
    }
    return "?";
}

void TrainConfig::validate() const {
    if (source_epochs < 0 || epochs < 0) throw ConfigError("train: epochs must be >= 0");
    if (batch < 1) throw ConfigError("train.batch: must be >= 1");
    if (!(opt.lr > 0.0)) throw ConfigError("train.lr: must be > 0");
    if (lambda_ie < 0.0) throw ConfigError("train.lambda_ie: must be >= 0");
    if (lambda_sentry < 0.0) throw ConfigError("train.lambda_sentry: must be >= 0");
    if (k < 1) throw ConfigError("train.k: must be >= 1");
    if (n < 1) throw ConfigError("train.n: must be >= 1");
    if (m < 0.0) throw ConfigError("train.m: must be >= 0");
    if (!(temperature > 0.0)) throw ConfigError("model.temperature: must be > 0");
    if (queue < 1) throw ConfigError("train.queue: must be >= 1");
    if (checkpoint_every < 0) throw ConfigError("train.checkpoint_every: must be >= 0");
    for (int h : hidden)
        if (h < 1) throw ConfigError("model.hidden: widths must be >= 1");
}

void RunConfig::validate() const {
    train.validate();
    if (data.kind != "synthetic" && data.kind != "idx")
        throw ConfigError("data.kind: unknown kind '" + data.kind + "' (want synthetic|idx)");
    if (data.target_if < 1.0) throw ConfigError("data.target_if: must be >= 1");
    if (data.target_total < 0) throw ConfigError("data.target_total: must be >= 0");
    if (data.kind == "synthetic") {
        if (data.synth.num_classes < 2) throw ConfigError("data.classes: must be >= 2");
        if (data.synth.dim < 2) throw ConfigError("data.dim: must be >= 2");
    } else if (data.images.empty() || data.labels.empty()) {
        throw ConfigError("data.kind=idx needs data.images and data.labels");
    }
    if (out_dir.empty()) throw ConfigError("out_dir: must not be empty");
    static const char* axis_keys[] = {"k",      "n",           "voting",
                                      "selection", "entmax",      "src_sampler",
                                      "tgt_sampler", "backprop_augmented"};
    for (const auto& axis : grid) {
        const bool known = std::any_of(std::begin(axis_keys), std::end(axis_keys),
                                       [&](const char* a) { return axis.key == a; });
        if (!known) throw ConfigError("grid." + axis.key + ": not a grid axis");
        if (axis.values.empty()) throw ConfigError("grid." + axis.key + ": empty value list");
    }
}

namespace {

int to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const int out = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return out;
    } catch (...) {
        throw ConfigError(key + ": '" + v + "' is not an integer");
    }
}

std::int64_t to_i64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const std::int64_t out = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return out;
    } catch (...) {
        throw ConfigError(key + ": '" + v + "' is not an integer");
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const std::uint64_t out = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return out;
    } catch (...) {
        throw ConfigError(key + ": '" + v + "' is not an unsigned integer");
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size() || !std::isfinite(out)) throw std::invalid_argument("");
        return out;
    } catch (...) {
        throw ConfigError(key + ": '" + v + "' is not a finite number");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError(key + ": '" + v + "' is not a boolean (want true|false)");
}

std::vector<std::string> split_csv(const std::string& v) {
    std::vector<std::string> out;
    if (v.empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto comma = v.find(',', start);
        out.push_back(v.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    for (const auto& s : split_csv(v)) out.push_back(to_int(key, s));
    return out;
}

std::vector<double> to_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& s : split_csv(v)) out.push_back(to_double(key, s));
    return out;
}

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    return out;
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

}  // namespace

void apply_kv(RunConfig& cfg, const std::string& key, const std::string& value) {
    auto& t = cfg.train;
    auto& d = cfg.data;
    auto& sm = t.severity_map;

    if (key == "seed") {
        cfg.seed = to_u64(key, value);
        t.seed = cfg.seed;
    } else if (key == "out_dir") {
        cfg.out_dir = value;
    } else if (key == "exec") {
        if (value == "serial") t.exec = Exec::serial;
        else if (value == "parallel") t.exec = Exec::parallel;
        else throw ConfigError("exec: '" + value + "' (want serial|parallel)");
    } else if (key == "data.kind") {
        d.kind = value;
    } else if (key == "data.classes") {
        d.synth.num_classes = to_int(key, value);
    } else if (key == "data.dim") {
        d.synth.dim = to_int(key, value);
    } else if (key == "data.train_per_domain") {
        d.synth.train_per_domain = to_int(key, value);
    } else if (key == "data.test_per_domain") {
        d.synth.test_per_domain = to_int(key, value);
    } else if (key == "data.class_sep") {
        d.synth.class_sep = to_double(key, value);
    } else if (key == "data.noise_sigma") {
        d.synth.noise_sigma = to_double(key, value);
    } else if (key == "data.shift_rotation") {
        d.synth.shift_rotation = to_double(key, value);
    } else if (key == "data.shift_translation") {
        d.synth.shift_translation = to_double(key, value);
    } else if (key == "data.shift_noise") {
        d.synth.shift_noise = to_double(key, value);
    } else if (key == "data.source_probs") {
        d.synth.source_probs = to_double_list(key, value);
    } else if (key == "data.target_probs") {
        d.synth.target_probs = to_double_list(key, value);
    } else if (key == "data.target_if") {
        d.target_if = to_double(key, value);
    } else if (key == "data.target_total") {
        d.target_total = to_i64(key, value);
    } else if (key == "data.class_order") {
        d.class_order = to_int_list(key, value);
    } else if (key == "data.images") {
        d.images = value;
    } else if (key == "data.labels") {
        d.labels = value;
    } else if (key == "data.test_images") {
        d.test_images = value;
    } else if (key == "data.test_labels") {
        d.test_labels = value;
    } else if (key == "data.idx_classes") {
        d.idx_classes = to_int(key, value);
    } else if (key == "model.hidden") {
        t.hidden = to_int_list(key, value);
    } else if (key == "model.temperature") {
        t.temperature = to_double(key, value);
    } else if (key == "train.source_epochs") {
        t.source_epochs = to_int(key, value);
    } else if (key == "train.epochs") {
        t.epochs = to_int(key, value);
    } else if (key == "train.batch") {
        t.batch = to_int(key, value);
    } else if (key == "train.optimizer") {
        try {
            t.opt.kind = parse_opt_kind(value);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("train.optimizer: " + std::string(e.what()));
        }
    } else if (key == "train.lr") {
        t.opt.lr = to_double(key, value);
    } else if (key == "train.momentum") {
        t.opt.momentum = to_double(key, value);
    } else if (key == "train.beta1") {
        t.opt.beta1 = to_double(key, value);
    } else if (key == "train.beta2") {
        t.opt.beta2 = to_double(key, value);
    } else if (key == "train.adam_eps") {
        t.opt.eps = to_double(key, value);
    } else if (key == "train.lambda_ie") {
        t.lambda_ie = to_double(key, value);
    } else if (key == "train.lambda_sentry") {
        t.lambda_sentry = to_double(key, value);
    } else if (key == "train.k") {
        t.k = to_int(key, value);
    } else if (key == "train.n") {
        t.n = to_int(key, value);
    } else if (key == "train.m") {
        t.m = to_double(key, value);
    } else if (key == "train.queue") {
        t.queue = to_int(key, value);
    } else if (key == "train.voting") {
        t.voting = parse_voting(value);
    } else if (key == "train.selection") {
        t.selection = parse_selection_mode(value);
    } else if (key == "train.entmax") {
        t.entmax = to_bool(key, value);
    } else if (key == "train.backprop_augmented") {
        t.backprop_on_augmented = to_bool(key, value);
    } else if (key == "train.src_sampler") {
        try {
            t.src_sampler = parse_sampler_mode(value);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("train.src_sampler: " + std::string(e.what()));
        }
    } else if (key == "train.tgt_sampler") {
        try {
            t.tgt_sampler = parse_sampler_mode(value);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("train.tgt_sampler: " + std::string(e.what()));
        }
    } else if (key == "train.granularity") {
        if (value == "batch") t.granularity = StepGranularity::batch;
        else if (value == "epoch") t.granularity = StepGranularity::epoch;
        else throw ConfigError("train.granularity: '" + value + "' (want batch|epoch)");
    } else if (key == "train.checkpoint_every") {
        t.checkpoint_every = to_int(key, value);
    } else if (key == "train.init_checkpoint") {
        t.init_checkpoint = value;
    } else if (key == "augment.noise_sigma") {
        sm.noise_sigma = to_double(key, value);
    } else if (key == "augment.feature_scale") {
        sm.feature_scale = to_double(key, value);
    } else if (key == "augment.rotation_rad") {
        sm.rotation_rad = to_double(key, value);
    } else if (key == "augment.translation") {
        sm.translation = to_double(key, value);
    } else if (key == "augment.translation_px") {
        sm.translation_px = to_double(key, value);
    } else if (key == "augment.cutout_frac") {
        sm.cutout_frac = to_double(key, value);
    } else if (key == "augment.contrast") {
        sm.contrast = to_double(key, value);
    } else if (key == "augment.elastic") {
        sm.elastic = to_double(key, value);
    } else if (key.rfind("grid.", 0) == 0) {
        const std::string axis = key.substr(5);
        auto it = std::find_if(cfg.grid.begin(), cfg.grid.end(),
                               [&](const GridAxis& a) { return a.key == axis; });
        GridAxis ga{axis, split_csv(value)};
        if (it == cfg.grid.end()) cfg.grid.push_back(std::move(ga));
        else *it = std::move(ga);
    } else if (key == "analyze.run_dir") {
        cfg.analyze_run_dir = value;
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        apply_kv(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
    const auto& t = cfg.train;
    const auto& d = cfg.data;
    const auto& sm = t.severity_map;
    std::ostringstream out;
    out << "seed = " << cfg.seed << "\n";
    out << "out_dir = " << cfg.out_dir << "\n";
    out << "exec = " << (t.exec == Exec::serial ? "serial" : "parallel") << "\n";
    out << "data.kind = " << d.kind << "\n";
    out << "data.classes = " << d.synth.num_classes << "\n";
    out << "data.dim = " << d.synth.dim << "\n";
    out << "data.train_per_domain = " << d.synth.train_per_domain << "\n";
    out << "data.test_per_domain = " << d.synth.test_per_domain << "\n";
    out << "data.class_sep = " << format_double(d.synth.class_sep) << "\n";
    out << "data.noise_sigma = " << format_double(d.synth.noise_sigma) << "\n";
    out << "data.shift_rotation = " << format_double(d.synth.shift_rotation) << "\n";
    out << "data.shift_translation = " << format_double(d.synth.shift_translation) << "\n";
    out << "data.shift_noise = " << format_double(d.synth.shift_noise) << "\n";
    out << "data.source_probs = " << join_doubles(d.synth.source_probs) << "\n";
    out << "data.target_probs = " << join_doubles(d.synth.target_probs) << "\n";
    out << "data.target_if = " << format_double(d.target_if) << "\n";
    out << "data.target_total = " << d.target_total << "\n";
    out << "data.class_order = " << join_ints(d.class_order) << "\n";
    out << "data.images = " << d.images << "\n";
    out << "data.labels = " << d.labels << "\n";
    out << "data.test_images = " << d.test_images << "\n";
    out << "data.test_labels = " << d.test_labels << "\n";
    out << "data.idx_classes = " << d.idx_classes << "\n";
    out << "model.hidden = " << join_ints(t.hidden) << "\n";
    out << "model.temperature = " << format_double(t.temperature) << "\n";
    out << "train.source_epochs = " << t.source_epochs << "\n";
    out << "train.epochs = " << t.epochs << "\n";
    out << "train.batch = " << t.batch << "\n";
    out << "train.optimizer = " << opt_kind_name(t.opt.kind) << "\n";
    out << "train.lr = " << format_double(t.opt.lr) << "\n";
    out << "train.momentum = " << format_double(t.opt.momentum) << "\n";
    out << "train.beta1 = " << format_double(t.opt.beta1) << "\n";
    out << "train.beta2 = " << format_double(t.opt.beta2) << "\n";
    out << "train.adam_eps = " << format_double(t.opt.eps) << "\n";
    out << "train.lambda_ie = " << format_double(t.lambda_ie) << "\n";
    out << "train.lambda_sentry = " << format_double(t.lambda_sentry) << "\n";
    out << "train.k = " << t.k << "\n";
    out << "train.n = " << t.n << "\n";
    out << "train.m = " << format_double(t.m) << "\n";
    out << "train.queue = " << t.queue << "\n";
    out << "train.voting = " << voting_name(t.voting) << "\n";
    out << "train.selection = " << selection_mode_name(t.selection) << "\n";
    out << "train.entmax = " << (t.entmax ? "true" : "false") << "\n";
    out << "train.backprop_augmented = " << (t.backprop_on_augmented ? "true" : "false") << "\n";
    out << "train.src_sampler = " << sampler_mode_name(t.src_sampler) << "\n";
    out << "train.tgt_sampler = " << sampler_mode_name(t.tgt_sampler) << "\n";
    out << "train.granularity = "
        << (t.granularity == StepGranularity::batch ? "batch" : "epoch") << "\n";
    out << "train.checkpoint_every = " << t.checkpoint_every << "\n";
    out << "train.init_checkpoint = " << t.init_checkpoint << "\n";
    out << "augment.noise_sigma = " << format_double(sm.noise_sigma) << "\n";
    out << "augment.feature_scale = " << format_double(sm.feature_scale) << "\n";
    out << "augment.rotation_rad = " << format_double(sm.rotation_rad) << "\n";
    out << "augment.translation = " << format_double(sm.translation) << "\n";
    out << "augment.translation_px = " << format_double(sm.translation_px) << "\n";
    out << "augment.cutout_frac = " << format_double(sm.cutout_frac) << "\n";
    out << "augment.contrast = " << format_double(sm.contrast) << "\n";
    out << "augment.elastic = " << format_double(sm.elastic) << "\n";
    for (const auto& axis : cfg.grid) {
        out << "grid." << axis.key << " = ";
        for (std::size_t i = 0; i < axis.values.size(); ++i) {
            if (i) out << ',';
            out << axis.values[i];
        }
        out << "\n";
    }
    if (!cfg.analyze_run_dir.empty()) out << "analyze.run_dir = " << cfg.analyze_run_dir << "\n";
    return out.str();
}

}  // namespace sentry
