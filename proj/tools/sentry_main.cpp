#include <deque>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "sentry/cli.hpp"

using namespace sentry;

namespace {

// one subcommand's flag mirrors: each maps onto a config key, applied only
// when the user actually passed the flag (so flags beat the config file)
struct flag_set {
    CLI::App* sub;
    std::deque<std::string> storage;
    std::vector<std::pair<CLI::Option*, std::pair<std::string, std::string*>>> mirrors;
    std::string config_path;
    std::vector<std::string> sets;

    explicit flag_set(CLI::App* s) : sub(s) {
        sub->add_option("--config", config_path, "flat key=value config file");
        sub->add_option("--set", sets, "extra key=value override (repeatable)");
    }

    void mirror(const std::string& flag, const std::string& key, const std::string& help) {
        storage.emplace_back();
        std::string* slot = &storage.back();
        CLI::Option* opt = sub->add_option(flag, *slot, help);
        mirrors.push_back({opt, {key, slot}});
    }

    RunConfig resolve(Command command) const {
        RunConfig cfg = config_path.empty() ? RunConfig{} : parse_config_file(config_path);
        cfg.command = command;
        for (const auto& kv : sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--set expects key=value, got: " + kv);
            apply_kv(cfg, kv.substr(0, eq), kv.substr(eq + 1));
        }
        for (const auto& [opt, kv] : mirrors)
            if (opt->count()) apply_kv(cfg, kv.first, *kv.second);
        return cfg;
    }
};

void add_common_flags(flag_set& f) {
    f.mirror("--seed", "seed", "run seed (data, init, samplers, committees)");
    f.mirror("--out", "out_dir", "output directory");
    f.mirror("--exec", "exec", "serial | parallel");
}

void add_data_flags(flag_set& f) {
    f.mirror("--data-kind", "data.kind", "synthetic | idx");
    f.mirror("--classes", "data.classes", "synthetic class count");
    f.mirror("--dim", "data.dim", "synthetic input dimension");
    f.mirror("--train-per-domain", "data.train_per_domain", "synthetic train size");
    f.mirror("--test-per-domain", "data.test_per_domain", "synthetic test size");
    f.mirror("--class-sep", "data.class_sep", "class-mean circle radius");
    f.mirror("--data-noise", "data.noise_sigma", "blob stddev");
    f.mirror("--shift-rotation", "data.shift_rotation", "target rotation (radians)");
    f.mirror("--shift-translation", "data.shift_translation", "target translation");
    f.mirror("--shift-noise", "data.shift_noise", "extra target noise");
    f.mirror("--source-probs", "data.source_probs", "source label profile (csv)");
    f.mirror("--target-probs", "data.target_probs", "target label profile (csv)");
    f.mirror("--target-if", "data.target_if", "target-train imbalance factor");
    f.mirror("--target-total", "data.target_total", "target-train kept total (0 = max)");
    f.mirror("--class-order", "data.class_order", "long-tail rank order (csv of classes)");
    f.mirror("--images", "data.images", "idx train images");
    f.mirror("--labels", "data.labels", "idx train labels");
    f.mirror("--test-images", "data.test_images", "idx test images");
    f.mirror("--test-labels", "data.test_labels", "idx test labels");
    f.mirror("--idx-classes", "data.idx_classes", "idx class count");
}

void add_train_flags(flag_set& f) {
    f.mirror("--hidden", "model.hidden", "hidden widths (csv)");
    f.mirror("--temperature", "model.temperature", "softmax temperature");
    f.mirror("--source-epochs", "train.source_epochs", "source pretraining epochs");
    f.mirror("--epochs", "train.epochs", "adaptation epochs");
    f.mirror("--batch", "train.batch", "batch size per domain");
    f.mirror("--optimizer", "train.optimizer", "adam | sgd");
    f.mirror("--lr", "train.lr", "learning rate");
    f.mirror("--lambda-ie", "train.lambda_ie", "information-maximization weight");
    f.mirror("--lambda-sentry", "train.lambda_sentry", "selective-entropy weight");
    f.mirror("--k", "train.k", "committee size");
    f.mirror("--n", "train.n", "transforms per chain");
    f.mirror("--m", "train.m", "augmentation severity");
    f.mirror("--queue", "train.queue", "pseudolabel queue capacity");
    f.mirror("--voting", "train.voting", "majority | unanimous");
    f.mirror("--selection", "train.selection", "committee | all | oracle-correct | none");
    f.mirror("--entmax", "train.entmax", "true | false: push entropy up on inconsistent");
    f.mirror("--backprop-augmented", "train.backprop_augmented",
             "true | false: entropy terms on augmented inputs");
    f.mirror("--src-sampler", "train.src_sampler", "class_balanced | pseudo_balanced | uniform");
    f.mirror("--tgt-sampler", "train.tgt_sampler", "class_balanced | pseudo_balanced | uniform");
    f.mirror("--granularity", "train.granularity", "batch | epoch optimizer stepping");
    f.mirror("--checkpoint-every", "train.checkpoint_every", "epochs between checkpoints");
    f.mirror("--init-checkpoint", "train.init_checkpoint", "skip pretraining, load this model");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"selective entropy optimization over augmentation committees"};
    app.require_subcommand(1);

    auto* build = app.add_subcommand("build-data", "materialize datasets, write histograms");
    auto* train = app.add_subcommand("train-source", "supervised source training only");
    auto* adapt = app.add_subcommand("adapt", "source pretraining + target adaptation");
    auto* grid = app.add_subcommand("grid", "ablation grid over selection knobs");
    auto* analyze = app.add_subcommand("analyze", "gradient study + run-log replays");

    flag_set fb(build), ft(train), fa(adapt), fg(grid), fz(analyze);
    for (flag_set* f : {&fb, &ft, &fa, &fg, &fz}) add_common_flags(*f);
    for (flag_set* f : {&fb, &ft, &fa, &fg}) add_data_flags(*f);
    for (flag_set* f : {&ft, &fa, &fg}) add_train_flags(*f);
    fg.mirror("--grid-k", "grid.k", "committee sizes (csv)");
    fg.mirror("--grid-n", "grid.n", "chain lengths (csv)");
    fg.mirror("--grid-voting", "grid.voting", "voting rules (csv)");
    fg.mirror("--grid-selection", "grid.selection", "selection modes (csv)");
    fg.mirror("--grid-entmax", "grid.entmax", "entropy-max toggles (csv)");
    fg.mirror("--grid-src-sampler", "grid.src_sampler", "source samplers (csv)");
    fg.mirror("--grid-tgt-sampler", "grid.tgt_sampler", "target samplers (csv)");
    fg.mirror("--grid-backprop-augmented", "grid.backprop_augmented",
              "backprop-input toggles (csv)");
    fz.mirror("--run-dir", "analyze.run_dir", "finished run directory to replay");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        RunConfig cfg;
        if (build->parsed()) cfg = fb.resolve(Command::build_data);
        else if (train->parsed()) cfg = ft.resolve(Command::train_source);
        else if (adapt->parsed()) cfg = fa.resolve(Command::adapt);
        else if (grid->parsed()) cfg = fg.resolve(Command::grid);
        else cfg = fz.resolve(Command::analyze);
        return execute(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
