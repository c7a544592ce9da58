#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sentry/augment.hpp"
#include "sentry/batch_eval.hpp"
#include "sentry/dataset.hpp"
#include "sentry/optimizer.hpp"
#include "sentry/sampler.hpp"

namespace sentry {

// user-facing configuration mistakes (unknown key, bad type, constraint
// violation); the CLI maps these to exit code 1
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class SelectionMode { committee, all, oracle_correct, none };
enum class StepGranularity { batch, epoch };

SelectionMode parse_selection_mode(const std::string& name);
const char* selection_mode_name(SelectionMode mode);
Voting parse_voting(const std::string& name);
const char* voting_name(Voting v);

struct TrainConfig {
    int source_epochs = 20;  // source pretraining budget for `adapt`
    int epochs = 15;
    int batch = 64;
    OptimizerSpec opt;  // adam, lr 2e-4
    double lambda_ie = 0.1;
    double lambda_sentry = 1.0;
    int k = 3;
    int n = 3;
    double m = 2.0;
    double temperature = 0.05;
    int queue = 256;
    Voting voting = Voting::majority;
    SelectionMode selection = SelectionMode::committee;
    bool entmax = true;
    bool backprop_on_augmented = true;
    SamplerMode src_sampler = SamplerMode::class_balanced;
    SamplerMode tgt_sampler = SamplerMode::pseudo_balanced;
    StepGranularity granularity = StepGranularity::batch;
    std::vector<int> hidden = {32};
    SeverityMap severity_map;
    Exec exec = Exec::parallel;
    std::uint64_t seed = 1;
    int checkpoint_every = 0;  // epochs between checkpoints; 0 = final only
    std::string init_checkpoint;

    void validate() const;  // throws ConfigError
};

struct DataConfig {
    std::string kind = "synthetic";  // synthetic | idx
    SyntheticSpec synth;
    double target_if = 1.0;          // long-tailing applied to target train when > 1
    std::int64_t target_total = 0;   // 0 = keep as much as feasible
    std::vector<int> class_order;    // empty = descending target class index order 0..C-1
    std::string images, labels, test_images, test_labels;
    int idx_classes = 10;
};

struct GridAxis {
    std::string key;  // k | n | voting | selection | entmax | src_sampler |
                      // tgt_sampler | backprop_augmented
    std::vector<std::string> values;
};

enum class Command { build_data, train_source, adapt, grid, analyze };

Command parse_command(const std::string& name);
const char* command_name(Command c);

struct RunConfig {
    Command command = Command::adapt;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    DataConfig data;
    TrainConfig train;
    std::vector<GridAxis> grid;
    std::string analyze_run_dir;  // analyze: reuse this run's logs (else fresh study only)

    void validate() const;  // throws ConfigError
};

// One key=value assignment (shared by the file parser and flag overrides).
// Unknown keys and malformed values throw ConfigError naming the key.
void apply_kv(RunConfig& cfg, const std::string& key, const std::string& value);

// Flat key=value text: '#' comments, blank lines ignored, dotted sections.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Every key with its resolved value, fixed order; reparses to an equal config.
std::string serialize_config(const RunConfig& cfg);

}  // namespace sentry
