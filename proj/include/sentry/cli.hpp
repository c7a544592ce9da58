#pragma once

#include <string>
#include <vector>

#include "sentry/config.hpp"
#include "sentry/dataset.hpp"
#include "sentry/run_record.hpp"

namespace sentry {

// Materializes the domain pair from the data section: synthetic blobs with
// the configured shift, or IDX files (target = reload of the same files,
// shifted only through the label profile). target_if > 1 long-tails the
// target train split.
DatasetPair build_datasets(const RunConfig& cfg);

// Inverse of write_batches_csv, for post-hoc analysis of a finished run.
std::vector<BatchVerdict> read_batches_csv(const std::string& path);

// Runs one command end to end, writing everything under cfg.out_dir.
// Returns 0; configuration mistakes throw ConfigError, runtime failures any
// other exception (the binary maps those to exit codes 1 and 2).
int execute(const RunConfig& cfg);

}  // namespace sentry
