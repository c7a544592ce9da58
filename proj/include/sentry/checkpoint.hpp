#pragma once

#include <string>

#include "sentry/classifier.hpp"

namespace sentry {

// Binary checkpoint, version 1. Layout (all integers little-endian):
//   bytes 0..7   magic "SENTRYC1"
//   u32          format version (1)
//   u32          input_dim
//   u32          hidden layer count, then that many u32 widths
//   u32          num_classes
//   f64          temperature
//   u64          parameter count, then that many f64 parameters
//   u64          RNG state byte length, then the state text
void save_checkpoint(const std::string& path, const Classifier& model,
                     const std::string& rng_state);

Classifier load_checkpoint(const std::string& path, std::string* rng_state = nullptr);

}  // namespace sentry
