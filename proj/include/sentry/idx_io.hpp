#pragma once

#include <string>

#include "sentry/dataset.hpp"

namespace sentry {

// IDX binary ingestion (big-endian headers): images file magic 0x00000803
// with dims [n, rows, cols], labels file magic 0x00000801 with dims [n].
// Pixels land in [0,1] as byte/255; labels must fall in [0, num_classes).
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 Domain domain = Domain::source, Split split = Split::train,
                 int num_classes = 10);

// Inverse of load_idx; pixel byte = round(value*255). A dataset loaded from
// IDX files serializes back to the identical bytes.
void write_idx(const Dataset& ds, const std::string& images_path,
               const std::string& labels_path);

}  // namespace sentry
