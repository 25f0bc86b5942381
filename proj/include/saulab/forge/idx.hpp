#pragma once

#include <string>

#include "saulab/forge/dataset.hpp"

namespace sau {

// Classic IDX pair (big-endian magic 0x00000803 images / 0x00000801 labels),
// pixels scaled from [0,255] to [0,1].
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path);

// Writes the dataset back out as an IDX pair (pixels quantized to u8).
void write_idx(const LabeledDataset& ds, const std::string& images_path,
               const std::string& labels_path);

}  // namespace sau
