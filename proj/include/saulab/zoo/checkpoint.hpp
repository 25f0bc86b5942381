#pragma once

#include <string>

#include "saulab/zoo/model.hpp"

namespace sau {

// Binary checkpoint: magic "SAUCKPT1", little-endian payload, FNV-1a64
// trailer over everything between the magic and the checksum. Round-trips
// parameters and running statistics bit-exactly.
void save_checkpoint(const Model& model, const std::string& path);

Model load_checkpoint(const std::string& path);

// Load and require the stored configuration to equal `expect`.
Model load_checkpoint(const std::string& path, const ModelConfig& expect);

}  // namespace sau
