// Parameter checkpoints: a flat binary blob of little-endian doubles next to
// a JSON manifest describing names, shapes, offsets, the seed and a config
// hash. Shared by every model kind.
#pragma once

#include <filesystem>

#include "esgnn/train.hpp"

namespace esgnn {

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& prefix);
TrainedModel load_checkpoint(const std::filesystem::path& prefix);

// FNV-1a over the canonical config string; recorded in manifests.
uint64_t config_hash(const TrainConfig& cfg);
std::string config_to_string(const TrainConfig& cfg);

}  // namespace esgnn
