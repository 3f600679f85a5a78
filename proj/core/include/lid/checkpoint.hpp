#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lid/model.hpp"

namespace lid::model {

struct CheckpointMeta {
  int epoch = 0;
  double validation_metric = 0.0;
  std::vector<std::string> languages;  // index -> language code
  std::string train_digest;            // hash of the training configuration
  std::string mode;                    // baseline | adversarial
  std::uint64_t seed = 0;
};

struct Checkpoint {
  Model model;
  CheckpointMeta meta;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// "LIDM", u32 version, u32 header length, JSON header (config, languages,
// meta, tensor table), float32 payload, u32 CRC32 of everything before it.
std::vector<std::uint8_t> encode_checkpoint(const Model& model, const CheckpointMeta& meta);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const Model& model, const CheckpointMeta& meta, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lid::model
