#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "eegcaps/capsnet/model.hpp"
#include "eegcaps/topomap.hpp"

namespace eegcaps::capsnet {

// Training context stored after the parameter tensors so a checkpoint can be
// evaluated on its held-out fold without re-deriving the normalizer.
struct TrainingContext {
  Normalizer normalizer;
  std::uint64_t folds_seed = 0;
  std::uint32_t fold_index = 0;
  std::uint32_t num_folds = 5;

  friend bool operator==(const TrainingContext&, const TrainingContext&) = default;
};

struct Checkpoint {
  ModelConfig config;
  ModelParams<double> params;
  std::optional<TrainingContext> context;
};

// Layout (little-endian): "CAPS1\0"; 12 x u32 config fields; for each of the
// five parameter tensors in declaration order: u32 rank, rank x u32 dims,
// f64 values. Then u32 context flag (0/1); when 1: mean and std tensors in the
// same encoding, u64 folds seed, u32 fold index, u32 fold count.
std::vector<unsigned char> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::span<const unsigned char> bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace eegcaps::capsnet
