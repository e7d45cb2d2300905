#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mgmd/data/feature_store.hpp"
#include "mgmd/data/splits.hpp"

namespace mgmd::testing {

/// Planted-feature dataset: noise grids where the "machine" class carries
/// a bright patch at a fixed location. A pixel threshold over the patch
/// region separates the classes perfectly, which is the oracle the
/// training and fidelity tests lean on.
struct PlantedConfig {
  int64_t side = 32;
  int64_t patch_row = 6;
  int64_t patch_col = 18;
  int64_t patch_size = 3;
  float noise_level = 0.30f;
  float patch_value = 1.0f;
  int n_train = 400;
  int n_val = 100;
  uint64_t seed = 11;
};

struct PlantedDataset {
  InMemoryExampleSource source;
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  PlantedConfig config;
};

PlantedDataset make_planted_dataset(const PlantedConfig& config);

/// The pixel-threshold oracle: accuracy of "patch mean > threshold" over
/// ids. Used to certify the planted feature is linearly detectable.
double planted_pixel_oracle_accuracy(const PlantedDataset& dataset,
                                     const std::vector<std::string>& ids);

/// Synth WAV fixture tree for CLI end-to-end runs: `human/` holds noise
/// clips, `machine/` noise plus a tone burst; `<stem>.txt` lyrics side
/// cars are written for every clip.
void write_synthetic_audio_tree(const std::filesystem::path& root, int per_class, double seconds,
                                int sample_rate, uint64_t seed);

}  // namespace mgmd::testing
