#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mgmd/data/manifest.hpp"

namespace mgmd {

struct SplitAssignment {
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
  int64_t seed = 0;
};

/// Per-class split sizes under the two-stage floor rule: the 80/20
/// train+val vs test cut is floored first, then the 80/20 train vs val
/// cut inside the first part. Matches the 0.64/0.16/0.20 proportions.
struct SplitSizes {
  size_t train = 0, val = 0, test = 0;
};
SplitSizes split_sizes(size_t n);

/// Deterministic, label-stratified split. Throws TooFewSamples when the
/// manifest has fewer than 3 rows or any aggregate split ends up empty.
SplitAssignment assign_splits(const DatasetManifest& manifest, int64_t seed);

void write_split_json(const SplitAssignment& split, const std::filesystem::path& path);
SplitAssignment read_split_json(const std::filesystem::path& path);

}  // namespace mgmd
