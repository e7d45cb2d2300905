#include "mgmd/data/splits.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

#include "mgmd/core/array_io.hpp"
#include "mgmd/core/error.hpp"
#include "mgmd/core/random.hpp"

namespace mgmd {

SplitSizes split_sizes(size_t n) {
  SplitSizes s;
  size_t trainval = n * 8 / 10;
  s.test = n - trainval;
  s.train = trainval * 8 / 10;
  s.val = trainval - s.train;
  return s;
}

SplitAssignment assign_splits(const DatasetManifest& manifest, int64_t seed) {
  if (manifest.empty()) throw Error(ErrorCode::empty_dataset, "cannot split an empty manifest");
  if (manifest.size() < 3) {
    throw Error(ErrorCode::too_few_samples, "need at least 3 rows to form non-empty splits");
  }

  // Group ids per label, in manifest order; iterate labels sorted by name
  // so the assignment is independent of row ordering quirks.
  std::map<std::string, std::vector<std::string>> by_label;
  for (const auto& row : manifest.rows) by_label[label_name(row.label)].push_back(row.id);

  SplitAssignment split;
  split.seed = seed;
  for (auto& [label, ids] : by_label) {
    Rng rng(derive_seed(static_cast<uint64_t>(seed), "split:" + label));
    deterministic_shuffle(ids, rng);
    SplitSizes sizes = split_sizes(ids.size());
    size_t i = 0;
    for (size_t k = 0; k < sizes.train; ++k) split.train_ids.push_back(ids[i++]);
    for (size_t k = 0; k < sizes.val; ++k) split.val_ids.push_back(ids[i++]);
    for (size_t k = 0; k < sizes.test; ++k) split.test_ids.push_back(ids[i++]);
  }

  if (split.train_ids.empty() || split.val_ids.empty() || split.test_ids.empty()) {
    throw Error(ErrorCode::too_few_samples, "a split came out empty; add more samples per class");
  }

  // Sorted id lists keep the persisted form canonical.
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.val_ids.begin(), split.val_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

void write_split_json(const SplitAssignment& split, const std::filesystem::path& path) {
  nlohmann::json obj = {
      {"seed", split.seed},
      {"train", split.train_ids},
      {"val", split.val_ids},
      {"test", split.test_ids},
  };
  write_text_file(path, obj.dump(2) + "\n");
}

SplitAssignment read_split_json(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::missing_artifact, "split file not found: " + path.string());
  }
  nlohmann::json obj = nlohmann::json::parse(read_text_file(path));
  SplitAssignment split;
  split.seed = obj.at("seed").get<int64_t>();
  split.train_ids = obj.at("train").get<std::vector<std::string>>();
  split.val_ids = obj.at("val").get<std::vector<std::string>>();
  split.test_ids = obj.at("test").get<std::vector<std::string>>();
  return split;
}

}  // namespace mgmd
