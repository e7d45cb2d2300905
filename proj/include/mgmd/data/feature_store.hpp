#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <unordered_map>

#include "mgmd/audio/mel.hpp"
#include "mgmd/data/manifest.hpp"
#include "mgmd/train/trainer.hpp"

namespace mgmd {

/// Mel-featurized view of a manifest. Grids are cached on disk as
/// portable arrays (`<id>.f32` + sidecar) and in memory per process.
/// With compute_on_miss=false the store is strictly cache-backed and a
/// missing file raises MissingFeatureCache.
class MelFeatureStore : public ExampleSource {
 public:
  MelFeatureStore(DatasetManifest manifest, MelConfig config, std::filesystem::path cache_dir,
                  bool compute_on_miss = true);

  Tensor grid(const std::string& id) const override;
  int label_of(const std::string& id) const override;

  /// Featurizes every manifest row into the disk cache.
  void precompute_all();

  const DatasetManifest& manifest() const { return manifest_; }
  const MelConfig& config() const { return config_; }

 private:
  Tensor compute_grid(const ManifestRow& row) const;
  std::filesystem::path cache_path(const std::string& id) const;

  DatasetManifest manifest_;
  MelConfig config_;
  std::filesystem::path cache_dir_;
  bool compute_on_miss_;
  std::unordered_map<std::string, const ManifestRow*> index_;
  std::unique_ptr<std::mutex> mutex_;  // keeps the store movable
  mutable std::unordered_map<std::string, Tensor> memory_cache_;
};

/// Fixed grids held in memory; fixtures and synthetic experiments.
class InMemoryExampleSource : public ExampleSource {
 public:
  void add(const std::string& id, Tensor grid, int label);

  Tensor grid(const std::string& id) const override;
  int label_of(const std::string& id) const override;
  std::vector<std::string> ids() const;

 private:
  struct Item {
    Tensor grid;
    int label;
  };
  std::map<std::string, Item> items_;
};

/// Resolves the mel/embedding cache root: explicit dir, else the
/// MGMD_CACHE environment variable, else `<run_dir>/mel_cache`.
std::filesystem::path resolve_cache_dir(const std::filesystem::path& configured,
                                        const std::filesystem::path& run_dir);

}  // namespace mgmd
