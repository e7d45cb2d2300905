#include "mgmd/data/feature_store.hpp"

#include <cstdlib>

#include "mgmd/audio/resample.hpp"
#include "mgmd/core/array_io.hpp"
#include "mgmd/core/error.hpp"

namespace mgmd {

namespace fs = std::filesystem;

MelFeatureStore::MelFeatureStore(DatasetManifest manifest, MelConfig config, fs::path cache_dir,
                                 bool compute_on_miss)
    : manifest_(std::move(manifest)),
      config_(config),
      cache_dir_(std::move(cache_dir)),
      compute_on_miss_(compute_on_miss),
      mutex_(std::make_unique<std::mutex>()) {
  config_.validate();
  for (const auto& row : manifest_.rows) index_[row.id] = &row;
}

fs::path MelFeatureStore::cache_path(const std::string& id) const {
  return cache_dir_ / (id + ".f32");
}

Tensor MelFeatureStore::compute_grid(const ManifestRow& row) const {
  AudioClip clip = load_audio(row.path, config_.target_rate);
  clip = fix_duration(clip, config_.clip_seconds);
  MelSpectrogram mel = compute_mel_spectrogram(clip, config_);

  nlohmann::json meta = {
      {"source_id", row.id},
      {"source_path", row.path},
      {"mel_config",
       {{"target_rate", config_.target_rate},
        {"n_mels", config_.n_mels},
        {"fft_window", config_.fft_window},
        {"hop", config_.hop},
        {"input_side", config_.input_side},
        {"clip_seconds", config_.clip_seconds},
        {"db_floor", config_.db_floor}}},
  };
  write_f32_array(cache_path(row.id), mel.resized, meta);
  return mel.resized;
}

Tensor MelFeatureStore::grid(const std::string& id) const {
  {
    std::lock_guard lock(*mutex_);
    auto hit = memory_cache_.find(id);
    if (hit != memory_cache_.end()) return hit->second;
  }
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw Error(ErrorCode::missing_artifact, "manifest has no row with id '" + id + "'");
  }
  Tensor result;
  fs::path file = cache_path(id);
  if (fs::exists(file)) {
    result = read_f32_array(file);
  } else if (compute_on_miss_) {
    result = compute_grid(*it->second);
  } else {
    throw Error(ErrorCode::missing_feature_cache, "no cached features for '" + id + "'");
  }
  std::lock_guard lock(*mutex_);
  memory_cache_[id] = result;
  return result;
}

int MelFeatureStore::label_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw Error(ErrorCode::missing_artifact, "manifest has no row with id '" + id + "'");
  }
  return label_class_index(it->second->label);
}

void MelFeatureStore::precompute_all() {
  for (const auto& row : manifest_.rows) {
    if (!fs::exists(cache_path(row.id))) compute_grid(row);
  }
}

void InMemoryExampleSource::add(const std::string& id, Tensor grid, int label) {
  items_[id] = {std::move(grid), label};
}

Tensor InMemoryExampleSource::grid(const std::string& id) const {
  auto it = items_.find(id);
  if (it == items_.end()) throw Error(ErrorCode::missing_artifact, "unknown id '" + id + "'");
  return it->second.grid;
}

int InMemoryExampleSource::label_of(const std::string& id) const {
  auto it = items_.find(id);
  if (it == items_.end()) throw Error(ErrorCode::missing_artifact, "unknown id '" + id + "'");
  return it->second.label;
}

std::vector<std::string> InMemoryExampleSource::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, item] : items_) out.push_back(id);
  return out;
}

fs::path resolve_cache_dir(const fs::path& configured, const fs::path& run_dir) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv("MGMD_CACHE"); env && *env) return fs::path(env);
  return run_dir / "mel_cache";
}

}  // namespace mgmd
