#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgmd/audio/mel.hpp"
#include "mgmd/data/manifest.hpp"
#include "mgmd/fidelity/fidelity.hpp"
#include "mgmd/train/trainer.hpp"
#include "mgmd/xai/methods.hpp"
#include "mgmd/zoo/spec.hpp"

namespace mgmd {

struct DatasetSection {
  std::string root;
  std::vector<LabelingRule> rules;
};

struct OodSection {
  std::string name;
  std::string root;
  std::vector<LabelingRule> rules;
};

struct XaiSection {
  std::vector<Technique> techniques = {Technique::ig, Technique::occlusion, Technique::cam,
                                       Technique::gradcam, Technique::lime};
  XaiConfig config;
  int sample_count = 4;
  double min_confidence = 0.9;
  double overlay_fraction = 0.10;
};

struct FidelitySection {
  MaskPolicy policy;
  std::vector<int> sizes = {2, 3, 4, 5};
  int runs = 5;
  size_t subsample = 1000;
  size_t single_max_samples = 1000;
};

struct FusionSection {
  std::string audio_provider = "mel_stats";  // or "exec:<command>"
  std::string text_provider = "char_hash";
  int64_t audio_bands = 32;
  int64_t text_dim = 64;
  std::string empty_lyrics = "strict";  // or "zero_fill"
};

struct ExperimentConfig {
  DatasetSection dataset;
  MelConfig mel;
  std::vector<ClassifierSpec> models;
  TrainConfig train;
  std::vector<OodSection> ood;
  XaiSection xai;
  FidelitySection fidelity;
  FusionSection fusion;
  std::filesystem::path out_dir = "runs/default";
  std::filesystem::path cache_dir;  // empty: MGMD_CACHE or out_dir/mel_cache
  int64_t seed = 0;

  nlohmann::json raw;       // config after overrides, as parsed
  std::string config_hash;  // stable hash of `raw`
  std::string run_id;
};

/// Loads the JSON config, applies dotted-path `--set key=value`
/// overrides, validates, and derives config_hash / run_id. All schema
/// violations surface as ConfigError.
ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        const std::vector<std::string>& overrides,
                                        const std::string& out_dir_override);

/// A fully-defaulted example of the schema (checked into the repo next
/// to the binary docs).
nlohmann::json default_config_json();

}  // namespace mgmd
