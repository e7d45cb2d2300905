#include "mgmd/cli/config.hpp"

#include <algorithm>

#include "mgmd/core/array_io.hpp"
#include "mgmd/core/error.hpp"
#include "mgmd/core/random.hpp"

namespace mgmd {

namespace {

constexpr const char* kVersion = "0.1.0";

void apply_override(nlohmann::json& root, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw Error(ErrorCode::config_error, "--set expects key=value, got '" + assignment + "'");
  }
  std::string key = assignment.substr(0, eq);
  std::string value = assignment.substr(eq + 1);

  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(value);
  } catch (const nlohmann::json::exception&) {
    parsed = value;  // plain string
  }

  nlohmann::json* node = &root;
  size_t pos = 0;
  while (true) {
    auto dot = key.find('.', pos);
    std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (part.empty()) throw Error(ErrorCode::config_error, "empty path segment in '" + key + "'");
    if (dot == std::string::npos) {
      (*node)[part] = parsed;
      break;
    }
    node = &(*node)[part];
    pos = dot + 1;
  }
}

std::vector<LabelingRule> parse_rules(const nlohmann::json& arr, const std::string& context) {
  std::vector<LabelingRule> rules;
  for (const auto& obj : arr) {
    LabelingRule rule;
    rule.pattern = obj.at("pattern").get<std::string>();
    rule.label = parse_label(obj.at("label").get<std::string>());
    rule.subset_tag = obj.value("subset_tag", std::string{});
    rules.push_back(std::move(rule));
  }
  if (rules.empty()) throw Error(ErrorCode::config_error, context + ": at least one rule required");
  return rules;
}

template <typename Fn>
void catch_schema(Fn&& fn, const std::string& where) {
  try {
    fn();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config_error, where + ": " + e.what());
  }
}

}  // namespace

nlohmann::json default_config_json() {
  return {
      {"dataset",
       {{"root", "data"},
        {"rules",
         {{{"pattern", "human/*"}, {"label", "human"}},
          {{"pattern", "machine/*"}, {"label", "machine"}}}}}},
      {"mel",
       {{"target_rate", 16000},
        {"n_mels", 128},
        {"fft_window", 2048},
        {"hop", 512},
        {"input_side", 224},
        {"clip_seconds", 10.0}}},
      {"models", {{{"architecture", "tinycnn"}}}},
      {"train", {{"batch_size", 64}, {"epochs", 10}, {"learning_rate", 0.001}}},
      {"ood", nlohmann::json::array()},
      {"xai",
       {{"techniques", {"ig", "occlusion", "cam", "gradcam", "lime"}},
        {"ig_steps", 64},
        {"occlusion_patch", 16},
        {"occlusion_stride", 8},
        {"lime_grid", 8},
        {"lime_samples", 1000},
        {"lime_ridge", 1.0},
        {"sample_count", 4},
        {"min_confidence", 0.9},
        {"overlay_fraction", 0.1}}},
      {"fidelity",
       {{"fraction", 0.1},
        {"fill", 0.0},
        {"sizes", {2, 3, 4, 5}},
        {"runs", 5},
        {"subsample", 1000},
        {"single_max_samples", 1000}}},
      {"fusion",
       {{"audio_provider", "mel_stats"},
        {"text_provider", "char_hash"},
        {"audio_bands", 32},
        {"text_dim", 64},
        {"empty_lyrics", "strict"}}},
      {"out_dir", "runs/default"},
      {"seed", 0},
  };
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        const std::vector<std::string>& overrides,
                                        const std::string& out_dir_override) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::config_error, "config file not found: " + path.string());
  }
  nlohmann::json raw;
  try {
    raw = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config_error, std::string("config is not valid JSON: ") + e.what());
  }
  for (const auto& assignment : overrides) apply_override(raw, assignment);
  if (!out_dir_override.empty()) raw["out_dir"] = out_dir_override;

  ExperimentConfig cfg;
  cfg.raw = raw;

  catch_schema(
      [&] {
        const auto& ds = raw.at("dataset");
        cfg.dataset.root = ds.at("root").get<std::string>();
        cfg.dataset.rules = parse_rules(ds.at("rules"), "dataset.rules");
      },
      "dataset");

  catch_schema(
      [&] {
        if (raw.contains("mel")) {
          const auto& mel = raw["mel"];
          cfg.mel.target_rate = mel.value("target_rate", cfg.mel.target_rate);
          cfg.mel.n_mels = mel.value("n_mels", cfg.mel.n_mels);
          cfg.mel.fft_window = mel.value("fft_window", cfg.mel.fft_window);
          cfg.mel.hop = mel.value("hop", cfg.mel.hop);
          cfg.mel.input_side = mel.value("input_side", cfg.mel.input_side);
          cfg.mel.clip_seconds = mel.value("clip_seconds", cfg.mel.clip_seconds);
        }
        cfg.mel.validate();
      },
      "mel");

  catch_schema(
      [&] {
        for (const auto& model : raw.at("models")) {
          ClassifierSpec spec;
          spec.architecture = parse_architecture(model.at("architecture").get<std::string>());
          if (model.contains("params")) {
            spec.architecture_params = model["params"].get<std::map<std::string, double>>();
          }
          int side = cfg.mel.input_side;
          spec.input_shape = is_sequence_architecture(spec.architecture)
                                 ? std::vector<int64_t>{side, side}
                                 : std::vector<int64_t>{1, side, side};
          spec.validate();
          cfg.models.push_back(std::move(spec));
        }
        if (cfg.models.empty()) throw Error(ErrorCode::config_error, "models: at least one required");
      },
      "models");

  catch_schema(
      [&] {
        if (raw.contains("train")) {
          const auto& t = raw["train"];
          cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
          cfg.train.epochs = t.value("epochs", cfg.train.epochs);
          cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
          cfg.train.device = t.value("device", cfg.train.device);
        }
        cfg.train.validate();
      },
      "train");

  catch_schema(
      [&] {
        for (const auto& obj : raw.value("ood", nlohmann::json::array())) {
          OodSection ood;
          ood.name = obj.at("name").get<std::string>();
          ood.root = obj.at("root").get<std::string>();
          ood.rules = parse_rules(obj.at("rules"), "ood.rules");
          cfg.ood.push_back(std::move(ood));
        }
      },
      "ood");

  catch_schema(
      [&] {
        if (raw.contains("xai")) {
          const auto& x = raw["xai"];
          if (x.contains("techniques")) {
            cfg.xai.techniques.clear();
            for (const auto& name : x["techniques"]) {
              cfg.xai.techniques.push_back(parse_technique(name.get<std::string>()));
            }
          }
          cfg.xai.config.ig_steps = x.value("ig_steps", cfg.xai.config.ig_steps);
          cfg.xai.config.occlusion_patch = x.value("occlusion_patch", cfg.xai.config.occlusion_patch);
          cfg.xai.config.occlusion_stride =
              x.value("occlusion_stride", cfg.xai.config.occlusion_stride);
          cfg.xai.config.lime_grid = x.value("lime_grid", cfg.xai.config.lime_grid);
          cfg.xai.config.lime_samples = x.value("lime_samples", cfg.xai.config.lime_samples);
          cfg.xai.config.lime_ridge = x.value("lime_ridge", cfg.xai.config.lime_ridge);
          cfg.xai.config.gradcam_layer = x.value("gradcam_layer", cfg.xai.config.gradcam_layer);
          cfg.xai.sample_count = x.value("sample_count", cfg.xai.sample_count);
          cfg.xai.min_confidence = x.value("min_confidence", cfg.xai.min_confidence);
          cfg.xai.overlay_fraction = x.value("overlay_fraction", cfg.xai.overlay_fraction);
        }
      },
      "xai");

  catch_schema(
      [&] {
        if (raw.contains("fidelity")) {
          const auto& f = raw["fidelity"];
          cfg.fidelity.policy.fraction = f.value("fraction", cfg.fidelity.policy.fraction);
          cfg.fidelity.policy.fill = f.value("fill", cfg.fidelity.policy.fill);
          if (f.contains("sizes")) cfg.fidelity.sizes = f["sizes"].get<std::vector<int>>();
          cfg.fidelity.runs = f.value("runs", cfg.fidelity.runs);
          cfg.fidelity.subsample = f.value("subsample", cfg.fidelity.subsample);
          cfg.fidelity.single_max_samples =
              f.value("single_max_samples", cfg.fidelity.single_max_samples);
        }
        cfg.fidelity.policy.validate();
      },
      "fidelity");

  catch_schema(
      [&] {
        if (raw.contains("fusion")) {
          const auto& f = raw["fusion"];
          cfg.fusion.audio_provider = f.value("audio_provider", cfg.fusion.audio_provider);
          cfg.fusion.text_provider = f.value("text_provider", cfg.fusion.text_provider);
          cfg.fusion.audio_bands = f.value("audio_bands", cfg.fusion.audio_bands);
          cfg.fusion.text_dim = f.value("text_dim", cfg.fusion.text_dim);
          cfg.fusion.empty_lyrics = f.value("empty_lyrics", cfg.fusion.empty_lyrics);
          if (cfg.fusion.empty_lyrics != "strict" && cfg.fusion.empty_lyrics != "zero_fill") {
            throw Error(ErrorCode::config_error, "fusion.empty_lyrics must be strict or zero_fill");
          }
        }
      },
      "fusion");

  catch_schema(
      [&] {
        cfg.out_dir = raw.value("out_dir", std::string("runs/default"));
        cfg.cache_dir = raw.value("cache_dir", std::string{});
        cfg.seed = raw.value("seed", 0);
        cfg.train.seed = cfg.seed;
      },
      "top-level");

  std::string canonical = cfg.raw.dump();
  cfg.config_hash = hex64(fnv1a64(canonical));
  uint64_t run_hash = fnv1a64(canonical);
  run_hash = fnv1a64(&cfg.seed, sizeof(cfg.seed), run_hash);
  run_hash = fnv1a64(std::string(kVersion), run_hash);
  cfg.run_id = hex64(run_hash).substr(0, 12);
  return cfg;
}

}  // namespace mgmd
