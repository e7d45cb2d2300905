#include "mgmd/cli/commands.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mgmd/audio/resample.hpp"
#include "mgmd/core/array_io.hpp"
#include "mgmd/core/error.hpp"
#include "mgmd/data/feature_store.hpp"
#include "mgmd/data/splits.hpp"
#include "mgmd/fusion/fusion.hpp"
#include "mgmd/report/report.hpp"
#include "mgmd/xai/render.hpp"

namespace mgmd {

namespace fs = std::filesystem;

namespace {

void append_run_log(const RunArtifacts& art, const ExperimentConfig& cfg,
                    const std::string& command, double duration_s) {
  fs::create_directories(art.logs());
  auto now = std::chrono::system_clock::now().time_since_epoch();
  nlohmann::json entry = {
      {"command", command},
      {"run_id", cfg.run_id},
      {"config_hash", cfg.config_hash},
      {"seed", cfg.seed},
      {"duration_s", duration_s},
      {"unix_time", std::chrono::duration_cast<std::chrono::seconds>(now).count()},
      {"version", "0.1.0"},
  };
  std::ofstream out(art.logs() / "run_log.jsonl", std::ios::app);
  out << entry.dump() << "\n";
}

DatasetManifest require_manifest(const RunArtifacts& art, const std::string& name = "manifest") {
  fs::path path = art.manifests() / (name + ".jsonl");
  if (!fs::exists(path)) {
    throw Error(ErrorCode::missing_artifact, "run `prepare` first: " + path.string() + " missing");
  }
  return read_manifest_jsonl(path);
}

SplitAssignment require_split(const RunArtifacts& art) {
  fs::path path = art.splits() / "split.json";
  if (!fs::exists(path)) {
    throw Error(ErrorCode::missing_artifact, "run `prepare` first: " + path.string() + " missing");
  }
  return read_split_json(path);
}

Classifier require_checkpoint(const RunArtifacts& art, const ClassifierSpec& spec) {
  fs::path path = art.checkpoints() / (std::string(architecture_name(spec.architecture)) + ".ckpt");
  if (!fs::exists(path)) {
    throw Error(ErrorCode::missing_artifact, "run `train` first: " + path.string() + " missing");
  }
  return Classifier::load_checkpoint(path);
}

MelFeatureStore make_store(const ExperimentConfig& cfg, const RunArtifacts& art,
                           DatasetManifest manifest, const std::string& subdir = "") {
  fs::path cache = resolve_cache_dir(cfg.cache_dir, art.root);
  if (!subdir.empty()) cache /= subdir;
  return MelFeatureStore(std::move(manifest), cfg.mel, cache, true);
}

void cmd_prepare(const ExperimentConfig& cfg, const RunArtifacts& art) {
  DatasetManifest manifest = build_manifest(cfg.dataset.root, cfg.dataset.rules);
  fs::create_directories(art.manifests());
  write_manifest_jsonl(manifest, art.manifests() / "manifest.jsonl");

  SplitAssignment split = assign_splits(manifest, cfg.seed);
  fs::create_directories(art.splits());
  write_split_json(split, art.splits() / "split.json");

  MelFeatureStore store = make_store(cfg, art, manifest);
  store.precompute_all();

  for (const auto& ood : cfg.ood) {
    DatasetManifest ood_manifest = build_manifest(ood.root, ood.rules);
    write_manifest_jsonl(ood_manifest, art.manifests() / ("ood_" + ood.name + ".jsonl"));
    MelFeatureStore ood_store = make_store(cfg, art, ood_manifest, "ood_" + ood.name);
    ood_store.precompute_all();
  }
  std::cout << "prepared " << manifest.size() << " rows (" << split.train_ids.size() << " train / "
            << split.val_ids.size() << " val / " << split.test_ids.size() << " test)\n";
}

void cmd_train(const ExperimentConfig& cfg, const RunArtifacts& art) {
  DatasetManifest manifest = require_manifest(art);
  SplitAssignment split = require_split(art);
  MelFeatureStore store = make_store(cfg, art, manifest);
  fs::create_directories(art.checkpoints());
  fs::create_directories(art.metrics());

  for (const auto& spec : cfg.models) {
    std::string name = architecture_name(spec.architecture);
    Classifier model = build_classifier(spec, static_cast<uint64_t>(cfg.seed));
    TrainingLog log = train_classifier(model, split.train_ids, split.val_ids, store, cfg.train);
    model.save_checkpoint(art.checkpoints() / (name + ".ckpt"));

    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& e : log.epochs) {
      epochs.push_back({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"train_accuracy", e.train_accuracy},
                        {"val_loss", e.val_loss},
                        {"val_accuracy", e.val_accuracy}});
    }
    nlohmann::json out = {
        {"model", name},
        {"epochs", epochs},
        {"wall_time_s", log.wall_time_s},
        {"best_epoch", log.best_epoch},
        {"final_fingerprint", log.final_fingerprint},
        {"early_exit", log.early_exit},
        {"config_hash", cfg.config_hash},
        {"seed", cfg.seed},
    };
    write_text_file(art.metrics() / ("train_log_" + name + ".json"), out.dump(2) + "\n");
    std::cout << "trained " << name << " in " << log.wall_time_s << " s (best epoch "
              << log.best_epoch << ")\n";
  }
}

void cmd_evaluate(const ExperimentConfig& cfg, const RunArtifacts& art) {
  DatasetManifest manifest = require_manifest(art);
  SplitAssignment split = require_split(art);
  MelFeatureStore store = make_store(cfg, art, manifest);
  fs::create_directories(art.metrics());

  std::vector<ModelMetricsRow> rows;
  for (const auto& spec : cfg.models) {
    std::string name = architecture_name(spec.architecture);
    Classifier model = require_checkpoint(art, spec);

    nlohmann::json train_log;
    fs::path log_path = art.metrics() / ("train_log_" + name + ".json");
    double wall = 0.0;
    if (fs::exists(log_path)) {
      train_log = nlohmann::json::parse(read_text_file(log_path));
      wall = train_log.value("wall_time_s", 0.0);
    }

    EvalResult in_domain = evaluate_ids(model, split.test_ids, store);
    rows.push_back({name, "in_domain_test", in_domain.metrics, wall});

    std::vector<NamedEvalSet> sets;
    std::vector<std::unique_ptr<MelFeatureStore>> ood_stores;
    std::vector<DatasetManifest> ood_manifests;
    for (const auto& ood : cfg.ood) {
      ood_manifests.push_back(require_manifest(art, "ood_" + ood.name));
      ood_stores.push_back(std::make_unique<MelFeatureStore>(
          make_store(cfg, art, ood_manifests.back(), "ood_" + ood.name)));
      sets.push_back({ood.name, ood_manifests.back().ids(), ood_stores.back().get()});
    }
    if (!sets.empty()) {
      for (const auto& row : run_out_of_domain_eval(model, sets)) {
        rows.push_back({name, row.name, row.metrics, wall});
      }
    }
  }
  write_metrics_csv(art.metrics() / "eval.csv", rows);
  write_metrics_json(art.metrics() / "eval.json", rows);
  std::cout << "evaluated " << cfg.models.size() << " model(s), " << rows.size() << " row(s)\n";
}

void cmd_roc(const ExperimentConfig& cfg, const RunArtifacts& art) {
  DatasetManifest manifest = require_manifest(art);
  SplitAssignment split = require_split(art);
  MelFeatureStore store = make_store(cfg, art, manifest);
  fs::create_directories(art.roc());

  std::vector<std::pair<std::string, RocCurve>> curves;
  for (const auto& spec : cfg.models) {
    std::string name = architecture_name(spec.architecture);
    Classifier model = require_checkpoint(art, spec);
    EvalResult result = evaluate_ids(model, split.test_ids, store);
    RocCurve curve = compute_roc_auc(result.labels, result.scores, kClassHuman);
    write_roc_csv(art.roc() / (name + ".csv"), curve);
    curves.push_back({name, curve});
  }
  render_roc_plot(art.roc() / "roc.png", curves);
  std::cout << "roc curves for " << curves.size() << " model(s)\n";
}

std::unique_ptr<EmbeddingProvider> make_provider(const std::string& setting, bool audio,
                                                 const FusionSection& fusion) {
  if (setting.rfind("exec:", 0) == 0) {
    return std::make_unique<ExecEmbeddingProvider>(setting.substr(5));
  }
  if (setting == "mel_stats") return std::make_unique<MelStatsAudioProvider>(fusion.audio_bands);
  if (setting == "char_hash") return std::make_unique<HashedTextProvider>(fusion.text_dim);
  throw Error(ErrorCode::config_error,
              std::string(audio ? "audio" : "text") + " provider '" + setting + "' unknown");
}

void cmd_fuse(const ExperimentConfig& cfg, const RunArtifacts& art) {
  DatasetManifest manifest = require_manifest(art);
  SplitAssignment split = require_split(art);
  fs::create_directories(art.metrics());

  auto audio_provider = make_provider(cfg.fusion.audio_provider, true, cfg.fusion);
  auto text_provider = make_provider(cfg.fusion.text_provider, false, cfg.fusion);
  EmptyLyricsPolicy policy = cfg.fusion.empty_lyrics == "zero_fill" ? EmptyLyricsPolicy::zero_fill
                                                                    : EmptyLyricsPolicy::strict;

  fs::path embed_dir = resolve_cache_dir(cfg.cache_dir, art.root) / "embeddings";
  auto embed_ids = [&](const std::vector<std::string>& ids) {
    std::vector<std::pair<Tensor, int>> pairs;
    for (const auto& id : ids) {
      const ManifestRow& row = manifest.row_by_id(id);
      if (!row.lyrics_path && policy == EmptyLyricsPolicy::strict) continue;  // lyrics subset only
      AudioClip clip = load_audio(row.path, cfg.mel.target_rate);
      std::optional<std::string> lyrics;
      if (row.lyrics_path) lyrics = read_text_file(*row.lyrics_path);
      Tensor fused = embed_pair(*audio_provider, *text_provider, clip, lyrics, policy);

      Tensor audio_part({audio_provider->dim()});
      std::copy(fused.data(), fused.data() + audio_provider->dim(), audio_part.data());
      write_embedding_cache(embed_dir, id, "audio", audio_provider->provider_id(), audio_part);
      Tensor text_part({text_provider->dim()});
      std::copy(fused.data() + audio_provider->dim(), fused.data() + fused.numel(),
                text_part.data());
      write_embedding_cache(embed_dir, id, "text", text_provider->provider_id(), text_part);

      pairs.push_back({std::move(fused), label_class_index(row.label)});
    }
    return pairs;
  };

  auto train_pairs = embed_ids(split.train_ids);
  auto val_pairs = embed_ids(split.val_ids);
  auto test_pairs = embed_ids(split.test_ids);
  if (train_pairs.empty() || test_pairs.empty()) {
    throw Error(ErrorCode::empty_dataset, "no lyric-paired samples in the splits");
  }

  // Frozen-provider probe: provider outputs on a fixed set, hashed before
  // and after head training.
  auto probe_hash = [&]() {
    uint64_t h = 0xcbf29ce484222325ULL;
    size_t probe = std::min<size_t>(10, split.train_ids.size());
    for (size_t i = 0; i < probe; ++i) {
      const ManifestRow& row = manifest.row_by_id(split.train_ids[i]);
      AudioClip clip = load_audio(row.path, cfg.mel.target_rate);
      Tensor a = audio_provider->embed_audio(clip);
      h = fnv1a64(a.data(), static_cast<size_t>(a.numel()) * sizeof(float), h);
      std::string text = row.lyrics_path ? read_text_file(*row.lyrics_path) : std::string("probe");
      Tensor t = text_provider->embed_text(text);
      h = fnv1a64(t.data(), static_cast<size_t>(t.numel()) * sizeof(float), h);
    }
    return hex64(h);
  };

  std::string providers_before = probe_hash();
  TrainConfig fusion_cfg = cfg.train;
  FusionModel model = train_fusion_head(train_pairs, fusion_cfg, audio_provider->dim(),
                                        text_provider->dim(), audio_provider->provider_id(),
                                        text_provider->provider_id());
  std::string providers_after = probe_hash();

  auto eval_pairs = [&](const std::vector<std::pair<Tensor, int>>& pairs) {
    std::vector<int> labels, preds;
    for (const auto& [vec, label] : pairs) {
      auto probs = predict_fusion(model, vec);
      labels.push_back(label);
      preds.push_back(probs[1] >= probs[0] ? 1 : 0);
    }
    return compute_metrics(labels, preds, kClassHuman);
  };

  Metrics val_metrics = eval_pairs(val_pairs.empty() ? test_pairs : val_pairs);
  Metrics test_metrics = eval_pairs(test_pairs);

  nlohmann::json out = {
      {"model", "multimodal"},
      {"audio_provider", audio_provider->provider_id()},
      {"text_provider", text_provider->provider_id()},
      {"audio_dim", audio_provider->dim()},
      {"text_dim", text_provider->dim()},
      {"val", metrics_to_json(val_metrics)},
      {"test", metrics_to_json(test_metrics)},
      {"n_train_pairs", train_pairs.size()},
      {"provider_probe_before", providers_before},
      {"provider_probe_after", providers_after},
      {"providers_frozen", providers_before == providers_after},
      {"head_fingerprint", model.fingerprint()},
      {"config_hash", cfg.config_hash},
  };
  write_text_file(art.metrics() / "fusion.json", out.dump(2) + "\n");
  std::cout << "fusion test accuracy " << test_metrics.accuracy << " on " << test_pairs.size()
            << " pairs\n";
}

void cmd_explain(const ExperimentConfig& cfg, const RunArtifacts& art) {
  DatasetManifest manifest = require_manifest(art);
  SplitAssignment split = require_split(art);
  MelFeatureStore store = make_store(cfg, art, manifest);
  fs::create_directories(art.heatmaps());
  fs::create_directories(art.overlays());

  const ClassifierSpec& spec = cfg.models.front();
  Classifier model = require_checkpoint(art, spec);

  std::vector<std::string> picked = pick_confident_samples(model, split.val_ids, store,
                                                           cfg.xai.min_confidence,
                                                           static_cast<size_t>(cfg.xai.sample_count));
  if (picked.empty()) {
    // Fall back to the most confident available rather than emitting nothing.
    picked = pick_confident_samples(model, split.val_ids, store, 0.0,
                                    static_cast<size_t>(cfg.xai.sample_count));
  }

  for (const auto& id : picked) {
    Tensor grid = store.grid(id);
    int predicted = model.predict_class(model_input_from_grid(model.spec(), grid));
    for (Technique technique : cfg.xai.techniques) {
      uint64_t seed = derive_seed(static_cast<uint64_t>(cfg.seed),
                                  std::string(technique_name(technique)) + ":" + id);
      AttributionMap map = compute_attribution(model, technique, grid, predicted, cfg.xai.config,
                                               seed);
      map.sample_id = id;
      map.seed = seed;
      std::string stem = id + "_" + technique_name(technique);
      write_heatmap(art.heatmaps() / (stem + ".f32"), map, model.fingerprint());
      OverlayOptions options;
      options.fraction = cfg.xai.overlay_fraction;
      options.clip_seconds = cfg.mel.clip_seconds;
      render_overlay_png(art.overlays() / (stem + ".png"), grid, map, options);
    }
  }
  std::cout << "explained " << picked.size() << " sample(s) x " << cfg.xai.techniques.size()
            << " technique(s)\n";
}

void cmd_fidelity(const ExperimentConfig& cfg, const RunArtifacts& art) {
  DatasetManifest manifest = require_manifest(art);
  SplitAssignment split = require_split(art);
  MelFeatureStore store = make_store(cfg, art, manifest);
  fs::create_directories(art.fidelity());

  const ClassifierSpec& spec = cfg.models.front();
  Classifier model = require_checkpoint(art, spec);

  // Deterministic evaluation subset for the single-technique protocol.
  std::vector<std::string> ids = split.val_ids;
  Rng rng(derive_seed(static_cast<uint64_t>(cfg.seed), "fidelity-single"));
  deterministic_shuffle(ids, rng);
  if (ids.size() > cfg.fidelity.single_max_samples) ids.resize(cfg.fidelity.single_max_samples);

  std::vector<FidelityReport> singles;
  nlohmann::json singles_json = nlohmann::json::array();
  std::ostringstream single_log;
  for (Technique technique : cfg.xai.techniques) {
    FidelityReport report = run_single_fidelity(model, ids, store, technique, cfg.fidelity.policy,
                                                cfg.xai.config,
                                                static_cast<uint64_t>(cfg.seed));
    singles.push_back(report);
    singles_json.push_back(single_fidelity_to_json(report));
    for (const auto& s : report.samples) {
      nlohmann::json line = {{"technique", technique_name(technique)},
                             {"id", s.id},
                             {"label", s.label},
                             {"base_prediction", s.base_prediction},
                             {"masked_prediction", s.masked_prediction},
                             {"mask_pct", s.mask_pct}};
      single_log << line.dump() << "\n";
    }
  }
  write_single_fidelity_csv(art.fidelity() / "single.csv", singles);
  write_text_file(art.fidelity() / "single.json",
                  nlohmann::json{{"reports", singles_json}, {"config_hash", cfg.config_hash}}.dump(2) +
                      "\n");
  write_text_file(art.fidelity() / "single_samples.jsonl", single_log.str());

  MultiFidelityConfig multi_cfg;
  multi_cfg.sizes = cfg.fidelity.sizes;
  multi_cfg.runs = cfg.fidelity.runs;
  multi_cfg.subsample = cfg.fidelity.subsample;
  MultiFidelityReport multi =
      run_multi_fidelity(model, split.val_ids, store, cfg.xai.techniques, multi_cfg,
                         cfg.fidelity.policy, cfg.xai.config, static_cast<uint64_t>(cfg.seed));
  write_multi_fidelity_csv(art.fidelity() / "multi.csv", multi);
  nlohmann::json multi_json = multi_fidelity_to_json(multi);
  multi_json["config_hash"] = cfg.config_hash;
  multi_json["model_fingerprint"] = model.fingerprint();
  write_text_file(art.fidelity() / "multi.json", multi_json.dump(2) + "\n");
  write_multi_fidelity_run_log(art.fidelity() / "multi_runs.jsonl", multi);
  std::cout << "fidelity: " << singles.size() << " single report(s), " << multi.rows.size()
            << " combination size(s)\n";
}

void cmd_report(const ExperimentConfig& cfg, const RunArtifacts& art) {
  if (!fs::exists(art.metrics()) || fs::is_empty(art.metrics())) {
    throw Error(ErrorCode::missing_artifact, "no metrics to report; run `evaluate` first");
  }
  fs::create_directories(art.report());

  std::ostringstream md;
  md << "# Experiment report\n\n";
  md << "run id: `" << cfg.run_id << "`, config hash: `" << cfg.config_hash << "`\n\n";

  nlohmann::json tables = nlohmann::json::object();

  fs::path eval_path = art.metrics() / "eval.json";
  if (fs::exists(eval_path)) {
    auto rows = read_metrics_json(eval_path);
    std::vector<ModelMetricsRow> in_domain;
    std::vector<ModelMetricsRow> ood_rows;
    for (const auto& row : rows) {
      (row.dataset == "in_domain_test" ? in_domain : ood_rows).push_back(row);
    }
    std::sort(in_domain.begin(), in_domain.end(),
              [](const auto& a, const auto& b) { return a.metrics.f1 > b.metrics.f1; });

    md << "## Model comparison (in-domain test)\n\n";
    md << "| Model | Training Time (s) | Accuracy | F1 |\n|---|---|---|---|\n";
    nlohmann::json cmp = nlohmann::json::array();
    for (const auto& row : in_domain) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "| %s | %.1f | %.3f | %.3f |\n", row.model.c_str(),
                    row.wall_time_s, row.metrics.accuracy, row.metrics.f1);
      md << buf;
      cmp.push_back({{"model", row.model},
                     {"training_time_s", row.wall_time_s},
                     {"accuracy", row.metrics.accuracy},
                     {"f1", row.metrics.f1}});
    }
    tables["model_comparison"] = cmp;

    if (!ood_rows.empty()) {
      md << "\n## Out-of-domain performance\n\n";
      md << "Samples are pooled within each named manifest.\n\n";
      md << "| Model | Dataset | Acc | F1 |\n|---|---|---|---|\n";
      nlohmann::json ood_json = nlohmann::json::array();
      for (const auto& row : ood_rows) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "| %s | %s | %.3f | %.3f |\n", row.model.c_str(),
                      row.dataset.c_str(), row.metrics.accuracy, row.metrics.f1);
        md << buf;
        ood_json.push_back({{"model", row.model},
                            {"dataset", row.dataset},
                            {"accuracy", row.metrics.accuracy},
                            {"f1", row.metrics.f1}});
      }
      tables["out_of_domain"] = ood_json;
    }
  }

  fs::path fusion_path = art.metrics() / "fusion.json";
  if (fs::exists(fusion_path)) {
    nlohmann::json fusion = nlohmann::json::parse(read_text_file(fusion_path));
    md << "\n## Multimodal (early fusion)\n\n| Model | Accuracy | F1 |\n|---|---|---|\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "| multimodal | %.3f | %.3f |\n",
                  fusion["test"]["accuracy"].get<double>(), fusion["test"]["f1"].get<double>());
    md << buf;
    md << "\nproviders frozen during head training: "
       << (fusion.value("providers_frozen", false) ? "yes" : "no") << "\n";
    tables["multimodal"] = fusion;
  }

  fs::path single_path = art.fidelity() / "single.json";
  if (fs::exists(single_path)) {
    nlohmann::json single = nlohmann::json::parse(read_text_file(single_path));
    md << "\n## Fidelity, single technique (masked top-10%)\n\n";
    md << "| Visualisation | Accuracy | F1 | Recall |\n|---|---|---|---|\n";
    const auto& reports = single["reports"];
    if (!reports.empty()) {
      const auto& base = reports[0]["baseline"];
      char buf[160];
      std::snprintf(buf, sizeof(buf), "| raw spectrogram | %.1f | %.1f | %.1f |\n",
                    100.0 * base["accuracy"].get<double>(), 100.0 * base["f1"].get<double>(),
                    100.0 * base["recall"].get<double>());
      md << buf;
      for (const auto& report : reports) {
        const auto& masked = report["masked"];
        std::snprintf(buf, sizeof(buf), "| %s | %.1f | %.1f | %.1f |\n",
                      report["technique"].get<std::string>().c_str(),
                      100.0 * masked["accuracy"].get<double>(), 100.0 * masked["f1"].get<double>(),
                      100.0 * masked["recall"].get<double>());
        md << buf;
      }
    }
    tables["single_fidelity"] = single;
  }

  fs::path multi_path = art.fidelity() / "multi.json";
  if (fs::exists(multi_path)) {
    nlohmann::json multi = nlohmann::json::parse(read_text_file(multi_path));
    md << "\n## Fidelity, multiple techniques (overlap masking)\n\n";
    md << "| Combination Size | Avg Mask | Accuracy | p-value | Mask Reduction | Accuracy Change "
          "|\n|---|---|---|---|---|---|\n";
    for (const auto& row : multi["rows"]) {
      bool first = row["p_value"].is_null();
      char p_buf[32] = "-", red_buf[32] = "-", chg_buf[32] = "-";
      if (!first) {
        std::snprintf(p_buf, sizeof(p_buf), "%.3g", row["p_value"].get<double>());
        std::snprintf(red_buf, sizeof(red_buf), "%.1f", row["mask_reduction_pct"].get<double>());
        std::snprintf(chg_buf, sizeof(chg_buf), "%.1f", row["accuracy_change_pct"].get<double>());
      }
      char buf[240];
      std::snprintf(buf, sizeof(buf), "| %d | %.1f+/-%.1f | %.1f+/-%.1f | %s | %s | %s |\n",
                    row["combination_size"].get<int>(), row["avg_mask_mean"].get<double>(),
                    row["avg_mask_std"].get<double>(), 100.0 * row["accuracy_mean"].get<double>(),
                    100.0 * row["accuracy_std"].get<double>(), p_buf, red_buf, chg_buf);
      md << buf;
    }
    tables["multi_fidelity"] = multi;
  }

  if (fs::exists(art.roc() / "roc.png")) {
    md << "\n## ROC\n\n![roc](../roc/roc.png)\n";
  }
  if (fs::exists(art.overlays()) && !fs::is_empty(art.overlays())) {
    md << "\n## Attribution overlays\n\n";
    for (const auto& entry : fs::directory_iterator(art.overlays())) {
      md << "- [" << entry.path().filename().string() << "](../overlays/"
         << entry.path().filename().string() << ")\n";
    }
  }

  write_text_file(art.report() / "summary.md", md.str());
  write_text_file(art.report() / "tables.json", tables.dump(2) + "\n");

  // CSV mirror of the model comparison.
  if (tables.contains("model_comparison")) {
    std::ostringstream csv;
    csv << "model,training_time_s,accuracy,f1\n";
    for (const auto& row : tables["model_comparison"]) {
      csv << row["model"].get<std::string>() << "," << row["training_time_s"].get<double>() << ","
          << row["accuracy"].get<double>() << "," << row["f1"].get<double>() << "\n";
    }
    write_text_file(art.report() / "tables.csv", csv.str());
  }
  std::cout << "report written to " << (art.report() / "summary.md").string() << "\n";
}

}  // namespace

void run_command(const std::string& command, const ExperimentConfig& cfg) {
  RunArtifacts art{cfg.out_dir};
  fs::create_directories(art.root);
  auto t0 = std::chrono::steady_clock::now();

  if (command == "prepare") cmd_prepare(cfg, art);
  else if (command == "train") cmd_train(cfg, art);
  else if (command == "evaluate") cmd_evaluate(cfg, art);
  else if (command == "roc") cmd_roc(cfg, art);
  else if (command == "fuse") cmd_fuse(cfg, art);
  else if (command == "explain") cmd_explain(cfg, art);
  else if (command == "fidelity") cmd_fidelity(cfg, art);
  else if (command == "report") cmd_report(cfg, art);
  else throw Error(ErrorCode::config_error, "unknown command '" + command + "'");

  double duration = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  append_run_log(art, cfg, command, duration);
}

}  // namespace mgmd
