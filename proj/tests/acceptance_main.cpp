// Acceptance suite: runs every release criterion end to end and prints
// one pass/fail line per criterion. Exits nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "mgmd/core/random.hpp"
#include "mgmd/data/splits.hpp"
#include "mgmd/fidelity/fidelity.hpp"
#include "mgmd/fidelity/stats.hpp"
#include "mgmd/fusion/fusion.hpp"
#include "mgmd/train/trainer.hpp"
#include "mgmd/xai/methods.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "support/toy_models.hpp"

using namespace mgmd;
using namespace mgmd::testing;

namespace {

struct Criterion {
  std::string name;
  std::function<void()> run;
};

void require(bool condition, const std::string& message) {
  if (!condition) throw std::runtime_error(message);
}

Tensor random_grid(int64_t rows, int64_t cols, uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
  Rng rng(seed);
  Tensor grid({rows, cols});
  for (int64_t i = 0; i < grid.numel(); ++i) grid[i] = rng.uniform(lo, hi);
  return grid;
}

double cosine(const Tensor& a, const Tensor& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb) + 1e-30);
}

// Shared planted-feature model: trained once, reused by several criteria.
struct TrainedFixture {
  PlantedDataset data;
  Classifier model;
  double val_accuracy = 0.0;
};

TrainedFixture& trained_fixture() {
  static TrainedFixture* fixture = [] {
    auto* f = new TrainedFixture();
    PlantedConfig cfg;
    f->data = make_planted_dataset(cfg);
    ClassifierSpec spec;
    spec.architecture = Architecture::tinycnn;
    spec.input_shape = {1, cfg.side, cfg.side};
    f->model = build_classifier(spec, 11);
    TrainConfig tc;
    tc.seed = 11;
    train_classifier(f->model, f->data.train_ids, f->data.val_ids, f->data.source, tc);
    f->val_accuracy = evaluate_ids(f->model, f->data.val_ids, f->data.source).metrics.accuracy;
    return f;
  }();
  return *fixture;
}

// --- criteria ---------------------------------------------------------------

void criterion_ig_completeness() {
  auto& fixture = trained_fixture();
  ClassifierScoreModel scorer(fixture.model, 1);
  Tensor baseline({32, 32}, 0.0f);

  int improved = 0;
  for (int i = 0; i < 20; ++i) {
    Tensor input = random_grid(32, 32, 9000 + static_cast<uint64_t>(i));
    AttributionMap coarse = integrated_gradients(scorer, input, baseline, 8);
    AttributionMap fine = integrated_gradients(scorer, input, baseline, 256);
    double diff = std::abs(fine.params.at("score_diff"));
    double fine_err = std::abs(fine.params.at("completeness_residual"));
    double coarse_err = std::abs(coarse.params.at("completeness_residual"));
    require(fine_err <= 0.01 * diff, "completeness residual above 1% at 256 steps (input " +
                                         std::to_string(i) + ")");
    if (fine_err < coarse_err) ++improved;
  }
  require(improved >= 18, "error should shrink from 8 to 256 steps in >= 18/20 cases, got " +
                              std::to_string(improved));
}

void criterion_ig_linear_exactness() {
  for (uint64_t i = 0; i < 10; ++i) {
    Tensor w = random_grid(16, 16, 100 + i, -1.0f, 1.0f);
    Tensor x = random_grid(16, 16, 200 + i, -1.0f, 1.0f);
    LinearScorer model(w);
    AttributionMap map = integrated_gradients(model, x, Tensor({16, 16}, 0.0f), 4);
    for (int64_t j = 0; j < x.numel(); ++j) {
      double expected = static_cast<double>(w[j]) * x[j];
      double scale = std::max(std::abs(expected), 1e-9);
      require(std::abs(map.values[j] - expected) <= 1e-6 * scale + 1e-9,
              "linear IG deviates from w*x");
    }
  }
}

void criterion_cam_gradcam_agreement() {
  auto& fixture = trained_fixture();
  for (uint64_t i = 0; i < 20; ++i) {
    Tensor grid = random_grid(32, 32, 300 + i);
    AttributionMap cam_map = cam(fixture.model, grid, 1);
    AttributionMap gc_map = grad_cam(fixture.model, grid, "", 1);
    double cs = cosine(cam_map.values, gc_map.values);
    require(cs >= 0.99, "cosine " + std::to_string(cs) + " below 0.99 on input " + std::to_string(i));
  }
}

void criterion_occlusion_oracle() {
  RegionSumScorer model(8, 8, 2, 3, 5, 6);
  Tensor x = random_grid(8, 8, 42, 0.1f, 1.0f);
  const int patch = 3, stride = 2;
  AttributionMap map = occlusion_sensitivity(model, x, patch, patch, stride, stride, 0.0f);

  std::vector<int64_t> positions;
  for (int64_t p = 0; p + patch <= 8; p += stride) positions.push_back(p);
  if (positions.back() != 8 - patch) positions.push_back(8 - patch);
  std::vector<double> acc(64, 0.0);
  std::vector<int> cover(64, 0);
  double base = model.score(x);
  for (int64_t py : positions) {
    for (int64_t px : positions) {
      Tensor masked = x;
      for (int64_t r = py; r < py + patch; ++r) {
        for (int64_t c = px; c < px + patch; ++c) masked.at(r, c) = 0.0f;
      }
      double delta = base - model.score(masked);
      for (int64_t r = py; r < py + patch; ++r) {
        for (int64_t c = px; c < px + patch; ++c) {
          acc[static_cast<size_t>(r * 8 + c)] += delta;
          cover[static_cast<size_t>(r * 8 + c)]++;
        }
      }
    }
  }
  for (int64_t i = 0; i < 64; ++i) {
    double expected = cover[static_cast<size_t>(i)] > 0
                          ? acc[static_cast<size_t>(i)] / cover[static_cast<size_t>(i)]
                          : 0.0;
    require(std::abs(map.values[i] - expected) < 1e-6, "occlusion deviates from brute force");
  }
}

void criterion_lime_sanity() {
  Segmentation seg = regular_grid_segmentation(8, 8, 2);
  SegmentMeanScorer model(&seg, 3);
  Tensor input({8, 8}, 1.0f);
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    AttributionMap map = lime_explain(model, input, seg, 1000, seed);
    std::vector<float> weight(4, 0.0f);
    for (int64_t i = 0; i < input.numel(); ++i) {
      weight[static_cast<size_t>(seg.segment_of[static_cast<size_t>(i)])] = map.values[i];
    }
    for (int s = 0; s < 4; ++s) {
      if (s != 3) {
        require(weight[3] > weight[static_cast<size_t>(s)],
                "target segment not strictly largest at seed " + std::to_string(seed));
      }
    }
  }
}

void criterion_overlap_algebra() {
  Rng rng(64);
  for (int round = 0; round < 1000; ++round) {
    int n_masks = 2 + static_cast<int>(rng.next_below(5));
    std::vector<BinaryMask> masks;
    for (int m = 0; m < n_masks; ++m) {
      BinaryMask mask;
      mask.rows = 8;
      mask.cols = 8;
      mask.selected.resize(64);
      for (auto& v : mask.selected) v = rng.next_float() < 0.35f ? 1 : 0;
      masks.push_back(std::move(mask));
    }
    BinaryMask prev = overlap_mask(masks, 1);
    for (int64_t i = 0; i < 64; ++i) {
      bool any = false;
      for (const auto& m : masks) any |= m.selected[static_cast<size_t>(i)] != 0;
      require(prev.selected[static_cast<size_t>(i)] == (any ? 1 : 0), "k=1 is not the union");
    }
    for (int k = 2; k <= n_masks; ++k) {
      BinaryMask cur = overlap_mask(masks, k);
      for (int64_t i = 0; i < 64; ++i) {
        if (cur.selected[static_cast<size_t>(i)]) {
          require(prev.selected[static_cast<size_t>(i)] != 0, "overlap(k+1) not within overlap(k)");
        }
      }
      prev = cur;
    }
    for (int64_t i = 0; i < 64; ++i) {
      bool all = true;
      for (const auto& m : masks) all &= m.selected[static_cast<size_t>(i)] != 0;
      require(prev.selected[static_cast<size_t>(i)] == (all ? 1 : 0), "k=n is not the intersection");
    }
  }
}

void criterion_fidelity_separation() {
  XaiConfig xai;
  xai.ig_steps = 32;
  int passes = 0;
  std::string detail;
  for (int rep = 0; rep < 5; ++rep) {
    PlantedConfig cfg;
    cfg.seed = 2000 + static_cast<uint64_t>(rep);
    PlantedDataset data = make_planted_dataset(cfg);
    require(planted_pixel_oracle_accuracy(data, data.val_ids) == 1.0,
            "pixel-threshold oracle must be perfect by construction");

    ClassifierSpec spec;
    spec.architecture = Architecture::tinycnn;
    spec.input_shape = {1, cfg.side, cfg.side};
    Classifier model = build_classifier(spec, 500 + static_cast<uint64_t>(rep));
    TrainConfig tc;
    tc.seed = 500 + rep;
    train_classifier(model, data.train_ids, data.val_ids, data.source, tc);

    double baseline = evaluate_ids(model, data.val_ids, data.source).metrics.accuracy;

    MaskPolicy policy;  // top-10%, positive, zero fill
    FidelityReport report =
        run_single_fidelity(model, data.val_ids, data.source, Technique::ig, policy, xai, 77);

    // Random-mask control of identical cardinality per sample.
    auto cells = static_cast<int64_t>(cfg.side * cfg.side);
    auto k = static_cast<int64_t>(std::llround(policy.fraction * static_cast<double>(cells)));
    std::vector<int> labels, preds;
    Rng mask_rng(3000 + static_cast<uint64_t>(rep));
    for (const auto& id : data.val_ids) {
      Tensor grid = data.source.grid(id);
      BinaryMask random_mask;
      random_mask.rows = cfg.side;
      random_mask.cols = cfg.side;
      random_mask.selected.assign(static_cast<size_t>(cells), 0);
      std::vector<int64_t> order(static_cast<size_t>(cells));
      for (int64_t i = 0; i < cells; ++i) order[static_cast<size_t>(i)] = i;
      deterministic_shuffle(order, mask_rng);
      for (int64_t i = 0; i < k; ++i) random_mask.selected[static_cast<size_t>(order[static_cast<size_t>(i)])] = 1;
      Tensor masked = apply_mask(grid, random_mask, 0.0f);
      labels.push_back(data.source.label_of(id));
      preds.push_back(model.predict_class(model_input_from_grid(model.spec(), masked)));
    }
    Metrics random_metrics = compute_metrics(labels, preds, kClassHuman);

    bool ok = baseline >= 0.95 && report.masked_metrics.accuracy <= 0.60 &&
              std::abs(random_metrics.accuracy - baseline) <= 0.05;
    if (ok) ++passes;
    char buf[160];
    std::snprintf(buf, sizeof(buf), " rep%d[base=%.2f ig=%.2f rnd=%.2f]", rep, baseline,
                  report.masked_metrics.accuracy, random_metrics.accuracy);
    detail += buf;
  }
  require(passes >= 4, "fidelity separation held in only " + std::to_string(passes) +
                           "/5 repetitions:" + detail);
}

void criterion_multi_fidelity_trend() {
  auto& fixture = trained_fixture();
  XaiConfig xai;
  xai.ig_steps = 32;
  xai.occlusion_patch = 8;
  xai.occlusion_stride = 4;
  xai.lime_samples = 200;
  xai.lime_grid = 8;

  MultiFidelityConfig config;
  config.runs = 5;
  config.subsample = 50;
  MaskPolicy policy;
  std::vector<Technique> techniques = {Technique::ig, Technique::occlusion, Technique::cam,
                                       Technique::gradcam, Technique::lime};
  MultiFidelityReport report =
      run_multi_fidelity(fixture.model, fixture.data.val_ids, fixture.data.source, techniques,
                         config, policy, xai, 4242);

  for (const auto& run : report.runs) {
    for (size_t k = 1; k < run.entries.size(); ++k) {
      require(run.entries[k].avg_mask_pct <= run.entries[k - 1].avg_mask_pct,
              "avg mask pct increased with k inside a run");
    }
  }
  double k2 = report.rows.front().avg_mask_mean;
  double k5 = report.rows.back().avg_mask_mean;
  require(k5 < 0.25 * k2, "k=5 area " + std::to_string(k5) + " is not below 25% of k=2 area " +
                              std::to_string(k2));
}

void criterion_statistics_oracle() {
  Rng rng(5150);
  for (int round = 0; round < 50; ++round) {
    size_t na = 2 + rng.next_below(14), nb = 2 + rng.next_below(14);
    double shift = rng.uniform(-3.0f, 3.0f);
    double scale = 0.2 + 2.0 * rng.next_double();
    std::vector<double> a, b;
    for (size_t i = 0; i < na; ++i) a.push_back(rng.normal() * scale);
    for (size_t i = 0; i < nb; ++i) b.push_back(rng.normal() + shift);
    double p = welch_t_test(a, b);
    double oracle = welch_p_value_oracle(a, b);
    require(std::abs(p - oracle) < 1e-6,
            "p=" + std::to_string(p) + " vs oracle=" + std::to_string(oracle));
  }
  require(welch_t_test({1, 2, 3}, {1, 2, 3}) == 1.0, "identical samples must give p=1");
  require(welch_t_test({0, 0, 0}, {1, 1, 1}) == 0.0, "zero-variance different means must give p=0");
  require(welch_t_test({2, 2}, {2, 2}) == 1.0, "zero-variance equal means must give p=1");
}

void criterion_metrics_roc_oracles() {
  // Hand-computed confusion fixture.
  std::vector<int> labels, preds;
  for (int i = 0; i < 50; ++i) {
    labels.push_back(1);
    preds.push_back(1);
  }
  for (int i = 0; i < 40; ++i) {
    labels.push_back(0);
    preds.push_back(0);
  }
  for (int i = 0; i < 5; ++i) {
    labels.push_back(0);
    preds.push_back(1);
  }
  for (int i = 0; i < 5; ++i) {
    labels.push_back(1);
    preds.push_back(0);
  }
  Metrics m = compute_metrics(labels, preds, 1);
  require(std::abs(m.accuracy - 0.90) < 1e-12, "accuracy fixture");
  require(std::abs(m.precision - 50.0 / 55.0) < 1e-12, "precision fixture");
  require(std::abs(m.recall - 50.0 / 55.0) < 1e-12, "recall fixture");
  require(std::abs(m.f1 - 50.0 / 55.0) < 1e-12, "f1 fixture");

  std::vector<int> roc_labels = {1, 0, 1, 0, 1};
  std::vector<double> perfect = {0.9, 0.1, 0.8, 0.2, 0.7};
  require(compute_roc_auc(roc_labels, perfect).auc == 1.0, "perfect scores must give auc 1");

  Rng rng(2718);
  std::vector<int> big_labels;
  std::vector<double> scores;
  for (int i = 0; i < 10000; ++i) {
    big_labels.push_back(i % 2);
    scores.push_back(rng.next_double());
  }
  double auc = compute_roc_auc(big_labels, scores).auc;
  require(auc > 0.45 && auc < 0.55, "random-score auc " + std::to_string(auc) + " out of band");

  std::vector<double> inverted;
  for (double s : scores) inverted.push_back(-s);
  double auc_inv = compute_roc_auc(big_labels, inverted).auc;
  require(std::abs(auc_inv - (1.0 - auc)) < 1e-9, "auc anti-symmetry violated");
}

void criterion_split_determinism() {
  DatasetManifest manifest;
  for (int i = 0; i < 500; ++i) {
    manifest.rows.push_back({"h" + std::to_string(i), "", Label::human, "", std::nullopt});
    manifest.rows.push_back({"m" + std::to_string(i), "", Label::machine, "", std::nullopt});
  }
  SplitAssignment a = assign_splits(manifest, 7);
  require(a.train_ids.size() == 640 && a.val_ids.size() == 160 && a.test_ids.size() == 200,
          "1000-row manifest must split 640/160/200");
  SplitAssignment b = assign_splits(manifest, 7);
  require(a.train_ids == b.train_ids && a.val_ids == b.val_ids && a.test_ids == b.test_ids,
          "identical seed must reproduce identical splits");

  // Pipeline determinism: identical config + seed, identical fingerprints
  // and bit-identical metric values.
  PlantedConfig cfg;
  cfg.n_train = 64;
  cfg.n_val = 16;
  PlantedDataset data = make_planted_dataset(cfg);
  auto run = [&] {
    ClassifierSpec spec;
    spec.architecture = Architecture::tinycnn;
    spec.input_shape = {1, cfg.side, cfg.side};
    Classifier model = build_classifier(spec, 77);
    TrainConfig tc;
    tc.epochs = 3;
    tc.seed = 77;
    train_classifier(model, data.train_ids, data.val_ids, data.source, tc);
    EvalResult result = evaluate_ids(model, data.val_ids, data.source);
    return std::make_pair(model.fingerprint(), result.metrics.accuracy);
  };
  auto first = run();
  auto second = run();
  require(first.first == second.first, "training fingerprints differ across identical runs");
  require(first.second == second.second, "metric values differ across identical runs");
}

void criterion_frozen_fusion() {
  // Probe set: provider outputs hashed before and after head training.
  MelStatsAudioProvider audio(16);
  HashedTextProvider text(12);
  std::vector<AudioClip> probe_clips;
  std::vector<std::string> probe_texts;
  Rng rng(88);
  for (int i = 0; i < 10; ++i) {
    AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.resize(4000);
    for (auto& s : clip.samples) s = rng.uniform(-0.4f, 0.4f);
    probe_clips.push_back(std::move(clip));
    probe_texts.push_back("probe line number " + std::to_string(i));
  }
  auto probe_hash = [&] {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (int i = 0; i < 10; ++i) {
      Tensor a = audio.embed_audio(probe_clips[static_cast<size_t>(i)]);
      Tensor t = text.embed_text(probe_texts[static_cast<size_t>(i)]);
      h = fnv1a64(a.data(), static_cast<size_t>(a.numel()) * sizeof(float), h);
      h = fnv1a64(t.data(), static_cast<size_t>(t.numel()) * sizeof(float), h);
    }
    return h;
  };

  // Jointly-informative dataset: each modality carries a 75%-reliable
  // direct cue plus one XOR bit; the parity resolves the label exactly.
  auto make_pairs = [](int n, uint64_t seed) {
    Rng gen(seed);
    std::vector<std::pair<Tensor, int>> fused;
    std::vector<std::pair<Tensor, int>> audio_only;
    std::vector<std::pair<Tensor, int>> text_only;
    for (int i = 0; i < n; ++i) {
      int label = static_cast<int>(gen.next_below(2));
      int bit_a = static_cast<int>(gen.next_below(2));
      int bit_b = bit_a ^ label;
      int cue_a = gen.next_float() < 0.75f ? label : 1 - label;
      int cue_b = gen.next_float() < 0.75f ? label : 1 - label;

      Tensor a({16}, 0.0f);
      a[0] = static_cast<float>(bit_a);
      a[1] = static_cast<float>(cue_a);
      for (int64_t j = 2; j < 16; ++j) a[j] = 0.05f * gen.normal();
      Tensor t({12}, 0.0f);
      t[0] = static_cast<float>(bit_b);
      t[1] = static_cast<float>(cue_b);
      for (int64_t j = 2; j < 12; ++j) t[j] = 0.05f * gen.normal();

      Tensor f({28});
      std::copy(a.data(), a.data() + 16, f.data());
      std::copy(t.data(), t.data() + 12, f.data() + 16);
      fused.push_back({f, label});
      audio_only.push_back({a, label});
      text_only.push_back({t, label});
    }
    return std::make_tuple(fused, audio_only, text_only);
  };
  auto [train_fused, train_audio, train_text] = make_pairs(800, 1001);
  auto [val_fused, val_audio, val_text] = make_pairs(300, 1002);

  uint64_t before = probe_hash();
  TrainConfig cfg;
  cfg.seed = 5;
  FusionModel fused_model = train_fusion_head(train_fused, cfg, 16, 12);
  uint64_t after = probe_hash();
  require(before == after, "provider outputs changed across head training");

  FusionModel audio_model = train_fusion_head(train_audio, cfg, 16, 0);
  FusionModel text_model = train_fusion_head(train_text, cfg, 0, 12);

  auto accuracy = [](const FusionModel& model, const std::vector<std::pair<Tensor, int>>& pairs) {
    int correct = 0;
    for (const auto& [v, label] : pairs) {
      auto probs = predict_fusion(model, v);
      if ((probs[1] >= probs[0] ? 1 : 0) == label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(pairs.size());
  };
  double fused_acc = accuracy(fused_model, val_fused);
  double audio_acc = accuracy(audio_model, val_audio);
  double text_acc = accuracy(text_model, val_text);
  char buf[120];
  std::snprintf(buf, sizeof(buf), "fused=%.3f audio=%.3f text=%.3f", fused_acc, audio_acc, text_acc);
  require(fused_acc >= audio_acc + 0.10 && fused_acc >= text_acc + 0.10,
          std::string("fusion must beat both unimodal heads by >= 10 points: ") + buf);
}

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {"IG completeness (1% at 256 steps, improving from 8)", criterion_ig_completeness},
      {"IG linear exactness (map equals w*x)", criterion_ig_linear_exactness},
      {"CAM/Grad-CAM agreement (cosine >= 0.99 on tinycnn)", criterion_cam_gradcam_agreement},
      {"Occlusion matches brute-force patch enumeration", criterion_occlusion_oracle},
      {"LIME ranks the active segment first (10 seeds)", criterion_lime_sanity},
      {"Overlap-mask algebra (containment, union, intersection)", criterion_overlap_algebra},
      {"Fidelity separation (IG mask hurts, random mask does not)", criterion_fidelity_separation},
      {"Multi-fidelity trend (mask area collapses with k)", criterion_multi_fidelity_trend},
      {"Welch statistic matches the quadrature oracle", criterion_statistics_oracle},
      {"Metrics and ROC oracles", criterion_metrics_roc_oracles},
      {"Split and pipeline determinism (640/160/200)", criterion_split_determinism},
      {"Frozen fusion providers; fusion beats unimodal", criterion_frozen_fusion},
  };

  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    auto start = std::chrono::steady_clock::now();
    std::string status = "PASS";
    std::string detail;
    try {
      criteria[i].run();
    } catch (const std::exception& e) {
      status = "FAIL";
      detail = e.what();
      ++failed;
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %2zu. %s (%.1fs)%s%s\n", status.c_str(), i + 1, criteria[i].name.c_str(),
                seconds, detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<size_t>(failed),
              criteria.size());
  return failed == 0 ? 0 : 1;
}
