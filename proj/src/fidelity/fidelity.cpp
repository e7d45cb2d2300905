#include "mgmd/fidelity/fidelity.hpp"

#include <algorithm>
#include <cmath>

#include "mgmd/core/error.hpp"
#include "mgmd/core/random.hpp"
#include "mgmd/data/manifest.hpp"
#include "mgmd/fidelity/stats.hpp"

namespace mgmd {

void MaskPolicy::validate() const {
  if (fraction <= 0.0 || fraction > 1.0) {
    throw Error(ErrorCode::config_error, "mask fraction must be in (0, 1]");
  }
  if (!std::isfinite(fill)) throw Error(ErrorCode::config_error, "mask fill must be finite");
}

Tensor apply_mask(const Tensor& input, const BinaryMask& mask, float fill) {
  if (input.rank() != 2 || input.dim(0) != mask.rows || input.dim(1) != mask.cols) {
    throw Error(ErrorCode::shape_error, "mask shape does not match the input");
  }
  Tensor out = input;
  for (int64_t i = 0; i < out.numel(); ++i) {
    if (mask.selected[static_cast<size_t>(i)]) out[i] = fill;
  }
  return out;
}

BinaryMask overlap_mask(const std::vector<BinaryMask>& masks, int k) {
  if (masks.empty()) throw Error(ErrorCode::empty_input, "no masks to combine");
  if (k < 1) throw Error(ErrorCode::config_error, "coverage threshold must be >= 1");
  int64_t rows = masks[0].rows, cols = masks[0].cols;
  for (const auto& m : masks) {
    if (m.rows != rows || m.cols != cols) {
      throw Error(ErrorCode::shape_error, "masks differ in shape");
    }
  }
  BinaryMask out;
  out.rows = rows;
  out.cols = cols;
  out.polarity = masks[0].polarity;
  out.selected.assign(static_cast<size_t>(rows * cols), 0);
  for (int64_t i = 0; i < rows * cols; ++i) {
    int cover = 0;
    for (const auto& m : masks) cover += m.selected[static_cast<size_t>(i)] != 0;
    out.selected[static_cast<size_t>(i)] = cover >= k ? 1 : 0;
  }
  out.fraction = static_cast<double>(out.count()) / static_cast<double>(rows * cols);
  return out;
}

namespace {

int predict_grid(const Classifier& model, const Tensor& grid) {
  return model.predict_class(model_input_from_grid(model.spec(), grid));
}

}  // namespace

FidelityReport run_single_fidelity(const Classifier& model, const std::vector<std::string>& ids,
                                   const ExampleSource& source, Technique technique,
                                   const MaskPolicy& policy, const XaiConfig& xai_config,
                                   uint64_t seed) {
  policy.validate();
  if (ids.empty()) throw Error(ErrorCode::empty_dataset, "no samples for fidelity run");

  std::vector<int> labels, base_preds, masked_preds;
  std::vector<FidelitySampleOutcome> outcomes;
  double mask_pct_sum = 0.0;
  for (const auto& id : ids) {
    Tensor grid = source.grid(id);
    int label = source.label_of(id);
    int predicted = predict_grid(model, grid);

    AttributionMap attribution = compute_attribution(model, technique, grid, predicted, xai_config,
                                                     derive_seed(seed, "single:" + id));
    BinaryMask mask = threshold_topk(attribution, policy.fraction, policy.polarity);
    Tensor masked = apply_mask(grid, mask, policy.fill);
    int masked_pred = predict_grid(model, masked);

    labels.push_back(label);
    base_preds.push_back(predicted);
    masked_preds.push_back(masked_pred);
    double pct = 100.0 * static_cast<double>(mask.count()) / static_cast<double>(mask.cells());
    mask_pct_sum += pct;
    outcomes.push_back({id, label, predicted, masked_pred, pct});
  }

  FidelityReport report;
  report.technique = technique;
  report.policy = policy;
  report.n_samples = static_cast<int64_t>(ids.size());
  report.baseline_metrics = compute_metrics(labels, base_preds, kClassHuman);
  report.masked_metrics = compute_metrics(labels, masked_preds, kClassHuman);
  report.avg_mask_pct = mask_pct_sum / static_cast<double>(ids.size());
  report.samples = std::move(outcomes);
  return report;
}

double relative_change_pct(double prev, double cur) {
  return prev != 0.0 ? 100.0 * (prev - cur) / prev : 0.0;
}

MultiFidelityReport run_multi_fidelity(const Classifier& model, const std::vector<std::string>& ids,
                                       const ExampleSource& source,
                                       const std::vector<Technique>& techniques,
                                       const MultiFidelityConfig& config, const MaskPolicy& policy,
                                       const XaiConfig& xai_config, uint64_t seed,
                                       const AttributionProvider& provider) {
  policy.validate();
  if (ids.empty()) throw Error(ErrorCode::empty_dataset, "no samples for fidelity run");
  if (config.sizes.empty()) throw Error(ErrorCode::config_error, "no combination sizes");
  int max_size = *std::max_element(config.sizes.begin(), config.sizes.end());
  if (static_cast<int>(techniques.size()) < max_size) {
    throw Error(ErrorCode::too_few_techniques,
                "need at least " + std::to_string(max_size) + " techniques");
  }
  if (config.runs < 2) throw Error(ErrorCode::too_few_runs, "need at least 2 runs for p-values");

  MultiFidelityReport report;
  report.techniques = techniques;
  report.policy = policy;
  report.n_runs = config.runs;

  for (int run = 0; run < config.runs; ++run) {
    uint64_t run_seed = derive_seed(seed, "run:" + std::to_string(run));
    Rng rng(run_seed);

    // Redraw the evaluation subsample for this run.
    std::vector<std::string> pool = ids;
    deterministic_shuffle(pool, rng);
    if (pool.size() > config.subsample) pool.resize(config.subsample);

    MultiFidelityRun run_log;
    run_log.run_index = run;
    run_log.run_seed = run_seed;
    run_log.sample_ids = pool;

    // Per-sample per-technique top-fraction masks; stochastic techniques
    // get fresh per-run seeds.
    struct SampleMasks {
      std::string id;
      int label;
      Tensor grid;
      std::vector<BinaryMask> masks;
    };
    std::vector<SampleMasks> samples;
    for (const auto& id : pool) {
      SampleMasks s;
      s.id = id;
      s.grid = source.grid(id);
      s.label = source.label_of(id);
      int predicted = predict_grid(model, s.grid);
      for (Technique technique : techniques) {
        uint64_t technique_seed =
            derive_seed(run_seed, std::string(technique_name(technique)) + ":" + id);
        AttributionMap attribution =
            provider ? provider(technique, id, s.grid, predicted, technique_seed)
                     : compute_attribution(model, technique, s.grid, predicted, xai_config,
                                           technique_seed);
        s.masks.push_back(threshold_topk(attribution, policy.fraction, policy.polarity));
      }
      samples.push_back(std::move(s));
    }

    for (int k : config.sizes) {
      MultiFidelityRunEntry entry;
      entry.k = k;
      std::vector<int> labels, preds;
      double pct_sum = 0.0;
      for (const auto& s : samples) {
        BinaryMask combined = overlap_mask(s.masks, k);
        Tensor masked = apply_mask(s.grid, combined, policy.fill);
        int pred = predict_grid(model, masked);
        double pct = 100.0 * static_cast<double>(combined.count()) /
                     static_cast<double>(combined.cells());
        pct_sum += pct;
        labels.push_back(s.label);
        preds.push_back(pred);
        entry.samples.push_back({s.id, s.label, pred, pct});
      }
      entry.avg_mask_pct = pct_sum / static_cast<double>(samples.size());
      int64_t correct = 0;
      for (size_t i = 0; i < labels.size(); ++i) correct += labels[i] == preds[i];
      entry.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
      run_log.entries.push_back(std::move(entry));
    }
    report.runs.push_back(std::move(run_log));
  }

  // Aggregate across runs.
  std::vector<double> prev_acc;
  double prev_mask_mean = 0.0, prev_acc_mean = 0.0;
  for (size_t size_idx = 0; size_idx < config.sizes.size(); ++size_idx) {
    std::vector<double> mask_pcts, accuracies;
    for (const auto& run : report.runs) {
      mask_pcts.push_back(run.entries[size_idx].avg_mask_pct);
      accuracies.push_back(run.entries[size_idx].accuracy);
    }
    MultiFidelityRow row;
    row.k = config.sizes[size_idx];
    row.avg_mask_mean = sample_mean(mask_pcts);
    row.avg_mask_std = sample_stddev(mask_pcts);
    row.accuracy_mean = sample_mean(accuracies);
    row.accuracy_std = sample_stddev(accuracies);
    if (size_idx > 0) {
      row.p_value = welch_t_test(prev_acc, accuracies);
      row.mask_reduction_pct = relative_change_pct(prev_mask_mean, row.avg_mask_mean);
      row.accuracy_change_pct = -relative_change_pct(prev_acc_mean, row.accuracy_mean);
    }
    prev_acc = accuracies;
    prev_mask_mean = row.avg_mask_mean;
    prev_acc_mean = row.accuracy_mean;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace mgmd
