#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mgmd/train/metrics.hpp"
#include "mgmd/train/trainer.hpp"
#include "mgmd/xai/methods.hpp"

namespace mgmd {

struct MaskPolicy {
  double fraction = 0.10;
  Polarity polarity = Polarity::positive;
  float fill = 0.0f;

  void validate() const;
};

/// Replaces selected cells with `fill`; everything else is untouched.
Tensor apply_mask(const Tensor& input, const BinaryMask& mask, float fill);

/// Cells covered by at least k of the given masks.
BinaryMask overlap_mask(const std::vector<BinaryMask>& masks, int k);

struct FidelitySampleOutcome {
  std::string id;
  int label = 0;
  int base_prediction = 0;
  int masked_prediction = 0;
  double mask_pct = 0.0;
};

struct FidelityReport {
  Technique technique = Technique::ig;
  Metrics baseline_metrics;  // unmasked ("Raw Spectrogram" row)
  Metrics masked_metrics;
  int64_t n_samples = 0;
  MaskPolicy policy;
  double avg_mask_pct = 0.0;
  std::vector<FidelitySampleOutcome> samples;
};

/// Per sample: attribution for the predicted class, top-fraction mask,
/// zero-fill, re-predict; baseline and masked metrics side by side.
FidelityReport run_single_fidelity(const Classifier& model, const std::vector<std::string>& ids,
                                   const ExampleSource& source, Technique technique,
                                   const MaskPolicy& policy, const XaiConfig& xai_config,
                                   uint64_t seed = 0);

struct MultiFidelitySample {
  std::string id;
  int label = 0;
  int masked_prediction = 0;
  double mask_pct = 0.0;
};

struct MultiFidelityRunEntry {
  int k = 0;
  double avg_mask_pct = 0.0;
  double accuracy = 0.0;
  std::vector<MultiFidelitySample> samples;
};

struct MultiFidelityRun {
  int run_index = 0;
  uint64_t run_seed = 0;
  std::vector<std::string> sample_ids;
  std::vector<MultiFidelityRunEntry> entries;  // one per combination size
};

struct MultiFidelityRow {
  int k = 0;
  double avg_mask_mean = 0.0;
  double avg_mask_std = 0.0;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  double p_value = -1.0;            // vs previous size; -1 for the first row
  double mask_reduction_pct = 0.0;  // vs previous size; 0 for the first row
  double accuracy_change_pct = 0.0;
};

struct MultiFidelityReport {
  std::vector<MultiFidelityRow> rows;
  std::vector<MultiFidelityRun> runs;
  std::vector<Technique> techniques;
  MaskPolicy policy;
  int n_runs = 0;
};

struct MultiFidelityConfig {
  std::vector<int> sizes = {2, 3, 4, 5};
  int runs = 5;
  size_t subsample = 1000;  // evaluation subset size per run (all if fewer)
};

/// Attribution hook: lets the harness run on injected (e.g. synthetic)
/// maps. The default computes the real technique.
using AttributionProvider = std::function<AttributionMap(
    Technique technique, const std::string& id, const Tensor& grid, int predicted, uint64_t seed)>;

/// 100 * (prev - cur) / prev; the reduction/change column arithmetic.
double relative_change_pct(double prev, double cur);

/// The overlap protocol: per run, redraw the evaluation subsample and the
/// stochastic-technique seeds, build per-sample per-technique top-fraction
/// masks, intersect at coverage >= k, re-evaluate, then aggregate
/// mean +/- std, p-values between successive sizes, and reduction/change
/// percentages.
MultiFidelityReport run_multi_fidelity(const Classifier& model, const std::vector<std::string>& ids,
                                       const ExampleSource& source,
                                       const std::vector<Technique>& techniques,
                                       const MultiFidelityConfig& config, const MaskPolicy& policy,
                                       const XaiConfig& xai_config, uint64_t seed,
                                       const AttributionProvider& provider = {});

}  // namespace mgmd
