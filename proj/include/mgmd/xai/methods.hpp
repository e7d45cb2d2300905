#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mgmd/train/trainer.hpp"
#include "mgmd/xai/attribution.hpp"
#include "mgmd/zoo/classifier.hpp"

namespace mgmd {

/// Classifier adapter for the model-agnostic techniques: the score is
/// one class's logit on the (side, side) input grid.
class ClassifierScoreModel : public ScoreModel {
 public:
  ClassifierScoreModel(const Classifier& model, int target_class);
  int64_t rows() const override { return rows_; }
  int64_t cols() const override { return cols_; }
  double score(const Tensor& grid) const override;
  Tensor gradient(const Tensor& grid) const override;

 private:
  const Classifier& model_;
  int target_class_;
  int64_t rows_, cols_;
};

/// Riemann-midpoint path integral from `baseline` to `input`;
/// params record the completeness residual against the direct score
/// difference.
AttributionMap integrated_gradients(const ScoreModel& model, const Tensor& input,
                                    const Tensor& baseline, int steps);

/// Sliding-patch score deltas, averaged per cell over covering patches.
/// Patch positions step by `stride` and always include the final aligned
/// position so the whole grid is covered.
AttributionMap occlusion_sensitivity(const ScoreModel& model, const Tensor& input, int patch_h,
                                     int patch_w, int stride_h, int stride_w, float fill);

/// Class-weight combination of the pre-pooling feature maps, rectified,
/// upsampled, and min-max normalized. Needs a GAP + single-linear head.
/// Rectification is shared with Grad-CAM so the two coincide on
/// GAP+linear architectures.
AttributionMap cam(const Classifier& model, const Tensor& input_grid, int target_class);

/// CAM core on explicit components: feature maps (C,h,w) and a head
/// weight matrix (classes, C).
AttributionMap cam_from_components(const Tensor& feature_maps, const Tensor& head_weights,
                                   int target_class, int64_t out_rows, int64_t out_cols);

/// Gradient-weighted activation map at `target_layer` (empty = model's
/// feature layer), rectified, upsampled, normalized.
AttributionMap grad_cam(const Classifier& model, const Tensor& input_grid,
                        const std::string& target_layer, int target_class);

/// Cell -> segment assignment for LIME; ids must tile [0, n_segments).
struct Segmentation {
  std::vector<int> segment_of;  // row-major, size rows*cols
  int64_t rows = 0;
  int64_t cols = 0;
  int n_segments = 0;
};

Segmentation regular_grid_segmentation(int64_t rows, int64_t cols, int grid_n);

/// Ridge-regressed linear surrogate over random segment on/off masks
/// (off = zero fill). Deterministic for a fixed seed; params record the
/// surrogate R^2.
AttributionMap lime_explain(const ScoreModel& model, const Tensor& input,
                            const Segmentation& segmentation, int n_samples, uint64_t seed,
                            double ridge_lambda = 1.0);

/// Per-technique knobs shared by the CLI and the fidelity harness.
struct XaiConfig {
  int ig_steps = 64;
  int occlusion_patch = 16;
  int occlusion_stride = 8;
  float occlusion_fill = 0.0f;
  int lime_grid = 8;
  int lime_samples = 1000;
  double lime_ridge = 1.0;
  std::string gradcam_layer;  // empty: model default
};

/// Technique dispatcher used by the fidelity protocols and the CLI.
AttributionMap compute_attribution(const Classifier& model, Technique technique,
                                   const Tensor& input_grid, int target_class,
                                   const XaiConfig& config, uint64_t seed);

/// Sample picker mirroring the qualitative protocol: ids whose predicted
/// class probability clears `min_confidence`, most confident first.
std::vector<std::string> pick_confident_samples(const Classifier& model,
                                                const std::vector<std::string>& ids,
                                                const ExampleSource& source, double min_confidence,
                                                size_t max_count);

}  // namespace mgmd
