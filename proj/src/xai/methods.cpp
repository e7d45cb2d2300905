#include "mgmd/xai/methods.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "mgmd/core/error.hpp"
#include "mgmd/core/grid.hpp"
#include "mgmd/train/trainer.hpp"

namespace mgmd {

// --- ClassifierScoreModel ------------------------------------------------

ClassifierScoreModel::ClassifierScoreModel(const Classifier& model, int target_class)
    : model_(model), target_class_(target_class) {
  if (is_sequence_architecture(model.spec().architecture)) {
    rows_ = model.spec().input_shape[1];
    cols_ = model.spec().input_shape[0];
  } else {
    rows_ = model.spec().input_shape[1];
    cols_ = model.spec().input_shape[2];
  }
}

double ClassifierScoreModel::score(const Tensor& grid) const {
  Tensor input = model_input_from_grid(model_.spec(), grid);
  return model_.class_score(input, target_class_);
}

Tensor ClassifierScoreModel::gradient(const Tensor& grid) const {
  Tensor input = model_input_from_grid(model_.spec(), grid);
  Tensor g = model_.input_gradient(input, target_class_);
  if (is_sequence_architecture(model_.spec().architecture)) {
    // Tokens are time columns; transpose back to (mel, time).
    Tensor out({grid.dim(0), grid.dim(1)});
    for (int64_t t = 0; t < g.dim(0); ++t) {
      for (int64_t m = 0; m < g.dim(1); ++m) out.at(m, t) = g.at(t, m);
    }
    return out;
  }
  return g.reshaped({grid.dim(0), grid.dim(1)});
}

// --- Integrated gradients --------------------------------------------------

AttributionMap integrated_gradients(const ScoreModel& model, const Tensor& input,
                                    const Tensor& baseline, int steps) {
  if (!input.same_shape(baseline)) {
    throw Error(ErrorCode::shape_error, "baseline shape must match the input");
  }
  if (steps < 1) throw Error(ErrorCode::config_error, "steps must be >= 1");

  std::vector<double> acc(static_cast<size_t>(input.numel()), 0.0);
  Tensor point(input.shape());
  for (int k = 0; k < steps; ++k) {
    double t = (static_cast<double>(k) + 0.5) / static_cast<double>(steps);
    for (int64_t i = 0; i < input.numel(); ++i) {
      point[i] = static_cast<float>(baseline[i] + t * (static_cast<double>(input[i]) - baseline[i]));
    }
    Tensor g = model.gradient(point);
    for (int64_t i = 0; i < input.numel(); ++i) acc[static_cast<size_t>(i)] += g[i];
  }

  AttributionMap map;
  map.technique = Technique::ig;
  map.values = Tensor(input.shape());
  double total = 0.0;
  for (int64_t i = 0; i < input.numel(); ++i) {
    double v = (static_cast<double>(input[i]) - baseline[i]) * acc[static_cast<size_t>(i)] /
               static_cast<double>(steps);
    map.values[i] = static_cast<float>(v);
    total += v;
  }
  double score_diff = model.score(input) - model.score(baseline);
  map.params["steps"] = steps;
  map.params["score_diff"] = score_diff;
  map.params["completeness_residual"] = total - score_diff;
  return map;
}

// --- Occlusion sensitivity ---------------------------------------------------

namespace {
std::vector<int64_t> patch_positions(int64_t extent, int64_t patch, int64_t stride) {
  std::vector<int64_t> positions;
  for (int64_t p = 0; p + patch <= extent; p += stride) positions.push_back(p);
  if (positions.empty() || positions.back() != extent - patch) positions.push_back(extent - patch);
  return positions;
}
}  // namespace

AttributionMap occlusion_sensitivity(const ScoreModel& model, const Tensor& input, int patch_h,
                                     int patch_w, int stride_h, int stride_w, float fill) {
  if (input.rank() != 2) throw Error(ErrorCode::shape_error, "occlusion expects a 2-D grid");
  int64_t h = input.dim(0), w = input.dim(1);
  if (patch_h < 1 || patch_w < 1 || patch_h > h || patch_w > w) {
    throw Error(ErrorCode::config_error, "patch must fit within the input");
  }
  if (stride_h < 1 || stride_w < 1) throw Error(ErrorCode::config_error, "stride must be >= 1");

  double base = model.score(input);
  std::vector<double> acc(static_cast<size_t>(input.numel()), 0.0);
  std::vector<int32_t> cover(static_cast<size_t>(input.numel()), 0);

  Tensor masked = input;
  for (int64_t py : patch_positions(h, patch_h, stride_h)) {
    for (int64_t px : patch_positions(w, patch_w, stride_w)) {
      // Fill the patch, score, then restore.
      for (int64_t y = py; y < py + patch_h; ++y) {
        for (int64_t x = px; x < px + patch_w; ++x) masked.at(y, x) = fill;
      }
      double delta = base - model.score(masked);
      for (int64_t y = py; y < py + patch_h; ++y) {
        for (int64_t x = px; x < px + patch_w; ++x) {
          acc[static_cast<size_t>(y * w + x)] += delta;
          cover[static_cast<size_t>(y * w + x)]++;
          masked.at(y, x) = input.at(y, x);
        }
      }
    }
  }

  AttributionMap map;
  map.technique = Technique::occlusion;
  map.values = Tensor(input.shape());
  for (int64_t i = 0; i < input.numel(); ++i) {
    int32_t c = cover[static_cast<size_t>(i)];
    map.values[i] = c > 0 ? static_cast<float>(acc[static_cast<size_t>(i)] / c) : 0.0f;
  }
  map.params["patch_h"] = patch_h;
  map.params["patch_w"] = patch_w;
  map.params["stride_h"] = stride_h;
  map.params["stride_w"] = stride_w;
  map.params["fill"] = fill;
  return map;
}

// --- CAM / Grad-CAM ---------------------------------------------------------

namespace {
AttributionMap finish_activation_map(Tensor weighted, int64_t out_rows, int64_t out_cols,
                                     bool rectify) {
  if (rectify) {
    for (int64_t i = 0; i < weighted.numel(); ++i) weighted[i] = std::max(weighted[i], 0.0f);
  }
  Tensor upsampled = bilinear_resize(weighted, out_rows, out_cols);
  AttributionMap map;
  map.values = minmax_normalize(upsampled);
  return map;
}
}  // namespace

AttributionMap cam_from_components(const Tensor& feature_maps, const Tensor& head_weights,
                                   int target_class, int64_t out_rows, int64_t out_cols) {
  if (feature_maps.rank() != 3) {
    throw Error(ErrorCode::unsupported_architecture, "feature maps must be (C, h, w)");
  }
  int64_t c = feature_maps.dim(0), fh = feature_maps.dim(1), fw = feature_maps.dim(2);
  Tensor weighted({fh, fw}, 0.0f);
  for (int64_t ch = 0; ch < c; ++ch) {
    float wc = head_weights.at(target_class, ch);
    const float* plane = feature_maps.data() + ch * fh * fw;
    for (int64_t i = 0; i < fh * fw; ++i) weighted[i] += wc * plane[i];
  }
  AttributionMap out = finish_activation_map(std::move(weighted), out_rows, out_cols, true);
  out.technique = Technique::cam;
  out.target_class = target_class;
  out.params["feature_channels"] = static_cast<double>(c);
  out.params["feature_h"] = static_cast<double>(fh);
  out.params["feature_w"] = static_cast<double>(fw);
  return out;
}

AttributionMap cam(const Classifier& model, const Tensor& input_grid, int target_class) {
  if (!model.cam_compatible()) {
    throw Error(ErrorCode::unsupported_architecture,
                "CAM needs a global-average-pool + single linear head");
  }
  Tensor input = model_input_from_grid(model.spec(), input_grid);
  Tensor maps = model.feature_maps(input);  // (1, C, h, w)
  if (maps.rank() != 4) throw Error(ErrorCode::unsupported_architecture, "feature maps are not spatial");
  return cam_from_components(maps.reshaped({maps.dim(1), maps.dim(2), maps.dim(3)}),
                             model.cam_head_weights(), target_class, input_grid.dim(0),
                             input_grid.dim(1));
}

AttributionMap grad_cam(const Classifier& model, const Tensor& input_grid,
                        const std::string& target_layer, int target_class) {
  std::string layer = target_layer.empty() ? model.feature_layer() : target_layer;
  Tensor input = model_input_from_grid(model.spec(), input_grid);
  LayerCapture capture = model.capture_layer(input, layer, target_class);
  if (capture.activations.rank() != 4) {
    throw Error(ErrorCode::unsupported_architecture,
                "Grad-CAM target layer must produce spatial feature maps");
  }
  int64_t c = capture.activations.dim(1), fh = capture.activations.dim(2),
          fw = capture.activations.dim(3);

  Tensor weighted({fh, fw}, 0.0f);
  for (int64_t ch = 0; ch < c; ++ch) {
    const float* grad_plane = capture.grad.data() + ch * fh * fw;
    double wsum = 0.0;
    for (int64_t i = 0; i < fh * fw; ++i) wsum += grad_plane[i];
    auto wc = static_cast<float>(wsum / static_cast<double>(fh * fw));
    const float* act_plane = capture.activations.data() + ch * fh * fw;
    for (int64_t i = 0; i < fh * fw; ++i) weighted[i] += wc * act_plane[i];
  }

  AttributionMap out =
      finish_activation_map(std::move(weighted), input_grid.dim(0), input_grid.dim(1), true);
  out.technique = Technique::gradcam;
  out.target_class = target_class;
  out.params["feature_channels"] = static_cast<double>(c);
  out.params["feature_h"] = static_cast<double>(fh);
  out.params["feature_w"] = static_cast<double>(fw);
  return out;
}

// --- LIME -------------------------------------------------------------------

Segmentation regular_grid_segmentation(int64_t rows, int64_t cols, int grid_n) {
  if (grid_n < 1) throw Error(ErrorCode::config_error, "segment grid must be >= 1");
  Segmentation seg;
  seg.rows = rows;
  seg.cols = cols;
  seg.n_segments = grid_n * grid_n;
  seg.segment_of.resize(static_cast<size_t>(rows * cols));
  for (int64_t r = 0; r < rows; ++r) {
    auto sr = std::min<int64_t>(r * grid_n / rows, grid_n - 1);
    for (int64_t c = 0; c < cols; ++c) {
      auto sc = std::min<int64_t>(c * grid_n / cols, grid_n - 1);
      seg.segment_of[static_cast<size_t>(r * cols + c)] = static_cast<int>(sr * grid_n + sc);
    }
  }
  return seg;
}

AttributionMap lime_explain(const ScoreModel& model, const Tensor& input,
                            const Segmentation& segmentation, int n_samples, uint64_t seed,
                            double ridge_lambda) {
  if (n_samples < 1) throw Error(ErrorCode::config_error, "n_samples must be >= 1");
  if (segmentation.rows != input.dim(0) || segmentation.cols != input.dim(1) ||
      static_cast<int64_t>(segmentation.segment_of.size()) != input.numel()) {
    throw Error(ErrorCode::shape_error, "segmentation does not cover the grid");
  }
  int s_count = segmentation.n_segments;
  if (s_count < 2) throw Error(ErrorCode::degenerate_segmentation, "need at least 2 segments");
  for (int id : segmentation.segment_of) {
    if (id < 0 || id >= s_count) {
      throw Error(ErrorCode::shape_error, "segment id out of range");
    }
  }

  Rng rng(seed);
  Eigen::MatrixXd design(n_samples, s_count + 1);  // + intercept column
  Eigen::VectorXd target(n_samples);
  Tensor perturbed(input.shape());
  std::vector<uint8_t> on(static_cast<size_t>(s_count));
  for (int sample = 0; sample < n_samples; ++sample) {
    for (int j = 0; j < s_count; ++j) on[static_cast<size_t>(j)] = rng.next_float() < 0.5f ? 1 : 0;
    for (int64_t i = 0; i < input.numel(); ++i) {
      perturbed[i] = on[static_cast<size_t>(segmentation.segment_of[static_cast<size_t>(i)])]
                         ? input[i]
                         : 0.0f;
    }
    for (int j = 0; j < s_count; ++j) design(sample, j) = on[static_cast<size_t>(j)];
    design(sample, s_count) = 1.0;
    target(sample) = model.score(perturbed);
  }

  // Ridge on the segment coefficients; the intercept stays unpenalized.
  Eigen::MatrixXd normal = design.transpose() * design;
  for (int j = 0; j < s_count; ++j) normal(j, j) += ridge_lambda;
  Eigen::VectorXd beta = normal.ldlt().solve(design.transpose() * target);

  double ss_res = (design * beta - target).squaredNorm();
  double mean = target.mean();
  double ss_tot = (target.array() - mean).square().sum();
  double r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;

  AttributionMap map;
  map.technique = Technique::lime;
  map.seed = seed;
  map.values = Tensor(input.shape());
  for (int64_t i = 0; i < input.numel(); ++i) {
    map.values[i] = static_cast<float>(beta(segmentation.segment_of[static_cast<size_t>(i)]));
  }
  map.params["n_samples"] = n_samples;
  map.params["ridge"] = ridge_lambda;
  map.params["r2"] = r2;
  map.params["n_segments"] = s_count;
  return map;
}

// --- Dispatcher / sample picker -----------------------------------------------

AttributionMap compute_attribution(const Classifier& model, Technique technique,
                                   const Tensor& input_grid, int target_class,
                                   const XaiConfig& config, uint64_t seed) {
  switch (technique) {
    case Technique::ig: {
      ClassifierScoreModel scorer(model, target_class);
      Tensor baseline(input_grid.shape(), 0.0f);  // zero-tensor baseline
      AttributionMap map = integrated_gradients(scorer, input_grid, baseline, config.ig_steps);
      map.target_class = target_class;
      return map;
    }
    case Technique::occlusion: {
      ClassifierScoreModel scorer(model, target_class);
      int patch_h = std::min<int>(config.occlusion_patch, static_cast<int>(input_grid.dim(0)));
      int patch_w = std::min<int>(config.occlusion_patch, static_cast<int>(input_grid.dim(1)));
      AttributionMap map = occlusion_sensitivity(scorer, input_grid, patch_h, patch_w,
                                                 config.occlusion_stride, config.occlusion_stride,
                                                 config.occlusion_fill);
      map.target_class = target_class;
      return map;
    }
    case Technique::cam:
      return cam(model, input_grid, target_class);
    case Technique::gradcam:
      return grad_cam(model, input_grid, config.gradcam_layer, target_class);
    case Technique::lime: {
      ClassifierScoreModel scorer(model, target_class);
      Segmentation seg =
          regular_grid_segmentation(input_grid.dim(0), input_grid.dim(1), config.lime_grid);
      AttributionMap map =
          lime_explain(scorer, input_grid, seg, config.lime_samples, seed, config.lime_ridge);
      map.target_class = target_class;
      return map;
    }
  }
  throw Error(ErrorCode::config_error, "unhandled technique");
}

std::vector<std::string> pick_confident_samples(const Classifier& model,
                                                const std::vector<std::string>& ids,
                                                const ExampleSource& source, double min_confidence,
                                                size_t max_count) {
  std::vector<std::pair<double, std::string>> scored;
  for (const auto& id : ids) {
    Tensor probs = model.predict_proba(model_input_from_grid(model.spec(), source.grid(id)));
    double confidence = std::max(probs[0], probs[1]);
    if (confidence > min_confidence) scored.push_back({confidence, id});
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::string> out;
  for (const auto& [confidence, id] : scored) {
    if (out.size() >= max_count) break;
    out.push_back(id);
  }
  return out;
}

}  // namespace mgmd
