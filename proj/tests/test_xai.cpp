#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mgmd/core/error.hpp"
#include "mgmd/core/grid.hpp"
#include "mgmd/xai/methods.hpp"
#include "mgmd/xai/render.hpp"
#include "support/toy_models.hpp"

using namespace mgmd;
using namespace mgmd::testing;

namespace {

Tensor random_grid(int64_t rows, int64_t cols, uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
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

}  // namespace

TEST_CASE("ig: input equal to baseline gives the zero map") {
  LinearScorer model(random_grid(4, 4, 1));
  Tensor input = random_grid(4, 4, 2);
  AttributionMap map = integrated_gradients(model, input, input, 16);
  for (int64_t i = 0; i < map.values.numel(); ++i) CHECK(map.values[i] == 0.0f);
}

TEST_CASE("ig: exact w*x for linear scorers at any step count") {
  for (uint64_t seed : {10u, 11u, 12u}) {
    Tensor w = random_grid(6, 6, seed);
    LinearScorer model(w);
    Tensor x = random_grid(6, 6, seed + 100);
    Tensor baseline({6, 6}, 0.0f);
    for (int steps : {1, 7}) {
      AttributionMap map = integrated_gradients(model, x, baseline, steps);
      for (int64_t i = 0; i < x.numel(); ++i) {
        CHECK(map.values[i] == doctest::Approx(w[i] * x[i]).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("ig: completeness on a smooth model tightens with steps") {
  SmoothScorer model(random_grid(5, 5, 20, -0.3f, 0.3f), random_grid(5, 5, 21, -0.3f, 0.3f));
  Tensor x = random_grid(5, 5, 22, 0.0f, 1.0f);
  Tensor baseline({5, 5}, 0.0f);

  auto residual_of = [&](int steps) {
    AttributionMap map = integrated_gradients(model, x, baseline, steps);
    return std::abs(map.params.at("completeness_residual"));
  };
  double diff = std::abs(model.score(x) - model.score(baseline));
  CHECK(residual_of(256) <= 0.01 * diff);
  CHECK(residual_of(256) <= residual_of(8));
}

TEST_CASE("ig errors: shape mismatch, bad steps, non-differentiable models") {
  LinearScorer model(random_grid(4, 4, 3));
  Tensor x = random_grid(4, 4, 4);
  CHECK_THROWS_AS(integrated_gradients(model, x, Tensor({2, 2}, 0.0f), 8), Error);
  CHECK_THROWS_AS(integrated_gradients(model, x, Tensor({4, 4}, 0.0f), 0), Error);

  RegionSumScorer no_grad(4, 4, 0, 0, 2, 2);  // gradient not implemented
  try {
    integrated_gradients(no_grad, x, Tensor({4, 4}, 0.0f), 4);
    FAIL("expected NonDifferentiableModel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::non_differentiable);
  }
}

TEST_CASE("occlusion: constant models produce the zero map") {
  ConstantScorer model(8, 8, 3.5);
  Tensor x = random_grid(8, 8, 5);
  AttributionMap map = occlusion_sensitivity(model, x, 3, 3, 2, 2, 0.0f);
  for (int64_t i = 0; i < map.values.numel(); ++i) CHECK(map.values[i] == 0.0f);
}

TEST_CASE("occlusion: brute-force oracle on an 8x8 region-sum scorer") {
  // Region R = rows [2,5) x cols [3,6).
  RegionSumScorer model(8, 8, 2, 3, 5, 6);
  Tensor x = random_grid(8, 8, 6, 0.1f, 1.0f);
  int patch = 3, stride = 2;
  AttributionMap map = occlusion_sensitivity(model, x, patch, patch, stride, stride, 0.0f);

  // Independent enumeration: every aligned patch position (with last
  // included), per-cell average of covering-score deltas.
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
    CHECK(map.values[i] == doctest::Approx(expected).epsilon(1e-6));
  }

  // Locality: cells whose covering patches never touch R stay zero.
  for (int64_t r = 0; r < 8; ++r) {
    for (int64_t c = 0; c < 8; ++c) {
      bool reachable = false;
      for (int64_t py : positions) {
        for (int64_t px : positions) {
          bool covers_cell = r >= py && r < py + patch && c >= px && c < px + patch;
          bool hits_region = py < 5 && py + patch > 2 && px < 6 && px + patch > 3;
          if (covers_cell && hits_region) reachable = true;
        }
      }
      if (!reachable) CHECK(map.values.at(r, c) == 0.0f);
    }
  }
}

TEST_CASE("occlusion: full-input patch reduces to a single score delta") {
  RegionSumScorer model(6, 6, 0, 0, 3, 3);
  Tensor x = random_grid(6, 6, 7, 0.2f, 1.0f);
  AttributionMap map = occlusion_sensitivity(model, x, 6, 6, 2, 2, 0.0f);
  double expected = model.score(x) - model.score(Tensor({6, 6}, 0.0f));
  for (int64_t i = 0; i < map.values.numel(); ++i) {
    CHECK(map.values[i] == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("occlusion config errors") {
  ConstantScorer model(4, 4, 0.0);
  Tensor x = random_grid(4, 4, 8);
  CHECK_THROWS_AS(occlusion_sensitivity(model, x, 5, 5, 1, 1, 0.0f), Error);
  CHECK_THROWS_AS(occlusion_sensitivity(model, x, 2, 2, 0, 1, 0.0f), Error);
}

TEST_CASE("cam core: hand-computed 2x2x2 weighted sum") {
  Tensor maps({2, 2, 2});
  // Map 0: [1 2; 3 4], map 1: [0 1; 0 -1].
  maps[0] = 1;
  maps[1] = 2;
  maps[2] = 3;
  maps[3] = 4;
  maps[4] = 0;
  maps[5] = 1;
  maps[6] = 0;
  maps[7] = -1;
  Tensor weights({2, 2});
  weights.at(0, 0) = 0.5f;   // class 0, channel 0
  weights.at(0, 1) = -1.0f;  // class 0, channel 1
  weights.at(1, 0) = 2.0f;
  weights.at(1, 1) = 1.0f;

  // Class 0 weighted sum: 0.5*[1 2;3 4] - 1*[0 1;0 -1] = [0.5 0; 1.5 3].
  // Rectified (already non-negative), min-max normalized by hand.
  AttributionMap map = cam_from_components(maps, weights, 0, 2, 2);
  CHECK(map.values.at(0, 0) == doctest::Approx((0.5 - 0.0) / 3.0));
  CHECK(map.values.at(0, 1) == doctest::Approx(0.0));
  CHECK(map.values.at(1, 0) == doctest::Approx(1.5 / 3.0));
  CHECK(map.values.at(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("cam core: uniform feature maps give a uniform map") {
  Tensor maps({3, 2, 2}, 0.7f);
  Tensor weights({2, 3}, 0.3f);
  AttributionMap map = cam_from_components(maps, weights, 1, 4, 4);
  for (int64_t i = 0; i < map.values.numel(); ++i) CHECK(map.values[i] == map.values[0]);
}

TEST_CASE("cam on the mlp-headed vgg is unsupported") {
  ClassifierSpec spec;
  spec.architecture = Architecture::vgg;
  spec.input_shape = {1, 32, 32};
  Classifier model = build_classifier(spec, 1);
  Tensor grid = random_grid(32, 32, 9, 0.0f, 1.0f);
  try {
    cam(model, grid, 0);
    FAIL("expected UnsupportedArchitecture");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unsupported_architecture);
  }
}

TEST_CASE("grad-cam matches cam on a GAP+linear head and is rectified") {
  ClassifierSpec spec;
  spec.architecture = Architecture::tinycnn;
  spec.input_shape = {1, 32, 32};
  Classifier model = build_classifier(spec, 13);
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Tensor grid = random_grid(32, 32, 40 + seed, 0.0f, 1.0f);
    AttributionMap cam_map = cam(model, grid, 1);
    AttributionMap gc_map = grad_cam(model, grid, "", 1);
    CHECK(cosine(cam_map.values, gc_map.values) >= 0.99);
    for (int64_t i = 0; i < gc_map.values.numel(); ++i) CHECK(gc_map.values[i] >= 0.0f);
  }

  Tensor grid = random_grid(32, 32, 50, 0.0f, 1.0f);
  try {
    grad_cam(model, grid, "no.such.layer", 1);
    FAIL("expected LayerNotFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::layer_not_found);
  }
}

TEST_CASE("lime: the active segment wins, deterministically") {
  Segmentation seg = regular_grid_segmentation(8, 8, 2);  // 4 segments
  REQUIRE(seg.n_segments == 4);
  SegmentMeanScorer model(&seg, 2);
  Tensor input({8, 8}, 1.0f);

  AttributionMap map = lime_explain(model, input, seg, 500, 99);
  // Per-segment weight read back from any covered cell.
  std::vector<float> weight(4, 0.0f);
  for (int64_t i = 0; i < input.numel(); ++i) {
    weight[static_cast<size_t>(seg.segment_of[static_cast<size_t>(i)])] = map.values[i];
  }
  for (int s = 0; s < 4; ++s) {
    if (s != 2) CHECK(weight[2] > weight[static_cast<size_t>(s)]);
  }
  CHECK(map.params.at("r2") > 0.9);

  AttributionMap again = lime_explain(model, input, seg, 500, 99);
  for (int64_t i = 0; i < map.values.numel(); ++i) CHECK(map.values[i] == again.values[i]);

  AttributionMap other_seed = lime_explain(model, input, seg, 500, 100);
  bool any_diff = false;
  for (int64_t i = 0; i < map.values.numel(); ++i) {
    if (map.values[i] != other_seed.values[i]) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("lime surrogate tracks the exhaustive-design ridge fit") {
  Segmentation seg = regular_grid_segmentation(8, 8, 2);
  SegmentMeanScorer model(&seg, 1);
  Tensor input({8, 8}, 1.0f);

  // Exhaustive oracle: all 16 masks, ridge normal equations solved by
  // Gaussian elimination (lambda on segment coefficients only).
  const int s_count = 4;
  double xtx[5][5] = {};
  double xty[5] = {};
  for (int mask = 0; mask < 16; ++mask) {
    double row[5];
    for (int j = 0; j < 4; ++j) row[j] = (mask >> j) & 1;
    row[4] = 1.0;
    Tensor perturbed(input.shape());
    for (int64_t i = 0; i < input.numel(); ++i) {
      perturbed[i] = ((mask >> seg.segment_of[static_cast<size_t>(i)]) & 1) ? input[i] : 0.0f;
    }
    double y = model.score(perturbed);
    for (int a = 0; a < 5; ++a) {
      for (int b = 0; b < 5; ++b) xtx[a][b] += row[a] * row[b];
      xty[a] += row[a] * y;
    }
  }
  // 16 repetitions of the exhaustive design approximate the sampled
  // Bernoulli(0.5) design; scale ridge accordingly (lambda=1 per 16 rows
  // of exhaustive design vs n_samples draws).
  for (int j = 0; j < s_count; ++j) xtx[j][j] += 1.0 * 16.0 / 4096.0;
  // Solve 5x5 by elimination.
  double m[5][6];
  for (int a = 0; a < 5; ++a) {
    for (int b = 0; b < 5; ++b) m[a][b] = xtx[a][b];
    m[a][5] = xty[a];
  }
  for (int col = 0; col < 5; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 5; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    std::swap(m[col], m[pivot]);
    for (int r = 0; r < 5; ++r) {
      if (r == col) continue;
      double f = m[r][col] / m[col][col];
      for (int c = col; c < 6; ++c) m[r][c] -= f * m[col][c];
    }
  }
  double exact[4];
  for (int j = 0; j < 4; ++j) exact[j] = m[j][5] / m[j][j];

  AttributionMap map = lime_explain(model, input, seg, 4096, 7);
  std::vector<float> weight(4, 0.0f);
  for (int64_t i = 0; i < input.numel(); ++i) {
    weight[static_cast<size_t>(seg.segment_of[static_cast<size_t>(i)])] = map.values[i];
  }
  for (int j = 0; j < 4; ++j) {
    CHECK(weight[static_cast<size_t>(j)] == doctest::Approx(exact[j]).epsilon(0.08).scale(1.0));
  }
}

TEST_CASE("lime errors") {
  Segmentation seg = regular_grid_segmentation(4, 4, 2);
  SegmentMeanScorer model(&seg, 0);
  Tensor input({4, 4}, 1.0f);
  CHECK_THROWS_AS(lime_explain(model, input, seg, 0, 1), Error);

  Segmentation single = regular_grid_segmentation(4, 4, 1);
  try {
    lime_explain(model, input, single, 10, 1);
    FAIL("expected DegenerateSegmentation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_segmentation);
  }
}

TEST_CASE("threshold_topk selection rules") {
  AttributionMap map;
  map.values = Tensor({2, 5});
  for (int64_t i = 0; i < 10; ++i) map.values[i] = static_cast<float>(i);

  BinaryMask top1 = threshold_topk(map, 0.1, Polarity::positive);
  CHECK(top1.count() == 1);
  CHECK(top1.at(1, 4));  // the max cell

  BinaryMask all = threshold_topk(map, 1.0, Polarity::positive);
  CHECK(all.count() == 10);

  BinaryMask bottom = threshold_topk(map, 0.1, Polarity::negative);
  CHECK(bottom.count() == 1);
  CHECK(bottom.at(0, 0));

  AttributionMap ties;
  ties.values = Tensor({2, 2}, 5.0f);
  BinaryMask half = threshold_topk(ties, 0.5, Polarity::positive);
  CHECK(half.count() == 2);
  CHECK(half.at(0, 0));  // row-major tie rule: first two cells
  CHECK(half.at(0, 1));
  CHECK_FALSE(half.at(1, 0));

  CHECK_THROWS_AS(threshold_topk(map, 0.0, Polarity::positive), Error);
  CHECK_THROWS_AS(threshold_topk(map, 1.5, Polarity::positive), Error);
}

TEST_CASE("threshold cardinality law on random maps") {
  Rng rng(77);
  for (int round = 0; round < 100; ++round) {
    AttributionMap map;
    int64_t rows = 1 + static_cast<int64_t>(rng.next_below(12));
    int64_t cols = 1 + static_cast<int64_t>(rng.next_below(12));
    map.values = random_grid(rows, cols, 1000 + static_cast<uint64_t>(round));
    double fraction = 0.05 + 0.9 * rng.next_double();
    BinaryMask mask = threshold_topk(map, fraction, Polarity::positive);
    CHECK(mask.count() == std::llround(fraction * static_cast<double>(rows * cols)));
  }
}

TEST_CASE("mass-fraction thresholding selects the smallest covering prefix") {
  AttributionMap map;
  map.values = Tensor({1, 4});
  map.values[0] = 6.0f;
  map.values[1] = 3.0f;
  map.values[2] = 1.0f;
  map.values[3] = -5.0f;
  // Positive mass 10; 60% of it is covered by the single top cell.
  BinaryMask mask = threshold_topk(map, 0.6, Polarity::positive, FractionMode::mass);
  CHECK(mask.count() == 1);
  CHECK(mask.at(0, 0));
  BinaryMask most = threshold_topk(map, 0.95, Polarity::positive, FractionMode::mass);
  CHECK(most.count() == 3);
}

TEST_CASE("heatmap files round trip with their sidecar") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "mgmd_xai_tests";
  fs::create_directories(dir);

  AttributionMap map;
  map.values = random_grid(6, 6, 3);
  map.technique = Technique::lime;
  map.target_class = 1;
  map.sample_id = "clip_042";
  map.seed = 99;
  map.params["r2"] = 0.87;
  write_heatmap(dir / "clip_042_lime.f32", map, "decafbad");

  std::string fingerprint;
  AttributionMap loaded = read_heatmap(dir / "clip_042_lime.f32", &fingerprint);
  CHECK(fingerprint == "decafbad");
  CHECK(loaded.technique == Technique::lime);
  CHECK(loaded.sample_id == "clip_042");
  CHECK(loaded.seed == 99);
  CHECK(loaded.params.at("r2") == doctest::Approx(0.87));
  for (int64_t i = 0; i < map.values.numel(); ++i) CHECK(loaded.values[i] == map.values[i]);
}

TEST_CASE("overlay rendering: tint counts and dimensions") {
  Tensor grid({10, 10}, 0.5f);

  AttributionMap zero_map;
  zero_map.values = Tensor({10, 10}, 0.0f);
  Canvas gray = render_overlay(grid, zero_map, {0.1, 4, 10.0});
  // Every pixel grayscale: r == g == b everywhere (underlay, axes, text).
  for (int y = 0; y < gray.height(); ++y) {
    for (int x = 0; x < gray.width(); ++x) {
      Color c = gray.get_pixel(x, y);
      CHECK(c.r == c.g);
      CHECK(c.g == c.b);
    }
  }

  AttributionMap mixed;
  mixed.values = Tensor({10, 10}, 0.0f);
  mixed.values.at(2, 3) = 5.0f;   // strongest positive
  mixed.values.at(7, 8) = -4.0f;  // strongest negative
  // fraction 0.01 of 100 cells -> exactly one cell per polarity.
  Canvas tinted = render_overlay(grid, mixed, {0.01, 4, 10.0});
  CHECK(tinted.width() == 46 + 10 * 4 + 12);
  CHECK(tinted.height() == 10 + 10 * 4 + 34);
  int red_px = 0, blue_px = 0;
  for (int y = 0; y < tinted.height(); ++y) {
    for (int x = 0; x < tinted.width(); ++x) {
      Color c = tinted.get_pixel(x, y);
      if (c.r > c.b + 40) ++red_px;
      if (c.b > c.r + 40) ++blue_px;
    }
  }
  CHECK(red_px == 16);  // one 4x4 cell
  CHECK(blue_px == 16);

  AttributionMap wrong;
  wrong.values = Tensor({4, 4}, 0.0f);
  CHECK_THROWS_AS(render_overlay(grid, wrong, {}), Error);
}
