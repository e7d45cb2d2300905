#pragma once

#include <cmath>
#include <string>

#include "mgmd/nn/nn.hpp"

namespace mgmd::testing {

/// Scalar probe loss: sum(w . forward(x)) for a fixed random w. Keeps
/// gradient checks independent of any particular loss.
inline double probe_loss(nn::Module& module, const Tensor& x, const Tensor& w, bool train,
                         uint64_t rng_seed) {
  Rng rng(rng_seed);
  nn::RunCtx ctx;
  ctx.train = train;
  ctx.rng = &rng;
  Tensor y = module.run_forward(x, ctx);
  double acc = 0.0;
  for (int64_t i = 0; i < y.numel(); ++i) acc += static_cast<double>(w[i]) * y[i];
  return acc;
}

struct GradCheckResult {
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  /// Coordinates outside BOTH the absolute and relative tolerance; zero
  /// means the analytic gradients match within float32 probe noise.
  int failures = 0;
  std::string worst;
};

/// Central-difference check of input gradients (and optionally parameter
/// gradients) against the module's backward pass. Coordinates are
/// subsampled for speed. A coordinate passes when |analytic - numeric|
/// is below `atol` or the relative error is below `rtol`.
GradCheckResult check_gradients(nn::Module& module, Tensor x, int64_t probe_seed,
                                bool check_params = true, bool train = false,
                                int64_t max_coords = 24, float eps = 3e-3f, double atol = 5e-4,
                                double rtol = 2e-2);

}  // namespace mgmd::testing
