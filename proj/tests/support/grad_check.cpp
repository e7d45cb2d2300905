#include "support/grad_check.hpp"

#include <algorithm>
#include <vector>

namespace mgmd::testing {

namespace {

std::vector<int64_t> sample_coords(int64_t total, int64_t want, Rng& rng) {
  std::vector<int64_t> coords;
  if (total <= want) {
    for (int64_t i = 0; i < total; ++i) coords.push_back(i);
    return coords;
  }
  for (int64_t i = 0; i < want; ++i) coords.push_back(static_cast<int64_t>(rng.next_below(total)));
  std::sort(coords.begin(), coords.end());
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
  return coords;
}

void update_result(GradCheckResult& result, double analytic, double numeric,
                   const std::string& where, double atol, double rtol) {
  double abs_err = std::abs(analytic - numeric);
  double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
  double rel_err = abs_err / scale;
  result.max_abs_err = std::max(result.max_abs_err, abs_err);
  result.max_rel_err = std::max(result.max_rel_err, rel_err);
  if (abs_err > atol && rel_err > rtol) {
    ++result.failures;
    result.worst = where + " analytic=" + std::to_string(analytic) +
                   " numeric=" + std::to_string(numeric);
  }
}

}  // namespace

GradCheckResult check_gradients(nn::Module& module, Tensor x, int64_t probe_seed, bool check_params,
                                bool train, int64_t max_coords, float eps, double atol,
                                double rtol) {
  Rng wrng(static_cast<uint64_t>(probe_seed));
  // Shape of w comes from a dry-run forward.
  nn::RunCtx dry;
  dry.train = train;
  Rng dry_rng(42);
  dry.rng = &dry_rng;
  Tensor y0 = module.run_forward(x, dry);
  Tensor w(y0.shape());
  for (int64_t i = 0; i < w.numel(); ++i) w[i] = wrng.uniform(-1.0f, 1.0f);

  // Analytic pass. A fixed rng seed keeps dropout masks identical across
  // the analytic and numeric passes.
  const uint64_t fwd_seed = 777;
  nn::zero_grad(module);
  {
    Rng rng(fwd_seed);
    nn::RunCtx ctx;
    ctx.grad = true;
    ctx.train = train;
    ctx.rng = &rng;
    module.run_forward(x, ctx);
  }
  Tensor dx = module.run_backward(w);

  GradCheckResult result;
  Rng coord_rng(static_cast<uint64_t>(probe_seed) + 1);

  for (int64_t i : sample_coords(x.numel(), max_coords, coord_rng)) {
    float keep = x[i];
    x[i] = keep + eps;
    double up = probe_loss(module, x, w, train, fwd_seed);
    x[i] = keep - eps;
    double down = probe_loss(module, x, w, train, fwd_seed);
    x[i] = keep;
    update_result(result, dx[i], (up - down) / (2.0 * eps), "input[" + std::to_string(i) + "]",
                  atol, rtol);
  }

  if (check_params) {
    std::vector<std::pair<Tensor*, Tensor*>> params;
    std::vector<std::string> names;
    module.visit_params(
        [&](const std::string& name, Tensor& value, Tensor& grad) {
          params.push_back({&value, &grad});
          names.push_back(name);
        },
        "");
    for (size_t p = 0; p < params.size(); ++p) {
      Tensor& value = *params[p].first;
      Tensor& grad = *params[p].second;
      for (int64_t i : sample_coords(value.numel(), std::max<int64_t>(max_coords / 4, 4), coord_rng)) {
        float keep = value[i];
        value[i] = keep + eps;
        double up = probe_loss(module, x, w, train, fwd_seed);
        value[i] = keep - eps;
        double down = probe_loss(module, x, w, train, fwd_seed);
        value[i] = keep;
        update_result(result, grad[i], (up - down) / (2.0 * eps),
                      names[p] + "[" + std::to_string(i) + "]", atol, rtol);
      }
    }
  }
  return result;
}

}  // namespace mgmd::testing
