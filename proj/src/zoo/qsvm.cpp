#include "mgmd/zoo/qsvm.hpp"

#include <algorithm>
#include <cmath>

#include "mgmd/core/error.hpp"
#include "mgmd/core/random.hpp"

namespace mgmd {

double poly_kernel(const float* a, const float* b, int64_t dim, const KernelSpec& spec) {
  double dot = 0.0;
  for (int64_t i = 0; i < dim; ++i) dot += static_cast<double>(a[i]) * b[i];
  double gamma = spec.gamma > 0.0 ? spec.gamma : 1.0;
  return std::pow(gamma * dot + spec.coef0, spec.degree);
}

void FeatureStandardizer::fit(const Tensor& rows) {
  int64_t n = rows.dim(0), d = rows.dim(1);
  mean = Tensor({d});
  stddev = Tensor({d});
  for (int64_t j = 0; j < d; ++j) {
    double sum = 0.0;
    for (int64_t i = 0; i < n; ++i) sum += rows.at(i, j);
    double mu = sum / static_cast<double>(n);
    double sq = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      double dv = rows.at(i, j) - mu;
      sq += dv * dv;
    }
    double sd = std::sqrt(sq / static_cast<double>(n));
    mean[j] = static_cast<float>(mu);
    stddev[j] = static_cast<float>(sd > 1e-12 ? sd : 1.0);
  }
}

Tensor FeatureStandardizer::apply(const Tensor& features) const {
  int64_t d = mean.numel();
  Tensor out(features.shape());
  int64_t rows = features.numel() / d;
  for (int64_t i = 0; i < rows; ++i) {
    for (int64_t j = 0; j < d; ++j) {
      out[i * d + j] = (features[i * d + j] - mean[j]) / stddev[j];
    }
  }
  return out;
}

Tensor pool_features_for_kernel(const Tensor& resized_grid) {
  if (resized_grid.rank() != 2) {
    throw Error(ErrorCode::shape_error, "pooled features expect a 2-D grid");
  }
  if (!resized_grid.all_finite()) {
    throw Error(ErrorCode::nan_input, "grid contains NaN or Inf");
  }
  int64_t h = resized_grid.dim(0), w = resized_grid.dim(1);
  int64_t side = kKernelPoolSide;
  Tensor out({side * side});
  // Fractional box average: output cell (i,j) covers
  // [i*h/side,(i+1)*h/side) x [j*w/side,(j+1)*w/side) with exact
  // partial-pixel weights.
  for (int64_t i = 0; i < side; ++i) {
    double y0 = static_cast<double>(i) * h / side;
    double y1 = static_cast<double>(i + 1) * h / side;
    for (int64_t j = 0; j < side; ++j) {
      double x0 = static_cast<double>(j) * w / side;
      double x1 = static_cast<double>(j + 1) * w / side;
      double acc = 0.0, area = 0.0;
      for (auto py = static_cast<int64_t>(y0); py < static_cast<int64_t>(std::ceil(y1)); ++py) {
        double wy = std::min(y1, static_cast<double>(py + 1)) - std::max(y0, static_cast<double>(py));
        if (wy <= 0) continue;
        for (auto px = static_cast<int64_t>(x0); px < static_cast<int64_t>(std::ceil(x1)); ++px) {
          double wx = std::min(x1, static_cast<double>(px + 1)) - std::max(x0, static_cast<double>(px));
          if (wx <= 0) continue;
          acc += wy * wx * resized_grid.at(std::min(py, h - 1), std::min(px, w - 1));
          area += wy * wx;
        }
      }
      out[i * side + j] = static_cast<float>(area > 0 ? acc / area : 0.0);
    }
  }
  return out;
}

QsvmModel QsvmModel::fit(const Tensor& features, const std::vector<int>& labels,
                         const KernelSpec& spec) {
  spec.validate();
  int64_t n = features.dim(0), d = features.dim(1);
  if (static_cast<int64_t>(labels.size()) != n) {
    throw Error(ErrorCode::dimension_mismatch, "label count does not match feature rows");
  }
  if (n < 2) throw Error(ErrorCode::too_few_samples, "need at least 2 samples");
  bool has0 = false, has1 = false;
  for (int l : labels) (l == 0 ? has0 : has1) = true;
  if (!has0 || !has1) throw Error(ErrorCode::single_class, "both classes must be present");

  std::vector<double> y(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == 1 ? 1.0 : -1.0;

  // Resolve automatic gamma against the training features so kernel
  // values stay O(1) regardless of dimensionality.
  KernelSpec resolved = spec;
  if (resolved.gamma <= 0.0) {
    double var_sum = 0.0;
    for (int64_t j = 0; j < d; ++j) {
      double mean = 0.0;
      for (int64_t i = 0; i < n; ++i) mean += features.at(i, j);
      mean /= static_cast<double>(n);
      double sq = 0.0;
      for (int64_t i = 0; i < n; ++i) {
        double dv = features.at(i, j) - mean;
        sq += dv * dv;
      }
      var_sum += sq / static_cast<double>(n);
    }
    double avg_var = var_sum / static_cast<double>(d);
    resolved.gamma = avg_var > 1e-12 ? 1.0 / (static_cast<double>(d) * avg_var) : 1.0;
  }

  // Precomputed Gram; fine at the scales this solver is used for.
  std::vector<double> gram(static_cast<size_t>(n) * n);
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = i; j < n; ++j) {
      double k = poly_kernel(features.data() + i * d, features.data() + j * d, d, resolved);
      gram[static_cast<size_t>(i * n + j)] = k;
      gram[static_cast<size_t>(j * n + i)] = k;
    }
  }

  // Simplified SMO with random second-index choice.
  std::vector<double> alpha(static_cast<size_t>(n), 0.0);
  double b = 0.0;
  const double c_reg = spec.regularization;
  const double tol = 1e-4;
  const int max_passes = 20;
  const int max_iters = 20000;
  Rng rng(derive_seed(1234, "qsvm-smo"));

  auto decision_of = [&](int64_t i) {
    double f = b;
    for (int64_t j = 0; j < n; ++j) {
      if (alpha[static_cast<size_t>(j)] > 0) {
        f += alpha[static_cast<size_t>(j)] * y[static_cast<size_t>(j)] *
             gram[static_cast<size_t>(j * n + i)];
      }
    }
    return f;
  };

  int passes = 0, iters = 0;
  while (passes < max_passes && iters < max_iters) {
    int changed = 0;
    for (int64_t i = 0; i < n && iters < max_iters; ++i, ++iters) {
      double ei = decision_of(i) - y[static_cast<size_t>(i)];
      double ai = alpha[static_cast<size_t>(i)];
      if (!((y[static_cast<size_t>(i)] * ei < -tol && ai < c_reg) ||
            (y[static_cast<size_t>(i)] * ei > tol && ai > 0))) {
        continue;
      }
      auto j = static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(n - 1)));
      if (j >= i) ++j;
      double ej = decision_of(j) - y[static_cast<size_t>(j)];
      double aj = alpha[static_cast<size_t>(j)];

      double lo, hi;
      if (y[static_cast<size_t>(i)] != y[static_cast<size_t>(j)]) {
        lo = std::max(0.0, aj - ai);
        hi = std::min(c_reg, c_reg + aj - ai);
      } else {
        lo = std::max(0.0, ai + aj - c_reg);
        hi = std::min(c_reg, ai + aj);
      }
      if (lo >= hi) continue;
      double eta = 2.0 * gram[static_cast<size_t>(i * n + j)] - gram[static_cast<size_t>(i * n + i)] -
                   gram[static_cast<size_t>(j * n + j)];
      if (eta >= 0) continue;

      double aj_new = std::clamp(aj - y[static_cast<size_t>(j)] * (ei - ej) / eta, lo, hi);
      if (std::abs(aj_new - aj) < 1e-7) continue;
      double ai_new = ai + y[static_cast<size_t>(i)] * y[static_cast<size_t>(j)] * (aj - aj_new);

      double b1 = b - ei - y[static_cast<size_t>(i)] * (ai_new - ai) * gram[static_cast<size_t>(i * n + i)] -
                  y[static_cast<size_t>(j)] * (aj_new - aj) * gram[static_cast<size_t>(i * n + j)];
      double b2 = b - ej - y[static_cast<size_t>(i)] * (ai_new - ai) * gram[static_cast<size_t>(i * n + j)] -
                  y[static_cast<size_t>(j)] * (aj_new - aj) * gram[static_cast<size_t>(j * n + j)];
      alpha[static_cast<size_t>(i)] = ai_new;
      alpha[static_cast<size_t>(j)] = aj_new;
      if (ai_new > 0 && ai_new < c_reg) {
        b = b1;
      } else if (aj_new > 0 && aj_new < c_reg) {
        b = b2;
      } else {
        b = 0.5 * (b1 + b2);
      }
      ++changed;
    }
    passes = changed == 0 ? passes + 1 : 0;
  }

  QsvmModel model;
  model.kernel_ = resolved;
  model.feature_dim_ = d;
  model.bias_ = b;
  int64_t n_sv = 0;
  for (double a : alpha) {
    if (a > 1e-9) ++n_sv;
  }
  model.support_ = Tensor({std::max<int64_t>(n_sv, 1), d});
  model.coef_.reserve(static_cast<size_t>(n_sv));
  int64_t sv = 0;
  for (int64_t i = 0; i < n; ++i) {
    if (alpha[static_cast<size_t>(i)] > 1e-9) {
      std::copy(features.data() + i * d, features.data() + (i + 1) * d,
                model.support_.data() + sv * d);
      model.coef_.push_back(static_cast<float>(alpha[static_cast<size_t>(i)] * y[static_cast<size_t>(i)]));
      ++sv;
    }
  }
  if (sv == 0) {
    // Degenerate fit; keep a single zero support vector so decision() is 0+b.
    model.coef_.push_back(0.0f);
  } else {
    model.support_ = model.support_.reshaped({sv, d});
  }
  return model;
}

double QsvmModel::decision(const float* x, int64_t dim) const {
  if (dim != feature_dim_) {
    throw Error(ErrorCode::dimension_mismatch, "feature dim does not match trained model");
  }
  double f = bias_;
  int64_t n_sv = support_.dim(0);
  for (int64_t i = 0; i < static_cast<int64_t>(coef_.size()) && i < n_sv; ++i) {
    f += coef_[static_cast<size_t>(i)] * poly_kernel(support_.data() + i * feature_dim_, x, dim, kernel_);
  }
  return f;
}

int QsvmModel::predict(const float* x, int64_t dim) const { return decision(x, dim) >= 0 ? 1 : 0; }

void QsvmModel::restore(KernelSpec spec, Tensor support, std::vector<float> coef, double bias) {
  kernel_ = spec;
  support_ = std::move(support);
  coef_ = std::move(coef);
  bias_ = bias;
  feature_dim_ = support_.rank() == 2 ? support_.dim(1) : 0;
}

}  // namespace mgmd
