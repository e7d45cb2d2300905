#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "mgmd/core/error.hpp"
#include "mgmd/nn/nn.hpp"

namespace mgmd::nn {

using EMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

namespace {

int64_t conv_out_dim(int64_t in, int kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

/// im2col: (C,H,W) sample -> (C*k*k, Ho*Wo) column matrix; channel-major
/// rows so group slices are contiguous.
void im2col(const float* x, int64_t c_total, int64_t h, int64_t w, int kernel, int stride, int pad,
            int64_t ho, int64_t wo, float* cols) {
  int64_t l = ho * wo;
  for (int64_t c = 0; c < c_total; ++c) {
    const float* plane = x + c * h * w;
    for (int ki = 0; ki < kernel; ++ki) {
      for (int kj = 0; kj < kernel; ++kj) {
        float* row = cols + ((c * kernel + ki) * kernel + kj) * l;
        for (int64_t oy = 0; oy < ho; ++oy) {
          int64_t iy = oy * stride - pad + ki;
          bool y_ok = iy >= 0 && iy < h;
          for (int64_t ox = 0; ox < wo; ++ox) {
            int64_t ix = ox * stride - pad + kj;
            row[oy * wo + ox] = (y_ok && ix >= 0 && ix < w) ? plane[iy * w + ix] : 0.0f;
          }
        }
      }
    }
  }
}

void col2im_accumulate(const float* cols, int64_t c_total, int64_t h, int64_t w, int kernel,
                       int stride, int pad, int64_t ho, int64_t wo, float* x) {
  int64_t l = ho * wo;
  for (int64_t c = 0; c < c_total; ++c) {
    float* plane = x + c * h * w;
    for (int ki = 0; ki < kernel; ++ki) {
      for (int kj = 0; kj < kernel; ++kj) {
        const float* row = cols + ((c * kernel + ki) * kernel + kj) * l;
        for (int64_t oy = 0; oy < ho; ++oy) {
          int64_t iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= h) continue;
          for (int64_t ox = 0; ox < wo; ++ox) {
            int64_t ix = ox * stride - pad + kj;
            if (ix < 0 || ix >= w) continue;
            plane[iy * w + ix] += row[oy * wo + ox];
          }
        }
      }
    }
  }
}

}  // namespace

// --- Conv2d -----------------------------------------------------------------

Conv2d::Conv2d(int64_t in_ch, int64_t out_ch, int kernel, int stride, int pad, Rng& rng,
               int64_t groups, bool bias)
    : in_ch_(in_ch),
      out_ch_(out_ch),
      groups_(groups),
      kernel_(kernel),
      stride_(stride),
      pad_(pad),
      has_bias_(bias),
      weight_({out_ch, (in_ch / groups) * kernel * kernel}),
      bias_({out_ch}),
      dweight_({out_ch, (in_ch / groups) * kernel * kernel}),
      dbias_({out_ch}) {
  if (in_ch % groups != 0 || out_ch % groups != 0) {
    throw Error(ErrorCode::config_error, "conv channels not divisible by groups");
  }
  kaiming_init(weight_, (in_ch / groups) * kernel * kernel, rng);
}

void Conv2d::visit_params(const ParamVisitor& fn, const std::string& prefix) {
  fn(prefix + ".weight", weight_, dweight_);
  if (has_bias_) fn(prefix + ".bias", bias_, dbias_);
}

Tensor Conv2d::forward_impl(const Tensor& x, RunCtx& ctx) {
  if (x.rank() != 4 || x.dim(1) != in_ch_) {
    throw Error(ErrorCode::shape_error, "conv2d expects (N," + std::to_string(in_ch_) + ",H,W)");
  }
  int64_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
  int64_t ho = conv_out_dim(h, kernel_, stride_, pad_);
  int64_t wo = conv_out_dim(w, kernel_, stride_, pad_);
  if (ho < 1 || wo < 1) throw Error(ErrorCode::shape_error, "conv2d input smaller than kernel");
  int64_t l = ho * wo;
  int64_t cg = in_ch_ / groups_;
  int64_t og = out_ch_ / groups_;
  int64_t k_rows = cg * kernel_ * kernel_;

  Tensor y({n, out_ch_, ho, wo});
  Tensor cols({in_ch_ * kernel_ * kernel_, l});
  for (int64_t s = 0; s < n; ++s) {
    im2col(x.data() + s * in_ch_ * h * w, in_ch_, h, w, kernel_, stride_, pad_, ho, wo, cols.data());
    for (int64_t g = 0; g < groups_; ++g) {
      ECMap wm(weight_.data() + g * og * k_rows, og, k_rows);
      ECMap cm(cols.data() + g * cg * kernel_ * kernel_ * l, k_rows, l);
      EMap ym(y.data() + (s * out_ch_ + g * og) * l, og, l);
      ym.noalias() = wm * cm;
    }
    if (has_bias_) {
      for (int64_t o = 0; o < out_ch_; ++o) {
        float b = bias_[o];
        float* row = y.data() + (s * out_ch_ + o) * l;
        for (int64_t i = 0; i < l; ++i) row[i] += b;
      }
    }
  }
  if (ctx.grad) cached_input_ = x;
  return y;
}

Tensor Conv2d::backward_impl(const Tensor& dy) {
  const Tensor& x = cached_input_;
  int64_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
  int64_t ho = dy.dim(2), wo = dy.dim(3);
  int64_t l = ho * wo;
  int64_t cg = in_ch_ / groups_;
  int64_t og = out_ch_ / groups_;
  int64_t k_rows = cg * kernel_ * kernel_;

  Tensor dx(x.shape());
  Tensor cols({in_ch_ * kernel_ * kernel_, l});
  Tensor dcols({in_ch_ * kernel_ * kernel_, l});
  for (int64_t s = 0; s < n; ++s) {
    im2col(x.data() + s * in_ch_ * h * w, in_ch_, h, w, kernel_, stride_, pad_, ho, wo, cols.data());
    for (int64_t g = 0; g < groups_; ++g) {
      ECMap dym(dy.data() + (s * out_ch_ + g * og) * l, og, l);
      ECMap cm(cols.data() + g * cg * kernel_ * kernel_ * l, k_rows, l);
      EMap dwm(dweight_.data() + g * og * k_rows, og, k_rows);
      dwm.noalias() += dym * cm.transpose();
      ECMap wm(weight_.data() + g * og * k_rows, og, k_rows);
      EMap dcm(dcols.data() + g * cg * kernel_ * kernel_ * l, k_rows, l);
      dcm.noalias() = wm.transpose() * dym;
    }
    col2im_accumulate(dcols.data(), in_ch_, h, w, kernel_, stride_, pad_, ho, wo,
                      dx.data() + s * in_ch_ * h * w);
  }
  if (has_bias_) {
    for (int64_t s = 0; s < n; ++s) {
      for (int64_t o = 0; o < out_ch_; ++o) {
        const float* row = dy.data() + (s * out_ch_ + o) * l;
        double acc = 0.0;
        for (int64_t i = 0; i < l; ++i) acc += row[i];
        dbias_[o] += static_cast<float>(acc);
      }
    }
  }
  return dx;
}

// --- MaxPool2d ----------------------------------------------------------------

Tensor MaxPool2d::forward_impl(const Tensor& x, RunCtx& ctx) {
  int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  int64_t ho = conv_out_dim(h, kernel_, stride_, pad_);
  int64_t wo = conv_out_dim(w, kernel_, stride_, pad_);
  if (ho < 1 || wo < 1) throw Error(ErrorCode::shape_error, "maxpool input smaller than kernel");
  Tensor y({n, c, ho, wo});
  if (ctx.grad) {
    argmax_.assign(static_cast<size_t>(n * c * ho * wo), -1);
    input_shape_ = x.shape();
  }
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const float* plane = x.data() + (s * c + ch) * h * w;
      float* out_plane = y.data() + (s * c + ch) * ho * wo;
      for (int64_t oy = 0; oy < ho; ++oy) {
        for (int64_t ox = 0; ox < wo; ++ox) {
          float best = -std::numeric_limits<float>::infinity();
          int64_t best_idx = -1;
          for (int ki = 0; ki < kernel_; ++ki) {
            int64_t iy = oy * stride_ - pad_ + ki;
            if (iy < 0 || iy >= h) continue;
            for (int kj = 0; kj < kernel_; ++kj) {
              int64_t ix = ox * stride_ - pad_ + kj;
              if (ix < 0 || ix >= w) continue;
              float v = plane[iy * w + ix];
              if (v > best) {
                best = v;
                best_idx = iy * w + ix;
              }
            }
          }
          out_plane[oy * wo + ox] = best_idx >= 0 ? best : 0.0f;
          if (ctx.grad) {
            argmax_[static_cast<size_t>(((s * c + ch) * ho + oy) * wo + ox)] =
                best_idx >= 0 ? (s * c + ch) * h * w + best_idx : -1;
          }
        }
      }
    }
  }
  return y;
}

Tensor MaxPool2d::backward_impl(const Tensor& dy) {
  Tensor dx(input_shape_);
  for (int64_t i = 0; i < dy.numel(); ++i) {
    int64_t idx = argmax_[static_cast<size_t>(i)];
    if (idx >= 0) dx[idx] += dy[i];
  }
  return dx;
}

// --- GlobalAvgPool --------------------------------------------------------------

Tensor GlobalAvgPool::forward_impl(const Tensor& x, RunCtx& ctx) {
  int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor y({n, c});
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const float* plane = x.data() + (s * c + ch) * hw;
      double acc = 0.0;
      for (int64_t i = 0; i < hw; ++i) acc += plane[i];
      y.at(s, ch) = static_cast<float>(acc / static_cast<double>(hw));
    }
  }
  if (ctx.grad) input_shape_ = x.shape();
  return y;
}

Tensor GlobalAvgPool::backward_impl(const Tensor& dy) {
  Tensor dx(input_shape_);
  int64_t n = input_shape_[0], c = input_shape_[1], hw = input_shape_[2] * input_shape_[3];
  float inv = 1.0f / static_cast<float>(hw);
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t ch = 0; ch < c; ++ch) {
      float g = dy.at(s, ch) * inv;
      float* plane = dx.data() + (s * c + ch) * hw;
      for (int64_t i = 0; i < hw; ++i) plane[i] = g;
    }
  }
  return dx;
}

// --- BatchNorm2d ------------------------------------------------------------------

BatchNorm2d::BatchNorm2d(int64_t channels, float momentum, float eps)
    : channels_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_({channels}, 1.0f),
      beta_({channels}, 0.0f),
      dgamma_({channels}, 0.0f),
      dbeta_({channels}, 0.0f),
      running_mean_({channels}, 0.0f),
      running_var_({channels}, 1.0f) {}

void BatchNorm2d::visit_params(const ParamVisitor& fn, const std::string& prefix) {
  fn(prefix + ".gamma", gamma_, dgamma_);
  fn(prefix + ".beta", beta_, dbeta_);
}

void BatchNorm2d::visit_buffers(const BufferVisitor& fn, const std::string& prefix) {
  fn(prefix + ".running_mean", running_mean_);
  fn(prefix + ".running_var", running_var_);
}

Tensor BatchNorm2d::forward_impl(const Tensor& x, RunCtx& ctx) {
  int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  if (c != channels_) throw Error(ErrorCode::shape_error, "batchnorm channel mismatch");
  int64_t m = n * hw;
  Tensor y(x.shape());
  Tensor xhat;
  Tensor invstd({c});
  if (ctx.grad) xhat = Tensor(x.shape());

  for (int64_t ch = 0; ch < c; ++ch) {
    double mean, var;
    if (ctx.train) {
      double sum = 0.0, sq = 0.0;
      for (int64_t s = 0; s < n; ++s) {
        const float* plane = x.data() + (s * c + ch) * hw;
        for (int64_t i = 0; i < hw; ++i) {
          sum += plane[i];
          sq += static_cast<double>(plane[i]) * plane[i];
        }
      }
      mean = sum / static_cast<double>(m);
      var = sq / static_cast<double>(m) - mean * mean;
      var = std::max(var, 0.0);
      running_mean_[ch] = (1.0f - momentum_) * running_mean_[ch] + momentum_ * static_cast<float>(mean);
      running_var_[ch] = (1.0f - momentum_) * running_var_[ch] + momentum_ * static_cast<float>(var);
    } else {
      mean = running_mean_[ch];
      var = running_var_[ch];
    }
    float istd = static_cast<float>(1.0 / std::sqrt(var + eps_));
    invstd[ch] = istd;
    float g = gamma_[ch], b = beta_[ch], mu = static_cast<float>(mean);
    for (int64_t s = 0; s < n; ++s) {
      const float* in_plane = x.data() + (s * c + ch) * hw;
      float* out_plane = y.data() + (s * c + ch) * hw;
      float* hat_plane = ctx.grad ? xhat.data() + (s * c + ch) * hw : nullptr;
      for (int64_t i = 0; i < hw; ++i) {
        float h = (in_plane[i] - mu) * istd;
        if (hat_plane) hat_plane[i] = h;
        out_plane[i] = g * h + b;
      }
    }
  }
  if (ctx.grad) {
    cached_xhat_ = std::move(xhat);
    cached_invstd_ = std::move(invstd);
    input_shape_ = x.shape();
    // Eval-mode backward treats mean/var as constants; flag via train bit.
    train_mode_cache_ = ctx.train;
  }
  return y;
}

Tensor BatchNorm2d::backward_impl(const Tensor& dy) {
  int64_t n = input_shape_[0], c = input_shape_[1], hw = input_shape_[2] * input_shape_[3];
  int64_t m = n * hw;
  Tensor dx(input_shape_);
  for (int64_t ch = 0; ch < c; ++ch) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int64_t s = 0; s < n; ++s) {
      const float* dy_plane = dy.data() + (s * c + ch) * hw;
      const float* hat_plane = cached_xhat_.data() + (s * c + ch) * hw;
      for (int64_t i = 0; i < hw; ++i) {
        sum_dy += dy_plane[i];
        sum_dy_xhat += static_cast<double>(dy_plane[i]) * hat_plane[i];
      }
    }
    dgamma_[ch] += static_cast<float>(sum_dy_xhat);
    dbeta_[ch] += static_cast<float>(sum_dy);
    float g = gamma_[ch], istd = cached_invstd_[ch];
    if (train_mode_cache_) {
      float k = g * istd / static_cast<float>(m);
      for (int64_t s = 0; s < n; ++s) {
        const float* dy_plane = dy.data() + (s * c + ch) * hw;
        const float* hat_plane = cached_xhat_.data() + (s * c + ch) * hw;
        float* dx_plane = dx.data() + (s * c + ch) * hw;
        for (int64_t i = 0; i < hw; ++i) {
          dx_plane[i] = k * (static_cast<float>(m) * dy_plane[i] - static_cast<float>(sum_dy) -
                             hat_plane[i] * static_cast<float>(sum_dy_xhat));
        }
      }
    } else {
      float k = g * istd;
      for (int64_t s = 0; s < n; ++s) {
        const float* dy_plane = dy.data() + (s * c + ch) * hw;
        float* dx_plane = dx.data() + (s * c + ch) * hw;
        for (int64_t i = 0; i < hw; ++i) dx_plane[i] = k * dy_plane[i];
      }
    }
  }
  return dx;
}

// --- ResidualBlock -------------------------------------------------------------

namespace {
ModulePtr conv_bn_relu_conv_bn(int64_t in_ch, int64_t out_ch, int stride, Rng& rng) {
  auto seq = std::make_unique<Sequential>();
  seq->add("conv1", std::make_unique<Conv2d>(in_ch, out_ch, 3, stride, 1, rng, 1, false));
  seq->add("bn1", std::make_unique<BatchNorm2d>(out_ch));
  seq->add("relu", std::make_unique<Act>(Activation::relu));
  seq->add("conv2", std::make_unique<Conv2d>(out_ch, out_ch, 3, 1, 1, rng, 1, false));
  seq->add("bn2", std::make_unique<BatchNorm2d>(out_ch));
  return seq;
}

ModulePtr projection_shortcut(int64_t in_ch, int64_t out_ch, int stride, Rng& rng) {
  auto seq = std::make_unique<Sequential>();
  seq->add("conv", std::make_unique<Conv2d>(in_ch, out_ch, 1, stride, 0, rng, 1, false));
  seq->add("bn", std::make_unique<BatchNorm2d>(out_ch));
  return seq;
}
}  // namespace

ResidualBlock::ResidualBlock(int64_t in_ch, int64_t out_ch, int stride, Rng& rng)
    : main_(conv_bn_relu_conv_bn(in_ch, out_ch, stride, rng)) {
  if (stride != 1 || in_ch != out_ch) shortcut_ = projection_shortcut(in_ch, out_ch, stride, rng);
}

void ResidualBlock::visit_params(const ParamVisitor& fn, const std::string& prefix) {
  main_->visit_params(fn, prefix + ".main");
  if (shortcut_) shortcut_->visit_params(fn, prefix + ".shortcut");
}

void ResidualBlock::visit_buffers(const BufferVisitor& fn, const std::string& prefix) {
  main_->visit_buffers(fn, prefix + ".main");
  if (shortcut_) shortcut_->visit_buffers(fn, prefix + ".shortcut");
}

Module* ResidualBlock::find_child(const std::string& name) {
  if (name == "main") return main_.get();
  if (name == "shortcut") return shortcut_.get();
  return nullptr;
}

Tensor ResidualBlock::forward_impl(const Tensor& x, RunCtx& ctx) {
  Tensor s = shortcut_ ? shortcut_->run_forward(x, ctx) : x;
  Tensor u = main_->run_forward(x, ctx);
  Tensor sum(u.shape());
  for (int64_t i = 0; i < u.numel(); ++i) sum[i] = u[i] + s[i];
  Tensor y(sum.shape());
  for (int64_t i = 0; i < sum.numel(); ++i) y[i] = sum[i] > 0 ? sum[i] : 0.0f;
  if (ctx.grad) cached_sum_ = std::move(sum);
  return y;
}

Tensor ResidualBlock::backward_impl(const Tensor& dy) {
  Tensor dsum(dy.shape());
  for (int64_t i = 0; i < dy.numel(); ++i) dsum[i] = cached_sum_[i] > 0 ? dy[i] : 0.0f;
  Tensor dx = main_->run_backward(dsum);
  if (shortcut_) {
    Tensor ds = shortcut_->run_backward(dsum);
    dx.add_scaled(ds, 1.0f);
  } else {
    dx.add_scaled(dsum, 1.0f);
  }
  return dx;
}

// --- SqueezeExcite ----------------------------------------------------------------

SqueezeExcite::SqueezeExcite(int64_t channels, int64_t reduction, Rng& rng) : channels_(channels) {
  int64_t mid = std::max<int64_t>(channels / reduction, 1);
  auto fc = std::make_unique<Sequential>();
  fc->add("fc1", std::make_unique<Linear>(channels, mid, rng));
  fc->add("relu", std::make_unique<Act>(Activation::relu));
  fc->add("fc2", std::make_unique<Linear>(mid, channels, rng));
  fc->add("sigmoid", std::make_unique<Act>(Activation::sigmoid));
  fc_ = std::move(fc);
}

void SqueezeExcite::visit_params(const ParamVisitor& fn, const std::string& prefix) {
  fc_->visit_params(fn, prefix + ".fc");
}

Module* SqueezeExcite::find_child(const std::string& name) {
  return name == "fc" ? fc_.get() : nullptr;
}

Tensor SqueezeExcite::forward_impl(const Tensor& x, RunCtx& ctx) {
  int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor z({n, c});
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const float* plane = x.data() + (s * c + ch) * hw;
      double acc = 0.0;
      for (int64_t i = 0; i < hw; ++i) acc += plane[i];
      z.at(s, ch) = static_cast<float>(acc / static_cast<double>(hw));
    }
  }
  Tensor scale = fc_->run_forward(z, ctx);
  Tensor y(x.shape());
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t ch = 0; ch < c; ++ch) {
      float sc = scale.at(s, ch);
      const float* in_plane = x.data() + (s * c + ch) * hw;
      float* out_plane = y.data() + (s * c + ch) * hw;
      for (int64_t i = 0; i < hw; ++i) out_plane[i] = in_plane[i] * sc;
    }
  }
  if (ctx.grad) {
    cached_input_ = x;
    cached_scale_ = std::move(scale);
  }
  return y;
}

Tensor SqueezeExcite::backward_impl(const Tensor& dy) {
  const Tensor& x = cached_input_;
  int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor dscale({n, c});
  Tensor dx(x.shape());
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t ch = 0; ch < c; ++ch) {
      float sc = cached_scale_.at(s, ch);
      const float* dy_plane = dy.data() + (s * c + ch) * hw;
      const float* x_plane = x.data() + (s * c + ch) * hw;
      float* dx_plane = dx.data() + (s * c + ch) * hw;
      double acc = 0.0;
      for (int64_t i = 0; i < hw; ++i) {
        dx_plane[i] = dy_plane[i] * sc;
        acc += static_cast<double>(dy_plane[i]) * x_plane[i];
      }
      dscale.at(s, ch) = static_cast<float>(acc);
    }
  }
  Tensor dz = fc_->run_backward(dscale);
  float inv = 1.0f / static_cast<float>(hw);
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t ch = 0; ch < c; ++ch) {
      float g = dz.at(s, ch) * inv;
      float* dx_plane = dx.data() + (s * c + ch) * hw;
      for (int64_t i = 0; i < hw; ++i) dx_plane[i] += g;
    }
  }
  return dx;
}

// --- SEResidualBlock ------------------------------------------------------------------

SEResidualBlock::SEResidualBlock(int64_t in_ch, int64_t out_ch, int stride, int64_t reduction,
                                 Rng& rng)
    : main_(conv_bn_relu_conv_bn(in_ch, out_ch, stride, rng)),
      se_(std::make_unique<SqueezeExcite>(out_ch, reduction, rng)) {
  if (stride != 1 || in_ch != out_ch) shortcut_ = projection_shortcut(in_ch, out_ch, stride, rng);
}

void SEResidualBlock::visit_params(const ParamVisitor& fn, const std::string& prefix) {
  main_->visit_params(fn, prefix + ".main");
  se_->visit_params(fn, prefix + ".se");
  if (shortcut_) shortcut_->visit_params(fn, prefix + ".shortcut");
}

void SEResidualBlock::visit_buffers(const BufferVisitor& fn, const std::string& prefix) {
  main_->visit_buffers(fn, prefix + ".main");
  if (shortcut_) shortcut_->visit_buffers(fn, prefix + ".shortcut");
}

Module* SEResidualBlock::find_child(const std::string& name) {
  if (name == "main") return main_.get();
  if (name == "se") return se_.get();
  if (name == "shortcut") return shortcut_.get();
  return nullptr;
}

Tensor SEResidualBlock::forward_impl(const Tensor& x, RunCtx& ctx) {
  Tensor s = shortcut_ ? shortcut_->run_forward(x, ctx) : x;
  Tensor u = main_->run_forward(x, ctx);
  Tensor v = se_->run_forward(u, ctx);
  Tensor sum(v.shape());
  for (int64_t i = 0; i < v.numel(); ++i) sum[i] = v[i] + s[i];
  Tensor y(sum.shape());
  for (int64_t i = 0; i < sum.numel(); ++i) y[i] = sum[i] > 0 ? sum[i] : 0.0f;
  if (ctx.grad) cached_sum_ = std::move(sum);
  return y;
}

Tensor SEResidualBlock::backward_impl(const Tensor& dy) {
  Tensor dsum(dy.shape());
  for (int64_t i = 0; i < dy.numel(); ++i) dsum[i] = cached_sum_[i] > 0 ? dy[i] : 0.0f;
  Tensor du = se_->run_backward(dsum);
  Tensor dx = main_->run_backward(du);
  if (shortcut_) {
    Tensor ds = shortcut_->run_backward(dsum);
    dx.add_scaled(ds, 1.0f);
  } else {
    dx.add_scaled(dsum, 1.0f);
  }
  return dx;
}

}  // namespace mgmd::nn
