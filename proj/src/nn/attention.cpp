#include <cmath>

#include <Eigen/Dense>

#include "mgmd/core/error.hpp"
#include "mgmd/nn/nn.hpp"

namespace mgmd::nn {

using EMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;
using EStride = Eigen::Stride<Eigen::Dynamic, 1>;
using EBlockMap = Eigen::Map<EMat, 0, EStride>;
using ECBlockMap = Eigen::Map<const EMat, 0, EStride>;

// --- LayerNorm ----------------------------------------------------------------

LayerNorm::LayerNorm(int64_t dim, float eps)
    : dim_(dim),
      eps_(eps),
      gamma_({dim}, 1.0f),
      beta_({dim}, 0.0f),
      dgamma_({dim}, 0.0f),
      dbeta_({dim}, 0.0f) {}

void LayerNorm::visit_params(const ParamVisitor& fn, const std::string& prefix) {
  fn(prefix + ".gamma", gamma_, dgamma_);
  fn(prefix + ".beta", beta_, dbeta_);
}

Tensor LayerNorm::forward_impl(const Tensor& x, RunCtx& ctx) {
  int64_t rows = x.numel() / dim_;
  Tensor y(x.shape());
  Tensor xhat;
  Tensor invstd({rows});
  if (ctx.grad) xhat = Tensor(x.shape());
  for (int64_t r = 0; r < rows; ++r) {
    const float* in = x.data() + r * dim_;
    float* out = y.data() + r * dim_;
    double mean = 0.0;
    for (int64_t j = 0; j < dim_; ++j) mean += in[j];
    mean /= static_cast<double>(dim_);
    double var = 0.0;
    for (int64_t j = 0; j < dim_; ++j) {
      double d = in[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(dim_);
    float istd = static_cast<float>(1.0 / std::sqrt(var + eps_));
    invstd[r] = istd;
    for (int64_t j = 0; j < dim_; ++j) {
      float h = (in[j] - static_cast<float>(mean)) * istd;
      if (ctx.grad) xhat[r * dim_ + j] = h;
      out[j] = gamma_[j] * h + beta_[j];
    }
  }
  if (ctx.grad) {
    cached_xhat_ = std::move(xhat);
    cached_invstd_ = std::move(invstd);
    input_shape_ = x.shape();
  }
  return y;
}

Tensor LayerNorm::backward_impl(const Tensor& dy) {
  int64_t rows = dy.numel() / dim_;
  Tensor dx(input_shape_);
  for (int64_t r = 0; r < rows; ++r) {
    const float* dyp = dy.data() + r * dim_;
    const float* hat = cached_xhat_.data() + r * dim_;
    float* dxp = dx.data() + r * dim_;
    double sum_g = 0.0, sum_gh = 0.0;
    for (int64_t j = 0; j < dim_; ++j) {
      float g = dyp[j] * gamma_[j];
      sum_g += g;
      sum_gh += static_cast<double>(g) * hat[j];
      dgamma_[j] += dyp[j] * hat[j];
      dbeta_[j] += dyp[j];
    }
    float istd = cached_invstd_[r];
    float invd = 1.0f / static_cast<float>(dim_);
    for (int64_t j = 0; j < dim_; ++j) {
      float g = dyp[j] * gamma_[j];
      dxp[j] = istd * (g - invd * static_cast<float>(sum_g) -
                       hat[j] * invd * static_cast<float>(sum_gh));
    }
  }
  return dx;
}

// --- MultiHeadSelfAttention -------------------------------------------------------

MultiHeadSelfAttention::MultiHeadSelfAttention(int64_t dim, int64_t heads, Rng& rng)
    : dim_(dim),
      heads_(heads),
      head_dim_(dim / heads),
      w_qkv_({3 * dim, dim}),
      b_qkv_({3 * dim}, 0.0f),
      w_out_({dim, dim}),
      b_out_({dim}, 0.0f),
      dw_qkv_({3 * dim, dim}),
      db_qkv_({3 * dim}),
      dw_out_({dim, dim}),
      db_out_({dim}) {
  if (dim % heads != 0) throw Error(ErrorCode::config_error, "attention dim not divisible by heads");
  kaiming_init(w_qkv_, dim, rng);
  kaiming_init(w_out_, dim, rng);
}

void MultiHeadSelfAttention::visit_params(const ParamVisitor& fn, const std::string& prefix) {
  fn(prefix + ".w_qkv", w_qkv_, dw_qkv_);
  fn(prefix + ".b_qkv", b_qkv_, db_qkv_);
  fn(prefix + ".w_out", w_out_, dw_out_);
  fn(prefix + ".b_out", b_out_, db_out_);
}

Tensor MultiHeadSelfAttention::forward_impl(const Tensor& x, RunCtx& ctx) {
  if (x.rank() != 3 || x.dim(2) != dim_) {
    throw Error(ErrorCode::shape_error, "attention expects (N,T,D)");
  }
  int64_t n = x.dim(0), t = x.dim(1);
  int64_t rows = n * t;

  Tensor qkv({rows, 3 * dim_});
  {
    ECMap xm(x.data(), rows, dim_);
    ECMap wm(w_qkv_.data(), 3 * dim_, dim_);
    EMap qm(qkv.data(), rows, 3 * dim_);
    qm.noalias() = xm * wm.transpose();
    Eigen::Map<const Eigen::VectorXf> bm(b_qkv_.data(), 3 * dim_);
    qm.rowwise() += bm.transpose();
  }

  Tensor attn({n, heads_, t, t});
  Tensor merged({rows, dim_});
  float scale = 1.0f / std::sqrt(static_cast<float>(head_dim_));
  EStride stride(3 * dim_, 1);
  EStride mstride(dim_, 1);
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t h = 0; h < heads_; ++h) {
      ECBlockMap q(qkv.data() + s * t * 3 * dim_ + h * head_dim_, t, head_dim_, stride);
      ECBlockMap k(qkv.data() + s * t * 3 * dim_ + dim_ + h * head_dim_, t, head_dim_, stride);
      ECBlockMap v(qkv.data() + s * t * 3 * dim_ + 2 * dim_ + h * head_dim_, t, head_dim_, stride);

      EMat scores = (q * k.transpose()) * scale;
      EMap am(attn.data() + ((s * heads_ + h) * t) * t, t, t);
      for (int64_t i = 0; i < t; ++i) {
        float mx = scores(i, 0);
        for (int64_t j = 1; j < t; ++j) mx = std::max(mx, scores(i, j));
        double sum = 0.0;
        for (int64_t j = 0; j < t; ++j) sum += std::exp(static_cast<double>(scores(i, j) - mx));
        for (int64_t j = 0; j < t; ++j) {
          am(i, j) = static_cast<float>(std::exp(static_cast<double>(scores(i, j) - mx)) / sum);
        }
      }
      EBlockMap out(merged.data() + s * t * dim_ + h * head_dim_, t, head_dim_, mstride);
      out.noalias() = am * v;
    }
  }

  Tensor y({n, t, dim_});
  {
    ECMap mm(merged.data(), rows, dim_);
    ECMap wm(w_out_.data(), dim_, dim_);
    EMap ym(y.data(), rows, dim_);
    ym.noalias() = mm * wm.transpose();
    Eigen::Map<const Eigen::VectorXf> bm(b_out_.data(), dim_);
    ym.rowwise() += bm.transpose();
  }

  if (ctx.grad) {
    cached_input_ = x;
    cached_qkv_ = std::move(qkv);
    cached_attn_ = std::move(attn);
    cached_merged_ = std::move(merged);
  }
  return y;
}

Tensor MultiHeadSelfAttention::backward_impl(const Tensor& dy) {
  const Tensor& x = cached_input_;
  int64_t n = x.dim(0), t = x.dim(1);
  int64_t rows = n * t;
  float scale = 1.0f / std::sqrt(static_cast<float>(head_dim_));

  // Output projection.
  Tensor dmerged({rows, dim_});
  {
    ECMap dym(dy.data(), rows, dim_);
    ECMap mm(cached_merged_.data(), rows, dim_);
    EMap dwm(dw_out_.data(), dim_, dim_);
    dwm.noalias() += dym.transpose() * mm;
    Eigen::Map<Eigen::VectorXf> dbm(db_out_.data(), dim_);
    dbm.noalias() += dym.colwise().sum().transpose();
    ECMap wm(w_out_.data(), dim_, dim_);
    EMap dmm(dmerged.data(), rows, dim_);
    dmm.noalias() = dym * wm;
  }

  Tensor dqkv({rows, 3 * dim_}, 0.0f);
  EStride stride(3 * dim_, 1);
  EStride mstride(dim_, 1);
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t h = 0; h < heads_; ++h) {
      ECBlockMap q(cached_qkv_.data() + s * t * 3 * dim_ + h * head_dim_, t, head_dim_, stride);
      ECBlockMap k(cached_qkv_.data() + s * t * 3 * dim_ + dim_ + h * head_dim_, t, head_dim_, stride);
      ECBlockMap v(cached_qkv_.data() + s * t * 3 * dim_ + 2 * dim_ + h * head_dim_, t, head_dim_,
                   stride);
      ECMap am(cached_attn_.data() + ((s * heads_ + h) * t) * t, t, t);
      ECBlockMap dctx(dmerged.data() + s * t * dim_ + h * head_dim_, t, head_dim_, mstride);

      EMat dattn = dctx * v.transpose();        // (t,t)
      EMat dv = am.transpose() * dctx;          // (t,dh)
      // Softmax rows backward.
      EMat dscores(t, t);
      for (int64_t i = 0; i < t; ++i) {
        double dot = 0.0;
        for (int64_t j = 0; j < t; ++j) dot += static_cast<double>(am(i, j)) * dattn(i, j);
        for (int64_t j = 0; j < t; ++j) {
          dscores(i, j) = am(i, j) * (dattn(i, j) - static_cast<float>(dot));
        }
      }
      EMat dq = dscores * k * scale;
      EMat dk = dscores.transpose() * q * scale;

      EBlockMap dq_out(dqkv.data() + s * t * 3 * dim_ + h * head_dim_, t, head_dim_, stride);
      EBlockMap dk_out(dqkv.data() + s * t * 3 * dim_ + dim_ + h * head_dim_, t, head_dim_, stride);
      EBlockMap dv_out(dqkv.data() + s * t * 3 * dim_ + 2 * dim_ + h * head_dim_, t, head_dim_,
                       stride);
      dq_out = dq;
      dk_out = dk;
      dv_out = dv;
    }
  }

  Tensor dx(x.shape());
  {
    ECMap dqm(dqkv.data(), rows, 3 * dim_);
    ECMap xm(x.data(), rows, dim_);
    EMap dwm(dw_qkv_.data(), 3 * dim_, dim_);
    dwm.noalias() += dqm.transpose() * xm;
    Eigen::Map<Eigen::VectorXf> dbm(db_qkv_.data(), 3 * dim_);
    dbm.noalias() += dqm.colwise().sum().transpose();
    ECMap wm(w_qkv_.data(), 3 * dim_, dim_);
    EMap dxm(dx.data(), rows, dim_);
    dxm.noalias() = dqm * wm;
  }
  return dx;
}

// --- TransformerBlock ------------------------------------------------------------

TransformerBlock::TransformerBlock(int64_t dim, int64_t heads, int64_t mlp_ratio, Rng& rng)
    : ln1_(std::make_unique<LayerNorm>(dim)),
      attn_(std::make_unique<MultiHeadSelfAttention>(dim, heads, rng)),
      ln2_(std::make_unique<LayerNorm>(dim)) {
  auto mlp = std::make_unique<Sequential>();
  mlp->add("fc1", std::make_unique<Linear>(dim, dim * mlp_ratio, rng));
  mlp->add("gelu", std::make_unique<Act>(Activation::gelu));
  mlp->add("fc2", std::make_unique<Linear>(dim * mlp_ratio, dim, rng));
  mlp_ = std::move(mlp);
}

void TransformerBlock::visit_params(const ParamVisitor& fn, const std::string& prefix) {
  ln1_->visit_params(fn, prefix + ".ln1");
  attn_->visit_params(fn, prefix + ".attn");
  ln2_->visit_params(fn, prefix + ".ln2");
  mlp_->visit_params(fn, prefix + ".mlp");
}

Module* TransformerBlock::find_child(const std::string& name) {
  if (name == "ln1") return ln1_.get();
  if (name == "attn") return attn_.get();
  if (name == "ln2") return ln2_.get();
  if (name == "mlp") return mlp_.get();
  return nullptr;
}

Tensor TransformerBlock::forward_impl(const Tensor& x, RunCtx& ctx) {
  Tensor a = attn_->run_forward(ln1_->run_forward(x, ctx), ctx);
  Tensor u = x;
  u.add_scaled(a, 1.0f);
  Tensor m = mlp_->run_forward(ln2_->run_forward(u, ctx), ctx);
  Tensor y = u;
  y.add_scaled(m, 1.0f);
  return y;
}

Tensor TransformerBlock::backward_impl(const Tensor& dy) {
  Tensor du = ln2_->run_backward(mlp_->run_backward(dy));
  du.add_scaled(dy, 1.0f);
  Tensor dx = ln1_->run_backward(attn_->run_backward(du));
  dx.add_scaled(du, 1.0f);
  return dx;
}

// --- Shape adapters ---------------------------------------------------------------

Tensor ImageToTokens::forward_impl(const Tensor& x, RunCtx& ctx) {
  int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor y({n, h * w, c});
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const float* plane = x.data() + (s * c + ch) * h * w;
      for (int64_t p = 0; p < h * w; ++p) y.at(s, p, ch) = plane[p];
    }
  }
  if (ctx.grad) input_shape_ = x.shape();
  return y;
}

Tensor ImageToTokens::backward_impl(const Tensor& dy) {
  Tensor dx(input_shape_);
  int64_t n = input_shape_[0], c = input_shape_[1], hw = input_shape_[2] * input_shape_[3];
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t ch = 0; ch < c; ++ch) {
      float* plane = dx.data() + (s * c + ch) * hw;
      for (int64_t p = 0; p < hw; ++p) plane[p] = dy.at(s, p, ch);
    }
  }
  return dx;
}

Tensor ColumnsToTokens::forward_impl(const Tensor& x, RunCtx& ctx) {
  int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor y({n, w, c * h});
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t col = 0; col < w; ++col) {
      for (int64_t ch = 0; ch < c; ++ch) {
        for (int64_t row = 0; row < h; ++row) {
          y.at(s, col, ch * h + row) = x.at(s, ch, row, col);
        }
      }
    }
  }
  if (ctx.grad) input_shape_ = x.shape();
  return y;
}

Tensor ColumnsToTokens::backward_impl(const Tensor& dy) {
  Tensor dx(input_shape_);
  int64_t n = input_shape_[0], c = input_shape_[1], h = input_shape_[2], w = input_shape_[3];
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t col = 0; col < w; ++col) {
      for (int64_t ch = 0; ch < c; ++ch) {
        for (int64_t row = 0; row < h; ++row) {
          dx.at(s, ch, row, col) = dy.at(s, col, ch * h + row);
        }
      }
    }
  }
  return dx;
}

ClsTokenPosEmbed::ClsTokenPosEmbed(int64_t tokens, int64_t dim, Rng& rng)
    : tokens_(tokens),
      dim_(dim),
      cls_({dim}),
      pos_({tokens + 1, dim}),
      dcls_({dim}),
      dpos_({tokens + 1, dim}) {
  for (int64_t i = 0; i < cls_.numel(); ++i) cls_[i] = 0.02f * rng.normal();
  for (int64_t i = 0; i < pos_.numel(); ++i) pos_[i] = 0.02f * rng.normal();
}

void ClsTokenPosEmbed::visit_params(const ParamVisitor& fn, const std::string& prefix) {
  fn(prefix + ".cls", cls_, dcls_);
  fn(prefix + ".pos", pos_, dpos_);
}

Tensor ClsTokenPosEmbed::forward_impl(const Tensor& x, RunCtx& ctx) {
  (void)ctx;
  if (x.rank() != 3 || x.dim(1) != tokens_ || x.dim(2) != dim_) {
    throw Error(ErrorCode::shape_error, "token count mismatch in positional embedding");
  }
  int64_t n = x.dim(0);
  Tensor y({n, tokens_ + 1, dim_});
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t j = 0; j < dim_; ++j) y.at(s, 0, j) = cls_[j] + pos_.at(0, j);
    for (int64_t t = 0; t < tokens_; ++t) {
      for (int64_t j = 0; j < dim_; ++j) y.at(s, t + 1, j) = x.at(s, t, j) + pos_.at(t + 1, j);
    }
  }
  return y;
}

Tensor ClsTokenPosEmbed::backward_impl(const Tensor& dy) {
  int64_t n = dy.dim(0);
  Tensor dx({n, tokens_, dim_});
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t j = 0; j < dim_; ++j) {
      dcls_[j] += dy.at(s, 0, j);
      dpos_.at(0, j) += dy.at(s, 0, j);
    }
    for (int64_t t = 0; t < tokens_; ++t) {
      for (int64_t j = 0; j < dim_; ++j) {
        dx.at(s, t, j) = dy.at(s, t + 1, j);
        dpos_.at(t + 1, j) += dy.at(s, t + 1, j);
      }
    }
  }
  return dx;
}

Tensor TakeToken::forward_impl(const Tensor& x, RunCtx& ctx) {
  int64_t n = x.dim(0), d = x.dim(2);
  Tensor y({n, d});
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t j = 0; j < d; ++j) y.at(s, j) = x.at(s, index_, j);
  }
  if (ctx.grad) input_shape_ = x.shape();
  return y;
}

Tensor TakeToken::backward_impl(const Tensor& dy) {
  Tensor dx(input_shape_);
  int64_t n = input_shape_[0], d = input_shape_[2];
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t j = 0; j < d; ++j) dx.at(s, index_, j) = dy.at(s, j);
  }
  return dx;
}

Tensor MeanOverTime::forward_impl(const Tensor& x, RunCtx& ctx) {
  int64_t n = x.dim(0), t = x.dim(1), d = x.dim(2);
  Tensor y({n, d});
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int64_t q = 0; q < t; ++q) acc += x.at(s, q, j);
      y.at(s, j) = static_cast<float>(acc / static_cast<double>(t));
    }
  }
  if (ctx.grad) input_shape_ = x.shape();
  return y;
}

Tensor MeanOverTime::backward_impl(const Tensor& dy) {
  Tensor dx(input_shape_);
  int64_t n = input_shape_[0], t = input_shape_[1], d = input_shape_[2];
  float inv = 1.0f / static_cast<float>(t);
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t q = 0; q < t; ++q) {
      for (int64_t j = 0; j < d; ++j) dx.at(s, q, j) = dy.at(s, j) * inv;
    }
  }
  return dx;
}

void ResidualWrap::visit_params(const ParamVisitor& fn, const std::string& prefix) {
  inner_->visit_params(fn, prefix + ".inner");
}

void ResidualWrap::visit_buffers(const BufferVisitor& fn, const std::string& prefix) {
  inner_->visit_buffers(fn, prefix + ".inner");
}

Module* ResidualWrap::find_child(const std::string& name) {
  return name == "inner" ? inner_.get() : nullptr;
}

Tensor ResidualWrap::forward_impl(const Tensor& x, RunCtx& ctx) {
  Tensor y = inner_->run_forward(x, ctx);
  y.add_scaled(x, 1.0f);
  return y;
}

Tensor ResidualWrap::backward_impl(const Tensor& dy) {
  Tensor dx = inner_->run_backward(dy);
  dx.add_scaled(dy, 1.0f);
  return dx;
}

}  // namespace mgmd::nn
