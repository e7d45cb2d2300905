#include <cmath>

#include <Eigen/Dense>

#include "mgmd/core/error.hpp"
#include "mgmd/nn/nn.hpp"

namespace mgmd::nn {

using EMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

// --- Lstm -------------------------------------------------------------------
// Gate order in the stacked 4H dimension: input, forget, cell, output.

Lstm::Lstm(int64_t input_dim, int64_t hidden_dim, Rng& rng, bool return_sequence)
    : in_(input_dim),
      hidden_(hidden_dim),
      return_sequence_(return_sequence),
      w_x_({4 * hidden_dim, input_dim}),
      w_h_({4 * hidden_dim, hidden_dim}),
      bias_({4 * hidden_dim}, 0.0f),
      dw_x_({4 * hidden_dim, input_dim}),
      dw_h_({4 * hidden_dim, hidden_dim}),
      dbias_({4 * hidden_dim}) {
  kaiming_init(w_x_, input_dim, rng);
  kaiming_init(w_h_, hidden_dim, rng);
  // Forget gate bias starts at 1 so early training does not wash out state.
  for (int64_t i = hidden_; i < 2 * hidden_; ++i) bias_[i] = 1.0f;
}

void Lstm::visit_params(const ParamVisitor& fn, const std::string& prefix) {
  fn(prefix + ".w_x", w_x_, dw_x_);
  fn(prefix + ".w_h", w_h_, dw_h_);
  fn(prefix + ".bias", bias_, dbias_);
}

Tensor Lstm::forward_impl(const Tensor& x, RunCtx& ctx) {
  if (x.rank() != 3 || x.dim(2) != in_) {
    throw Error(ErrorCode::shape_error, "lstm expects (N,T," + std::to_string(in_) + ")");
  }
  int64_t n = x.dim(0), t_len = x.dim(1);
  int64_t h4 = 4 * hidden_;

  // Input projection for all timesteps at once.
  Tensor zx({n * t_len, h4});
  {
    ECMap xm(x.data(), n * t_len, in_);
    ECMap wm(w_x_.data(), h4, in_);
    EMap zm(zx.data(), n * t_len, h4);
    zm.noalias() = xm * wm.transpose();
    Eigen::Map<const Eigen::VectorXf> bm(bias_.data(), h4);
    zm.rowwise() += bm.transpose();
  }

  Tensor gates({n, t_len, h4});
  Tensor cs({n, t_len, hidden_});
  Tensor hs({n, t_len, hidden_});
  Tensor tanh_cs({n, t_len, hidden_});

  Tensor h_prev({n, hidden_}, 0.0f);
  Tensor c_prev({n, hidden_}, 0.0f);
  Tensor z({n, h4});
  ECMap whm(w_h_.data(), h4, hidden_);
  for (int64_t t = 0; t < t_len; ++t) {
    // z = zx[:, t, :] + h_prev * W_h^T
    for (int64_t s = 0; s < n; ++s) {
      const float* src = zx.data() + (s * t_len + t) * h4;
      std::copy(src, src + h4, z.data() + s * h4);
    }
    {
      ECMap hm(h_prev.data(), n, hidden_);
      EMap zm(z.data(), n, h4);
      zm.noalias() += hm * whm.transpose();
    }
    for (int64_t s = 0; s < n; ++s) {
      const float* zp = z.data() + s * h4;
      float* gate = gates.data() + (s * t_len + t) * h4;
      float* c_out = cs.data() + (s * t_len + t) * hidden_;
      float* h_out = hs.data() + (s * t_len + t) * hidden_;
      float* tc_out = tanh_cs.data() + (s * t_len + t) * hidden_;
      float* cp = c_prev.data() + s * hidden_;
      float* hp = h_prev.data() + s * hidden_;
      for (int64_t j = 0; j < hidden_; ++j) {
        float gi = 1.0f / (1.0f + std::exp(-zp[j]));
        float gf = 1.0f / (1.0f + std::exp(-zp[hidden_ + j]));
        float gg = std::tanh(zp[2 * hidden_ + j]);
        float go = 1.0f / (1.0f + std::exp(-zp[3 * hidden_ + j]));
        float c = gf * cp[j] + gi * gg;
        float tc = std::tanh(c);
        float h = go * tc;
        gate[j] = gi;
        gate[hidden_ + j] = gf;
        gate[2 * hidden_ + j] = gg;
        gate[3 * hidden_ + j] = go;
        c_out[j] = c;
        tc_out[j] = tc;
        h_out[j] = h;
        cp[j] = c;
        hp[j] = h;
      }
    }
  }

  if (ctx.grad) {
    cached_input_ = x;
    cached_gates_ = gates;
    cached_c_ = cs;
    cached_h_ = hs;
    cached_tanh_c_ = tanh_cs;
  }

  if (return_sequence_) return hs;
  Tensor last({n, hidden_});
  for (int64_t s = 0; s < n; ++s) {
    const float* src = hs.data() + (s * t_len + (t_len - 1)) * hidden_;
    std::copy(src, src + hidden_, last.data() + s * hidden_);
  }
  return last;
}

Tensor Lstm::backward_impl(const Tensor& dy) {
  const Tensor& x = cached_input_;
  int64_t n = x.dim(0), t_len = x.dim(1);
  int64_t h4 = 4 * hidden_;

  Tensor dz_all({n, t_len, h4});
  Tensor dh_carry({n, hidden_}, 0.0f);
  Tensor dc_carry({n, hidden_}, 0.0f);
  Tensor dz({n, h4});
  ECMap whm(w_h_.data(), h4, hidden_);

  for (int64_t t = t_len - 1; t >= 0; --t) {
    for (int64_t s = 0; s < n; ++s) {
      const float* gate = cached_gates_.data() + (s * t_len + t) * h4;
      const float* tc = cached_tanh_c_.data() + (s * t_len + t) * hidden_;
      const float* c_prev =
          t > 0 ? cached_c_.data() + (s * t_len + t - 1) * hidden_ : nullptr;
      float* dzp = dz.data() + s * h4;
      float* dhc = dh_carry.data() + s * hidden_;
      float* dcc = dc_carry.data() + s * hidden_;
      for (int64_t j = 0; j < hidden_; ++j) {
        float dh = dhc[j];
        if (return_sequence_) {
          dh += dy.at(s, t, j);
        } else if (t == t_len - 1) {
          dh += dy.at(s, j);
        }
        float gi = gate[j], gf = gate[hidden_ + j], gg = gate[2 * hidden_ + j],
              go = gate[3 * hidden_ + j];
        float dout = dh * tc[j];
        float dc = dcc[j] + dh * go * (1.0f - tc[j] * tc[j]);
        float cprev = c_prev ? c_prev[j] : 0.0f;
        float di = dc * gg;
        float dg = dc * gi;
        float df = dc * cprev;
        dcc[j] = dc * gf;
        dzp[j] = di * gi * (1.0f - gi);
        dzp[hidden_ + j] = df * gf * (1.0f - gf);
        dzp[2 * hidden_ + j] = dg * (1.0f - gg * gg);
        dzp[3 * hidden_ + j] = dout * go * (1.0f - go);
      }
    }
    // dh_prev = dz * W_h
    {
      ECMap dzm(dz.data(), n, h4);
      EMap dhm(dh_carry.data(), n, hidden_);
      dhm.noalias() = dzm * whm;
    }
    for (int64_t s = 0; s < n; ++s) {
      std::copy(dz.data() + s * h4, dz.data() + (s + 1) * h4,
                dz_all.data() + (s * t_len + t) * h4);
    }
    // dW_h += dz^T * h_prev
    if (t > 0) {
      Tensor h_prev({n, hidden_});
      for (int64_t s = 0; s < n; ++s) {
        const float* src = cached_h_.data() + (s * t_len + t - 1) * hidden_;
        std::copy(src, src + hidden_, h_prev.data() + s * hidden_);
      }
      ECMap dzm(dz.data(), n, h4);
      ECMap hm(h_prev.data(), n, hidden_);
      EMap dwhm(dw_h_.data(), h4, hidden_);
      dwhm.noalias() += dzm.transpose() * hm;
    }
  }

  // Flat-projection gradients.
  Tensor dx(x.shape());
  {
    ECMap dzm(dz_all.data(), n * t_len, h4);
    ECMap xm(x.data(), n * t_len, in_);
    EMap dwxm(dw_x_.data(), h4, in_);
    dwxm.noalias() += dzm.transpose() * xm;
    ECMap wxm(w_x_.data(), h4, in_);
    EMap dxm(dx.data(), n * t_len, in_);
    dxm.noalias() = dzm * wxm;
    Eigen::Map<Eigen::VectorXf> dbm(dbias_.data(), h4);
    dbm.noalias() += dzm.colwise().sum().transpose();
  }
  return dx;
}

// --- GatedRecurrence ----------------------------------------------------------

GatedRecurrence::GatedRecurrence(int64_t input_dim, int64_t hidden_dim, Rng& rng)
    : in_(input_dim),
      hidden_(hidden_dim),
      w_a_({hidden_dim, input_dim}),
      b_a_({hidden_dim}, 0.0f),
      w_u_({hidden_dim, input_dim}),
      b_u_({hidden_dim}, 0.0f),
      dw_a_({hidden_dim, input_dim}),
      db_a_({hidden_dim}),
      dw_u_({hidden_dim, input_dim}),
      db_u_({hidden_dim}) {
  kaiming_init(w_a_, input_dim, rng);
  kaiming_init(w_u_, input_dim, rng);
}

void GatedRecurrence::visit_params(const ParamVisitor& fn, const std::string& prefix) {
  fn(prefix + ".w_a", w_a_, dw_a_);
  fn(prefix + ".b_a", b_a_, db_a_);
  fn(prefix + ".w_u", w_u_, dw_u_);
  fn(prefix + ".b_u", b_u_, db_u_);
}

Tensor GatedRecurrence::forward_impl(const Tensor& x, RunCtx& ctx) {
  if (x.rank() != 3 || x.dim(2) != in_) {
    throw Error(ErrorCode::shape_error, "gated recurrence expects (N,T,D)");
  }
  int64_t n = x.dim(0), t_len = x.dim(1);
  Tensor a({n, t_len, hidden_});
  Tensor u({n, t_len, hidden_});
  {
    ECMap xm(x.data(), n * t_len, in_);
    ECMap wam(w_a_.data(), hidden_, in_);
    ECMap wum(w_u_.data(), hidden_, in_);
    EMap am(a.data(), n * t_len, hidden_);
    EMap um(u.data(), n * t_len, hidden_);
    am.noalias() = xm * wam.transpose();
    um.noalias() = xm * wum.transpose();
    Eigen::Map<const Eigen::VectorXf> bam(b_a_.data(), hidden_);
    Eigen::Map<const Eigen::VectorXf> bum(b_u_.data(), hidden_);
    am.rowwise() += bam.transpose();
    um.rowwise() += bum.transpose();
  }
  for (int64_t i = 0; i < a.numel(); ++i) a[i] = 1.0f / (1.0f + std::exp(-a[i]));

  Tensor h({n, t_len, hidden_});
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t t = 0; t < t_len; ++t) {
      for (int64_t j = 0; j < hidden_; ++j) {
        float prev = t > 0 ? h.at(s, t - 1, j) : 0.0f;
        float at = a.at(s, t, j);
        h.at(s, t, j) = at * prev + (1.0f - at) * u.at(s, t, j);
      }
    }
  }
  if (ctx.grad) {
    cached_input_ = x;
    cached_a_ = a;
    cached_u_ = u;
    cached_h_ = h;
  }
  return h;
}

Tensor GatedRecurrence::backward_impl(const Tensor& dy) {
  const Tensor& x = cached_input_;
  int64_t n = x.dim(0), t_len = x.dim(1);

  Tensor dza({n, t_len, hidden_});
  Tensor du({n, t_len, hidden_});
  std::vector<float> carry(static_cast<size_t>(n * hidden_), 0.0f);
  for (int64_t t = t_len - 1; t >= 0; --t) {
    for (int64_t s = 0; s < n; ++s) {
      for (int64_t j = 0; j < hidden_; ++j) {
        float g = dy.at(s, t, j) + carry[static_cast<size_t>(s * hidden_ + j)];
        float at = cached_a_.at(s, t, j);
        float prev = t > 0 ? cached_h_.at(s, t - 1, j) : 0.0f;
        float da = g * (prev - cached_u_.at(s, t, j));
        du.at(s, t, j) = g * (1.0f - at);
        carry[static_cast<size_t>(s * hidden_ + j)] = g * at;
        dza.at(s, t, j) = da * at * (1.0f - at);
      }
    }
  }

  Tensor dx(x.shape());
  {
    ECMap dzam(dza.data(), n * t_len, hidden_);
    ECMap dum(du.data(), n * t_len, hidden_);
    ECMap xm(x.data(), n * t_len, in_);
    EMap dwam(dw_a_.data(), hidden_, in_);
    EMap dwum(dw_u_.data(), hidden_, in_);
    dwam.noalias() += dzam.transpose() * xm;
    dwum.noalias() += dum.transpose() * xm;
    Eigen::Map<Eigen::VectorXf> dbam(db_a_.data(), hidden_);
    Eigen::Map<Eigen::VectorXf> dbum(db_u_.data(), hidden_);
    dbam.noalias() += dzam.colwise().sum().transpose();
    dbum.noalias() += dum.colwise().sum().transpose();
    ECMap wam(w_a_.data(), hidden_, in_);
    ECMap wum(w_u_.data(), hidden_, in_);
    EMap dxm(dx.data(), n * t_len, in_);
    dxm.noalias() = dzam * wam + dum * wum;
  }
  return dx;
}

}  // namespace mgmd::nn
