#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "mgmd/core/error.hpp"
#include "mgmd/nn/nn.hpp"

namespace mgmd::nn {

using EMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

Module* Module::find(const std::string& path) {
  if (path.empty()) return this;
  auto dot = path.find('.');
  std::string head = path.substr(0, dot);
  Module* child = find_child(head);
  if (!child) return nullptr;
  if (dot == std::string::npos) return child;
  return child->find(path.substr(dot + 1));
}

// --- Sequential --------------------------------------------------------

Tensor Sequential::forward_impl(const Tensor& x, RunCtx& ctx) {
  Tensor h = x;
  for (auto& [name, child] : children_) h = child->run_forward(h, ctx);
  return h;
}

Tensor Sequential::backward_impl(const Tensor& dy) {
  Tensor g = dy;
  for (auto it = children_.rbegin(); it != children_.rend(); ++it) g = it->second->run_backward(g);
  return g;
}

void Sequential::visit_params(const ParamVisitor& fn, const std::string& prefix) {
  for (auto& [name, child] : children_) {
    child->visit_params(fn, prefix.empty() ? name : prefix + "." + name);
  }
}

void Sequential::visit_buffers(const BufferVisitor& fn, const std::string& prefix) {
  for (auto& [name, child] : children_) {
    child->visit_buffers(fn, prefix.empty() ? name : prefix + "." + name);
  }
}

Module* Sequential::find_child(const std::string& name) {
  for (auto& [child_name, child] : children_) {
    if (child_name == name) return child.get();
  }
  return nullptr;
}

// --- Linear -------------------------------------------------------------

void kaiming_init(Tensor& weight, int64_t fan_in, Rng& rng) {
  float bound = std::sqrt(6.0f / static_cast<float>(std::max<int64_t>(fan_in, 1)));
  for (int64_t i = 0; i < weight.numel(); ++i) weight[i] = rng.uniform(-bound, bound);
}

Linear::Linear(int64_t in_features, int64_t out_features, Rng& rng, bool bias)
    : in_(in_features),
      out_(out_features),
      has_bias_(bias),
      weight_({out_features, in_features}),
      bias_({out_features}),
      dweight_({out_features, in_features}),
      dbias_({out_features}) {
  kaiming_init(weight_, in_, rng);
}

void Linear::visit_params(const ParamVisitor& fn, const std::string& prefix) {
  fn(prefix + ".weight", weight_, dweight_);
  if (has_bias_) fn(prefix + ".bias", bias_, dbias_);
}

Tensor Linear::forward_impl(const Tensor& x, RunCtx& ctx) {
  int64_t rows = x.numel() / in_;
  if (rows * in_ != x.numel()) {
    throw Error(ErrorCode::shape_error, "linear input not divisible by in_features");
  }
  Tensor y({rows, out_});
  ECMap xm(x.data(), rows, in_);
  ECMap wm(weight_.data(), out_, in_);
  EMap ym(y.data(), rows, out_);
  ym.noalias() = xm * wm.transpose();
  if (has_bias_) {
    Eigen::Map<const Eigen::VectorXf> bm(bias_.data(), out_);
    ym.rowwise() += bm.transpose();
  }
  if (ctx.grad) {
    input_shape_ = x.shape();
    cached_input_ = x.reshaped({rows, in_});
  }
  // Preserve leading dims: (N,T,D_in) -> (N,T,D_out).
  if (x.rank() == 3) return y.reshaped({x.dim(0), x.dim(1), out_});
  return y;
}

Tensor Linear::backward_impl(const Tensor& dy) {
  int64_t rows = cached_input_.dim(0);
  Tensor dx(input_shape_);
  ECMap dym(dy.data(), rows, out_);
  ECMap xm(cached_input_.data(), rows, in_);
  ECMap wm(weight_.data(), out_, in_);
  EMap dwm(dweight_.data(), out_, in_);
  EMap dxm(dx.data(), rows, in_);
  dwm.noalias() += dym.transpose() * xm;
  dxm.noalias() = dym * wm;
  if (has_bias_) {
    Eigen::Map<Eigen::VectorXf> dbm(dbias_.data(), out_);
    dbm.noalias() += dym.colwise().sum().transpose();
  }
  return dx;
}

// --- Activations ----------------------------------------------------------

namespace {
constexpr float kGeluC = 0.7978845608028654f;  // sqrt(2/pi)
}

Tensor Act::forward_impl(const Tensor& x, RunCtx& ctx) {
  Tensor y(x.shape());
  switch (kind_) {
    case Activation::relu:
      for (int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] > 0 ? x[i] : 0.0f;
      break;
    case Activation::sigmoid:
      for (int64_t i = 0; i < x.numel(); ++i) y[i] = 1.0f / (1.0f + std::exp(-x[i]));
      break;
    case Activation::tanh:
      for (int64_t i = 0; i < x.numel(); ++i) y[i] = std::tanh(x[i]);
      break;
    case Activation::gelu:
      for (int64_t i = 0; i < x.numel(); ++i) {
        float v = x[i];
        y[i] = 0.5f * v * (1.0f + std::tanh(kGeluC * (v + 0.044715f * v * v * v)));
      }
      break;
    case Activation::silu:
      for (int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] / (1.0f + std::exp(-x[i]));
      break;
  }
  if (ctx.grad) {
    cached_ = (kind_ == Activation::gelu || kind_ == Activation::silu) ? x : y;
  }
  return y;
}

Tensor Act::backward_impl(const Tensor& dy) {
  Tensor dx(dy.shape());
  switch (kind_) {
    case Activation::relu:
      for (int64_t i = 0; i < dy.numel(); ++i) dx[i] = cached_[i] > 0 ? dy[i] : 0.0f;
      break;
    case Activation::sigmoid:
      for (int64_t i = 0; i < dy.numel(); ++i) dx[i] = dy[i] * cached_[i] * (1.0f - cached_[i]);
      break;
    case Activation::tanh:
      for (int64_t i = 0; i < dy.numel(); ++i) dx[i] = dy[i] * (1.0f - cached_[i] * cached_[i]);
      break;
    case Activation::gelu:
      for (int64_t i = 0; i < dy.numel(); ++i) {
        float v = cached_[i];
        float u = kGeluC * (v + 0.044715f * v * v * v);
        float t = std::tanh(u);
        float du = kGeluC * (1.0f + 3.0f * 0.044715f * v * v);
        dx[i] = dy[i] * (0.5f * (1.0f + t) + 0.5f * v * (1.0f - t * t) * du);
      }
      break;
    case Activation::silu:
      for (int64_t i = 0; i < dy.numel(); ++i) {
        float s = 1.0f / (1.0f + std::exp(-cached_[i]));
        dx[i] = dy[i] * (s + cached_[i] * s * (1.0f - s));
      }
      break;
  }
  return dx;
}

// --- Dropout ----------------------------------------------------------------

Tensor Dropout::forward_impl(const Tensor& x, RunCtx& ctx) {
  if (!ctx.train || p_ <= 0.0f) {
    if (ctx.grad) mask_ = Tensor();
    return x;
  }
  if (!ctx.rng) throw Error(ErrorCode::config_error, "dropout in train mode needs an RNG");
  float keep = 1.0f - p_;
  Tensor y(x.shape());
  mask_ = Tensor(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) {
    float m = ctx.rng->next_float() < keep ? 1.0f / keep : 0.0f;
    mask_[i] = m;
    y[i] = x[i] * m;
  }
  return y;
}

Tensor Dropout::backward_impl(const Tensor& dy) {
  if (mask_.empty()) return dy;
  Tensor dx(dy.shape());
  for (int64_t i = 0; i < dy.numel(); ++i) dx[i] = dy[i] * mask_[i];
  return dx;
}

// --- Flatten -----------------------------------------------------------------

Tensor Flatten::forward_impl(const Tensor& x, RunCtx& ctx) {
  if (ctx.grad) input_shape_ = x.shape();
  return x.reshaped({x.dim(0), x.numel() / x.dim(0)});
}

Tensor Flatten::backward_impl(const Tensor& dy) { return dy.reshaped(input_shape_); }

// --- Loss / softmax ------------------------------------------------------------

Tensor softmax_rows(const Tensor& logits) {
  int64_t rows = logits.dim(0), cols = logits.dim(1);
  Tensor probs(logits.shape());
  for (int64_t i = 0; i < rows; ++i) {
    const float* in = logits.data() + i * cols;
    float* out = probs.data() + i * cols;
    float mx = in[0];
    for (int64_t j = 1; j < cols; ++j) mx = std::max(mx, in[j]);
    double sum = 0.0;
    for (int64_t j = 0; j < cols; ++j) sum += std::exp(static_cast<double>(in[j] - mx));
    for (int64_t j = 0; j < cols; ++j) {
      out[j] = static_cast<float>(std::exp(static_cast<double>(in[j] - mx)) / sum);
    }
  }
  return probs;
}

double softmax_cross_entropy(const Tensor& logits, const std::vector<int>& targets, Tensor* dlogits) {
  int64_t rows = logits.dim(0);
  if (static_cast<int64_t>(targets.size()) != rows) {
    throw Error(ErrorCode::length_mismatch, "targets do not match logit rows");
  }
  Tensor probs = softmax_rows(logits);
  double loss = 0.0;
  for (int64_t i = 0; i < rows; ++i) {
    float p = probs.at(i, targets[static_cast<size_t>(i)]);
    loss -= std::log(std::max(static_cast<double>(p), 1e-30));
  }
  loss /= static_cast<double>(rows);
  if (dlogits) {
    *dlogits = probs;
    for (int64_t i = 0; i < rows; ++i) {
      dlogits->at(i, targets[static_cast<size_t>(i)]) -= 1.0f;
    }
    float inv = 1.0f / static_cast<float>(rows);
    for (int64_t i = 0; i < dlogits->numel(); ++i) (*dlogits)[i] *= inv;
  }
  return loss;
}

// --- Optimizer & parameter utilities ---------------------------------------------

namespace {
void collect_params(Module& module, std::vector<std::pair<Tensor*, Tensor*>>& out) {
  module.visit_params(
      [&out](const std::string&, Tensor& value, Tensor& grad) { out.push_back({&value, &grad}); }, "");
}
}  // namespace

void Adam::step(Module& module) {
  std::vector<std::pair<Tensor*, Tensor*>> params;
  collect_params(module, params);
  if (!initialized_) {
    m_.clear();
    v_.clear();
    for (auto& [value, grad] : params) {
      m_.emplace_back(value->shape(), 0.0f);
      v_.emplace_back(value->shape(), 0.0f);
    }
    initialized_ = true;
  }
  ++t_;
  float bc1 = 1.0f - std::pow(beta1_, static_cast<float>(t_));
  float bc2 = 1.0f - std::pow(beta2_, static_cast<float>(t_));
  for (size_t p = 0; p < params.size(); ++p) {
    Tensor& value = *params[p].first;
    Tensor& grad = *params[p].second;
    Tensor& m = m_[p];
    Tensor& v = v_[p];
    for (int64_t i = 0; i < value.numel(); ++i) {
      float g = grad[i];
      m[i] = beta1_ * m[i] + (1.0f - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0f - beta2_) * g * g;
      float mhat = m[i] / bc1;
      float vhat = v[i] / bc2;
      value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void zero_grad(Module& module) {
  module.visit_params([](const std::string&, Tensor&, Tensor& grad) { grad.fill(0.0f); }, "");
}

namespace {
void for_each_state(Module& module, const std::function<void(Tensor&)>& fn) {
  module.visit_params([&fn](const std::string&, Tensor& value, Tensor&) { fn(value); }, "");
  module.visit_buffers([&fn](const std::string&, Tensor& value) { fn(value); }, "");
}
}  // namespace

std::vector<float> export_params(Module& module) {
  std::vector<float> flat;
  for_each_state(module, [&flat](Tensor& value) {
    flat.insert(flat.end(), value.data(), value.data() + value.numel());
  });
  return flat;
}

void import_params(Module& module, const std::vector<float>& flat) {
  size_t pos = 0;
  for_each_state(module, [&flat, &pos](Tensor& value) {
    if (pos + static_cast<size_t>(value.numel()) > flat.size()) {
      throw Error(ErrorCode::dimension_mismatch, "parameter blob too small");
    }
    std::copy(flat.begin() + static_cast<long>(pos),
              flat.begin() + static_cast<long>(pos) + value.numel(), value.data());
    pos += static_cast<size_t>(value.numel());
  });
  if (pos != flat.size()) {
    throw Error(ErrorCode::dimension_mismatch, "parameter blob size mismatch");
  }
}

uint64_t param_fingerprint(Module& module) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for_each_state(module, [&h](Tensor& value) {
    h = fnv1a64(value.data(), static_cast<size_t>(value.numel()) * sizeof(float), h);
  });
  return h;
}

int64_t param_count(Module& module) {
  int64_t n = 0;
  module.visit_params([&n](const std::string&, Tensor& value, Tensor&) { n += value.numel(); }, "");
  return n;
}

}  // namespace mgmd::nn
