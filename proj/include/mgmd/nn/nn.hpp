#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mgmd/core/random.hpp"
#include "mgmd/core/tensor.hpp"

namespace mgmd::nn {

/// Per-call execution context. grad=false runs a pure forward that
/// touches no layer state, so const inference is safe to share across
/// threads; grad=true caches intermediates for a following backward and
/// must be serialized by the caller (Classifier holds the lock).
struct RunCtx {
  bool grad = false;
  bool train = false;
  Rng* rng = nullptr;
};

using ParamVisitor = std::function<void(const std::string& name, Tensor& value, Tensor& grad)>;
using BufferVisitor = std::function<void(const std::string& name, Tensor& value)>;

class Module {
 public:
  virtual ~Module() = default;

  Tensor run_forward(const Tensor& x, RunCtx& ctx) {
    Tensor y = forward_impl(x, ctx);
    if (capture_) captured_output_ = y;
    return y;
  }

  Tensor run_backward(const Tensor& dy) {
    if (capture_) captured_grad_ = dy;
    return backward_impl(dy);
  }

  virtual void visit_params(const ParamVisitor& fn, const std::string& prefix) {
    (void)fn;
    (void)prefix;
  }

  /// Non-trainable state (batch-norm running stats); serialized with
  /// checkpoints, skipped by the optimizer.
  virtual void visit_buffers(const BufferVisitor& fn, const std::string& prefix) {
    (void)fn;
    (void)prefix;
  }

  /// Dotted-path lookup into the module tree ("features.4.conv2").
  Module* find(const std::string& path);
  virtual Module* find_child(const std::string& name) {
    (void)name;
    return nullptr;
  }

  void set_capture(bool on) {
    capture_ = on;
    if (!on) {
      captured_output_ = Tensor();
      captured_grad_ = Tensor();
    }
  }
  const Tensor& captured_output() const { return captured_output_; }
  const Tensor& captured_grad() const { return captured_grad_; }

 protected:
  virtual Tensor forward_impl(const Tensor& x, RunCtx& ctx) = 0;
  virtual Tensor backward_impl(const Tensor& dy) = 0;

 private:
  bool capture_ = false;
  Tensor captured_output_;
  Tensor captured_grad_;
};

using ModulePtr = std::unique_ptr<Module>;

// ---------------------------------------------------------------------------
// Containers
// ---------------------------------------------------------------------------

class Sequential : public Module {
 public:
  Sequential() = default;

  Module* add(std::string name, ModulePtr module) {
    children_.emplace_back(std::move(name), std::move(module));
    return children_.back().second.get();
  }

  void visit_params(const ParamVisitor& fn, const std::string& prefix) override;
  void visit_buffers(const BufferVisitor& fn, const std::string& prefix) override;
  Module* find_child(const std::string& name) override;
  size_t size() const { return children_.size(); }

 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  std::vector<std::pair<std::string, ModulePtr>> children_;
};

// ---------------------------------------------------------------------------
// Dense / activation / regularization layers
// ---------------------------------------------------------------------------

class Linear : public Module {
 public:
  Linear(int64_t in_features, int64_t out_features, Rng& rng, bool bias = true);
  void visit_params(const ParamVisitor& fn, const std::string& prefix) override;

  const Tensor& weight() const { return weight_; }

 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  int64_t in_, out_;
  bool has_bias_;
  Tensor weight_, bias_, dweight_, dbias_;
  Tensor cached_input_;  // flattened to (rows, in)
  std::vector<int64_t> input_shape_;
};

enum class Activation { relu, sigmoid, tanh, gelu, silu };

class Act : public Module {
 public:
  explicit Act(Activation kind) : kind_(kind) {}

 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  Activation kind_;
  Tensor cached_;  // input for gelu/silu, output otherwise
};

class Dropout : public Module {
 public:
  explicit Dropout(float p) : p_(p) {}

 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  float p_;
  Tensor mask_;
};

class Flatten : public Module {
 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  std::vector<int64_t> input_shape_;
};

// ---------------------------------------------------------------------------
// Convolutional layers (NCHW)
// ---------------------------------------------------------------------------

class Conv2d : public Module {
 public:
  Conv2d(int64_t in_ch, int64_t out_ch, int kernel, int stride, int pad, Rng& rng,
         int64_t groups = 1, bool bias = true);
  void visit_params(const ParamVisitor& fn, const std::string& prefix) override;

  int64_t out_channels() const { return out_ch_; }

 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  int64_t in_ch_, out_ch_, groups_;
  int kernel_, stride_, pad_;
  bool has_bias_;
  Tensor weight_;  // (out_ch, in_ch/groups * k * k)
  Tensor bias_, dweight_, dbias_;
  Tensor cached_input_;
};

class MaxPool2d : public Module {
 public:
  MaxPool2d(int kernel, int stride, int pad = 0) : kernel_(kernel), stride_(stride), pad_(pad) {}

 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  int kernel_, stride_, pad_;
  std::vector<int64_t> argmax_;
  std::vector<int64_t> input_shape_;
};

/// (N,C,H,W) -> (N,C) spatial mean.
class GlobalAvgPool : public Module {
 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  std::vector<int64_t> input_shape_;
};

class BatchNorm2d : public Module {
 public:
  BatchNorm2d(int64_t channels, float momentum = 0.1f, float eps = 1e-5f);
  void visit_params(const ParamVisitor& fn, const std::string& prefix) override;
  void visit_buffers(const BufferVisitor& fn, const std::string& prefix) override;

 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  int64_t channels_;
  float momentum_, eps_;
  Tensor gamma_, beta_, dgamma_, dbeta_;
  Tensor running_mean_, running_var_;
  Tensor cached_xhat_, cached_invstd_;
  std::vector<int64_t> input_shape_;
  bool train_mode_cache_ = false;
};

// ---------------------------------------------------------------------------
// Composite CNN blocks
// ---------------------------------------------------------------------------

/// Two 3x3 conv+BN stages with identity (or 1x1 projected) shortcut.
class ResidualBlock : public Module {
 public:
  ResidualBlock(int64_t in_ch, int64_t out_ch, int stride, Rng& rng);
  void visit_params(const ParamVisitor& fn, const std::string& prefix) override;
  void visit_buffers(const BufferVisitor& fn, const std::string& prefix) override;
  Module* find_child(const std::string& name) override;

 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  ModulePtr main_;      // conv1-bn1-relu-conv2-bn2
  ModulePtr shortcut_;  // null for identity
  Tensor cached_sum_;   // pre-activation sum for the final relu
};

/// Channel attention: GAP -> bottleneck MLP -> sigmoid scale.
class SqueezeExcite : public Module {
 public:
  SqueezeExcite(int64_t channels, int64_t reduction, Rng& rng);
  void visit_params(const ParamVisitor& fn, const std::string& prefix) override;
  Module* find_child(const std::string& name) override;

 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  int64_t channels_;
  ModulePtr fc_;  // Linear-ReLU-Linear-Sigmoid over (N,C)
  Tensor cached_input_, cached_scale_;
};

/// SE-augmented residual block: scale applied to the main branch output.
class SEResidualBlock : public Module {
 public:
  SEResidualBlock(int64_t in_ch, int64_t out_ch, int stride, int64_t reduction, Rng& rng);
  void visit_params(const ParamVisitor& fn, const std::string& prefix) override;
  void visit_buffers(const BufferVisitor& fn, const std::string& prefix) override;
  Module* find_child(const std::string& name) override;

 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  ModulePtr main_;
  ModulePtr se_;
  ModulePtr shortcut_;
  Tensor cached_sum_;
};

// ---------------------------------------------------------------------------
// Sequence layers ((N,T,D) activations)
// ---------------------------------------------------------------------------

class LayerNorm : public Module {
 public:
  LayerNorm(int64_t dim, float eps = 1e-5f);
  void visit_params(const ParamVisitor& fn, const std::string& prefix) override;

 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  int64_t dim_;
  float eps_;
  Tensor gamma_, beta_, dgamma_, dbeta_;
  Tensor cached_xhat_, cached_invstd_;
  std::vector<int64_t> input_shape_;
};

class Lstm : public Module {
 public:
  Lstm(int64_t input_dim, int64_t hidden_dim, Rng& rng, bool return_sequence);
  void visit_params(const ParamVisitor& fn, const std::string& prefix) override;

 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  int64_t in_, hidden_;
  bool return_sequence_;
  Tensor w_x_, w_h_, bias_;  // (4H, D), (4H, H), (4H)
  Tensor dw_x_, dw_h_, dbias_;
  // Caches from the last grad-mode forward.
  Tensor cached_input_, cached_gates_, cached_c_, cached_h_, cached_tanh_c_;
};

/// Input-gated linear recurrence: h_t = a_t * h_{t-1} + (1 - a_t) * u_t
/// with a_t = sigmoid(W_a x_t + b_a), u_t = W_u x_t + b_u. Reference
/// stand-in for selective state-space style sequence mixing.
class GatedRecurrence : public Module {
 public:
  GatedRecurrence(int64_t input_dim, int64_t hidden_dim, Rng& rng);
  void visit_params(const ParamVisitor& fn, const std::string& prefix) override;

 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  int64_t in_, hidden_;
  Tensor w_a_, b_a_, w_u_, b_u_;
  Tensor dw_a_, db_a_, dw_u_, db_u_;
  Tensor cached_input_, cached_a_, cached_u_, cached_h_;
};

class MultiHeadSelfAttention : public Module {
 public:
  MultiHeadSelfAttention(int64_t dim, int64_t heads, Rng& rng);
  void visit_params(const ParamVisitor& fn, const std::string& prefix) override;

 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  int64_t dim_, heads_, head_dim_;
  Tensor w_qkv_, b_qkv_, w_out_, b_out_;
  Tensor dw_qkv_, db_qkv_, dw_out_, db_out_;
  Tensor cached_input_, cached_qkv_, cached_attn_, cached_merged_;
};

/// Pre-norm transformer encoder block.
class TransformerBlock : public Module {
 public:
  TransformerBlock(int64_t dim, int64_t heads, int64_t mlp_ratio, Rng& rng);
  void visit_params(const ParamVisitor& fn, const std::string& prefix) override;
  Module* find_child(const std::string& name) override;

 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  ModulePtr ln1_, attn_, ln2_, mlp_;
};

// ---------------------------------------------------------------------------
// Shape adapters
// ---------------------------------------------------------------------------

/// (N,C,H,W) -> (N, H*W, C) token sequence (patch embeddings).
class ImageToTokens : public Module {
 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  std::vector<int64_t> input_shape_;
};

/// (N,C,H,W) -> (N, W, C*H): one token per time column.
class ColumnsToTokens : public Module {
 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  std::vector<int64_t> input_shape_;
};

/// Prepends a learned class token and adds learned positions.
class ClsTokenPosEmbed : public Module {
 public:
  ClsTokenPosEmbed(int64_t tokens, int64_t dim, Rng& rng);
  void visit_params(const ParamVisitor& fn, const std::string& prefix) override;

 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  int64_t tokens_, dim_;
  Tensor cls_, pos_, dcls_, dpos_;
};

/// (N,T,D) -> (N,D), select one token.
class TakeToken : public Module {
 public:
  explicit TakeToken(int64_t index) : index_(index) {}

 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  int64_t index_;
  std::vector<int64_t> input_shape_;
};

/// (N,T,D) -> (N,D) temporal mean.
class MeanOverTime : public Module {
 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  std::vector<int64_t> input_shape_;
};

/// y = x + inner(x); dims must match.
class ResidualWrap : public Module {
 public:
  explicit ResidualWrap(ModulePtr inner) : inner_(std::move(inner)) {}
  void visit_params(const ParamVisitor& fn, const std::string& prefix) override;
  void visit_buffers(const BufferVisitor& fn, const std::string& prefix) override;
  Module* find_child(const std::string& name) override;

 protected:
  Tensor forward_impl(const Tensor& x, RunCtx& ctx) override;
  Tensor backward_impl(const Tensor& dy) override;

 private:
  ModulePtr inner_;
};

// ---------------------------------------------------------------------------
// Loss and optimizer
// ---------------------------------------------------------------------------

/// Row-wise softmax with the usual max-shift; exact unit row sums.
Tensor softmax_rows(const Tensor& logits);

/// Mean cross-entropy over the batch; fills dlogits with the gradient.
double softmax_cross_entropy(const Tensor& logits, const std::vector<int>& targets, Tensor* dlogits);

class Adam {
 public:
  Adam(float lr, float beta1 = 0.9f, float beta2 = 0.999f, float eps = 1e-8f)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// One update over the module's parameters; grads are consumed as-is.
  void step(Module& module);

 private:
  float lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<Tensor> m_, v_;
  bool initialized_ = false;
};

void zero_grad(Module& module);

/// Flat copy of all parameters and buffers (snapshot / restore, IO).
std::vector<float> export_params(Module& module);
void import_params(Module& module, const std::vector<float>& flat);

/// FNV-1a over parameter and buffer bytes in registration order.
uint64_t param_fingerprint(Module& module);

/// Trainable parameter count (buffers excluded).
int64_t param_count(Module& module);

// Initialization helpers (Kaiming-uniform fan-in).
void kaiming_init(Tensor& weight, int64_t fan_in, Rng& rng);

}  // namespace mgmd::nn
