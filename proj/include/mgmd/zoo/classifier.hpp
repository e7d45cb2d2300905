#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "mgmd/core/tensor.hpp"
#include "mgmd/nn/nn.hpp"
#include "mgmd/zoo/qsvm.hpp"
#include "mgmd/zoo/spec.hpp"

namespace mgmd {

/// Activations and incoming gradient captured at one layer during a
/// single forward/backward pass (Grad-CAM input).
struct LayerCapture {
  Tensor activations;
  Tensor grad;
};

/// Uniform binary classifier over the zoo. Neural architectures carry an
/// nn::Module tree; qsvm carries a kernel model over pooled features.
/// Inference (`logits`, `predict_proba`) is const and thread-safe; the
/// gradient interface is serialized through an internal mutex.
class Classifier {
 public:
  Classifier() = default;
  Classifier(const Classifier& other)
      : spec_(other.spec_),
        seed_(other.seed_),
        net_(other.net_),
        svm_(other.svm_),
        feature_layer_(other.feature_layer_),
        cam_compatible_(other.cam_compatible_) {}
  Classifier& operator=(const Classifier& other) {
    if (this != &other) {
      spec_ = other.spec_;
      seed_ = other.seed_;
      net_ = other.net_;
      svm_ = other.svm_;
      feature_layer_ = other.feature_layer_;
      cam_compatible_ = other.cam_compatible_;
    }
    return *this;
  }
  Classifier(Classifier&& other) noexcept
      : spec_(std::move(other.spec_)),
        seed_(other.seed_),
        net_(std::move(other.net_)),
        svm_(std::move(other.svm_)),
        feature_layer_(std::move(other.feature_layer_)),
        cam_compatible_(other.cam_compatible_) {}
  Classifier& operator=(Classifier&& other) noexcept {
    spec_ = std::move(other.spec_);
    seed_ = other.seed_;
    net_ = std::move(other.net_);
    svm_ = std::move(other.svm_);
    feature_layer_ = std::move(other.feature_layer_);
    cam_compatible_ = other.cam_compatible_;
    return *this;
  }

  const ClassifierSpec& spec() const { return spec_; }
  uint64_t seed() const { return seed_; }
  bool is_kernel_model() const { return spec_.architecture == Architecture::qsvm; }

  /// Batched logits: input (N,1,S,S) for image models, (N,T,D) for
  /// sequence models. A single unbatched input is auto-batched.
  Tensor logits(const Tensor& batch) const;

  /// N x num_classes probability rows (softmax over logits).
  Tensor predict_proba(const Tensor& batch) const;
  std::vector<std::vector<double>> predict_proba(const std::vector<Tensor>& inputs) const;

  int predict_class(const Tensor& input) const;

  /// Scalar class score (logit) of one sample.
  double class_score(const Tensor& input, int target_class) const;

  /// d score / d input for one sample; throws NonDifferentiableModel for
  /// the kernel model.
  Tensor input_gradient(const Tensor& input, int target_class) const;

  /// Forward + backward with activation/gradient capture at `layer_path`
  /// (dotted module path, e.g. "features.layer4.1").
  LayerCapture capture_layer(const Tensor& input, const std::string& layer_path,
                             int target_class) const;

  /// Activations at the pre-pooling feature layer (no gradients).
  Tensor feature_maps(const Tensor& input) const;

  // CAM support: true when the net ends in GAP followed by one linear head.
  bool cam_compatible() const { return cam_compatible_; }
  const std::string& feature_layer() const { return feature_layer_; }
  /// Head weight matrix (num_classes, channels); UnsupportedArchitecture
  /// when not CAM-compatible.
  Tensor cam_head_weights() const;

  std::string fingerprint() const;

  nn::Module* net() { return net_.get(); }
  const nn::Module* net() const { return net_.get(); }
  QsvmModel& kernel_model();
  const QsvmModel& kernel_model() const;
  void set_kernel_model(QsvmModel model);

  void save_checkpoint(const std::filesystem::path& path) const;
  static Classifier load_checkpoint(const std::filesystem::path& path);

  /// Takes the gradient-path lock for a caller-managed grad-mode pass.
  std::unique_lock<std::mutex> grad_lock() const { return std::unique_lock(grad_mutex_); }

  friend Classifier build_classifier(const ClassifierSpec& spec, uint64_t seed);
  friend Classifier fit_kernel_classifier(const Tensor& features, const std::vector<int>& labels,
                                          const KernelSpec& kernel);

 private:
  Tensor prepare_batch(const Tensor& batch) const;

  ClassifierSpec spec_;
  uint64_t seed_ = 0;
  std::shared_ptr<nn::Module> net_;  // shared: Classifier is copyable
  std::shared_ptr<QsvmModel> svm_;
  std::string feature_layer_;
  bool cam_compatible_ = false;
  mutable std::mutex grad_mutex_;
};

/// Deterministic model construction: same (spec, seed) gives the same
/// initial parameters.
Classifier build_classifier(const ClassifierSpec& spec, uint64_t seed);

/// Fits the quadratic-kernel SVM on prepared feature rows. The returned
/// Classifier has architecture qsvm and no standardizer (callers fit one
/// when running on pooled spectrogram features).
Classifier fit_kernel_classifier(const Tensor& features, const std::vector<int>& labels,
                                 const KernelSpec& kernel);

}  // namespace mgmd
