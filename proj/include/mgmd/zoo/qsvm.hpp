#pragma once

#include <vector>

#include "mgmd/core/tensor.hpp"
#include "mgmd/zoo/spec.hpp"

namespace mgmd {

/// (x . y + coef0)^degree
double poly_kernel(const float* a, const float* b, int64_t dim, const KernelSpec& spec);

/// Per-dimension standardization fitted on the training features.
struct FeatureStandardizer {
  Tensor mean;
  Tensor stddev;

  void fit(const Tensor& rows);
  Tensor apply(const Tensor& features) const;  // rows or single vector
  bool fitted() const { return !mean.empty(); }
};

/// Area-averaged 64x64 downsample of the model-input grid, flattened to
/// 4,096 raw dims. Standardization is applied separately so the training
/// statistics can be persisted with the model.
Tensor pool_features_for_kernel(const Tensor& resized_grid);
constexpr int64_t kKernelPoolSide = 64;

/// Soft-margin kernel SVM trained with sequential minimal optimization.
class QsvmModel {
 public:
  /// labels are class indices {0,1}; both classes must be present.
  static QsvmModel fit(const Tensor& features, const std::vector<int>& labels,
                       const KernelSpec& spec);

  double decision(const float* x, int64_t dim) const;
  int predict(const float* x, int64_t dim) const;  // class index

  const KernelSpec& kernel() const { return kernel_; }
  int64_t feature_dim() const { return feature_dim_; }
  int64_t support_count() const { return support_.empty() ? 0 : support_.dim(0); }

  // Pipeline statistics persisted with the model when it runs on pooled
  // spectrogram features.
  FeatureStandardizer standardizer;

  // Serialization accessors.
  const Tensor& support_vectors() const { return support_; }
  const std::vector<float>& coefficients() const { return coef_; }
  double bias() const { return bias_; }
  void restore(KernelSpec spec, Tensor support, std::vector<float> coef, double bias);

 private:
  KernelSpec kernel_;
  Tensor support_;           // (n_sv, dim)
  std::vector<float> coef_;  // alpha_i * y_i
  double bias_ = 0.0;
  int64_t feature_dim_ = 0;
};

}  // namespace mgmd
