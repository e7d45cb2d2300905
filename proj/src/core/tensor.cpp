#include "mgmd/core/tensor.hpp"

#include <cmath>

#include "mgmd/core/error.hpp"

namespace mgmd {

namespace {
int64_t shape_numel(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return shape.empty() ? 0 : n;
}
}  // namespace

Tensor::Tensor(std::vector<int64_t> shape)
    : shape_(std::move(shape)), numel_(shape_numel(shape_)) {
  data_.assign(static_cast<size_t>(numel_), 0.0f);
}

Tensor::Tensor(std::vector<int64_t> shape, float fill)
    : shape_(std::move(shape)), numel_(shape_numel(shape_)) {
  data_.assign(static_cast<size_t>(numel_), fill);
}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)), numel_(shape_numel(shape_)) {
  if (static_cast<int64_t>(data_.size()) != numel_) {
    throw Error(ErrorCode::shape_error, "tensor data size does not match shape");
  }
}

Tensor Tensor::reshaped(std::vector<int64_t> shape) const {
  if (shape_numel(shape) != numel_) {
    throw Error(ErrorCode::shape_error, "reshape changes element count");
  }
  Tensor out;
  out.shape_ = std::move(shape);
  out.data_ = data_;
  out.numel_ = numel_;
  return out;
}

bool Tensor::all_finite() const {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::fill(float v) { data_.assign(data_.size(), v); }

void Tensor::add_scaled(const Tensor& other, float scale) {
  if (!same_shape(other)) {
    throw Error(ErrorCode::shape_error, "add_scaled shape mismatch");
  }
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += scale * other.data_[i];
}

}  // namespace mgmd
