#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mgmd {

enum class Architecture {
  tinycnn,
  resnet18,
  vgg,
  senet,
  mobilenet,
  cnn_lstm,
  vit,
  ssm_seq,
  xlstm_seq,
  qsvm,
};

const char* architecture_name(Architecture arch);

/// Throws UnknownArchitecture for names outside the roster.
Architecture parse_architecture(const std::string& name);

/// True for models that consume (frames, n_mels) token sequences instead
/// of a (1, side, side) image.
bool is_sequence_architecture(Architecture arch);

struct ClassifierSpec {
  Architecture architecture = Architecture::tinycnn;
  /// {1, side, side} for image models, {frames, dims} for sequence models.
  std::vector<int64_t> input_shape = {1, 224, 224};
  int num_classes = 2;
  std::map<std::string, double> architecture_params;

  void validate() const;
  double param(const std::string& key, double fallback) const;
};

struct KernelSpec {
  std::string kernel = "poly";
  int degree = 2;
  double coef0 = 1.0;
  double regularization = 1.0;
  /// K(x, y) = (gamma * x.y + coef0)^degree. Zero means automatic scale:
  /// 1 / (dim * mean feature variance), resolved at fit time.
  double gamma = 0.0;

  void validate() const;
};

}  // namespace mgmd
