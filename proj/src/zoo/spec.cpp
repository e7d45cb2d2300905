#include "mgmd/zoo/spec.hpp"

#include "mgmd/core/error.hpp"

namespace mgmd {

namespace {
const std::pair<Architecture, const char*> kArchNames[] = {
    {Architecture::tinycnn, "tinycnn"},   {Architecture::resnet18, "resnet18"},
    {Architecture::vgg, "vgg"},           {Architecture::senet, "senet"},
    {Architecture::mobilenet, "mobilenet"}, {Architecture::cnn_lstm, "cnn_lstm"},
    {Architecture::vit, "vit"},           {Architecture::ssm_seq, "ssm_seq"},
    {Architecture::xlstm_seq, "xlstm_seq"}, {Architecture::qsvm, "qsvm"},
};
}

const char* architecture_name(Architecture arch) {
  for (const auto& [a, name] : kArchNames) {
    if (a == arch) return name;
  }
  return "unknown";
}

Architecture parse_architecture(const std::string& name) {
  for (const auto& [a, arch_name] : kArchNames) {
    if (name == arch_name) return a;
  }
  throw Error(ErrorCode::unknown_architecture, "no architecture named '" + name + "'");
}

bool is_sequence_architecture(Architecture arch) {
  return arch == Architecture::ssm_seq || arch == Architecture::xlstm_seq;
}

void ClassifierSpec::validate() const {
  if (num_classes != 2) {
    throw Error(ErrorCode::config_error, "binary task: num_classes must be 2");
  }
  if (is_sequence_architecture(architecture)) {
    if (input_shape.size() != 2 || input_shape[0] < 1 || input_shape[1] < 1) {
      throw Error(ErrorCode::shape_error, "sequence models need input_shape (frames, dims)");
    }
  } else {
    if (input_shape.size() != 3 || input_shape[0] != 1 || input_shape[1] < 8 ||
        input_shape[1] != input_shape[2]) {
      throw Error(ErrorCode::shape_error, "image models need input_shape (1, side, side), side >= 8");
    }
  }
}

double ClassifierSpec::param(const std::string& key, double fallback) const {
  auto it = architecture_params.find(key);
  return it == architecture_params.end() ? fallback : it->second;
}

void KernelSpec::validate() const {
  if (kernel != "poly") throw Error(ErrorCode::config_error, "only the poly kernel is supported");
  if (degree < 1) throw Error(ErrorCode::config_error, "kernel degree must be >= 1");
  if (regularization <= 0) throw Error(ErrorCode::config_error, "regularization must be positive");
  if (gamma < 0) throw Error(ErrorCode::config_error, "gamma must be non-negative");
}

}  // namespace mgmd
