#pragma once

#include <memory>
#include <string>

#include "mgmd/nn/nn.hpp"
#include "mgmd/zoo/spec.hpp"

namespace mgmd {

struct BuiltNet {
  std::shared_ptr<nn::Sequential> net;
  std::string feature_layer;  // pre-pooling layer path (CAM / Grad-CAM default)
  bool cam_compatible = false;
};

BuiltNet build_net(const ClassifierSpec& spec, uint64_t seed);

}  // namespace mgmd
