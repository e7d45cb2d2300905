#include <memory>

#include "mgmd/core/error.hpp"
#include "mgmd/nn/nn.hpp"
#include "mgmd/zoo/build.hpp"

namespace mgmd {

using nn::Act;
using nn::Activation;
using nn::BatchNorm2d;
using nn::ClsTokenPosEmbed;
using nn::ColumnsToTokens;
using nn::Conv2d;
using nn::Dropout;
using nn::GatedRecurrence;
using nn::GlobalAvgPool;
using nn::ImageToTokens;
using nn::LayerNorm;
using nn::Linear;
using nn::Lstm;
using nn::MaxPool2d;
using nn::MeanOverTime;
using nn::Module;
using nn::ModulePtr;
using nn::ResidualBlock;
using nn::ResidualWrap;
using nn::SEResidualBlock;
using nn::Sequential;
using nn::TakeToken;
using nn::TransformerBlock;

namespace {

ModulePtr conv_bn_act(int64_t in_ch, int64_t out_ch, int kernel, int stride, int pad, Rng& rng,
                      int64_t groups = 1) {
  auto seq = std::make_unique<Sequential>();
  seq->add("conv", std::make_unique<Conv2d>(in_ch, out_ch, kernel, stride, pad, rng, groups, false));
  seq->add("bn", std::make_unique<BatchNorm2d>(out_ch));
  seq->add("relu", std::make_unique<Act>(Activation::relu));
  return seq;
}

BuiltNet build_tinycnn(const ClassifierSpec& spec, Rng& rng) {
  auto channels = std::vector<int64_t>{16, 32, 64};
  auto features = std::make_unique<Sequential>();
  int64_t in_ch = 1;
  for (size_t b = 0; b < channels.size(); ++b) {
    auto block = std::make_unique<Sequential>();
    block->add("conv", std::make_unique<Conv2d>(in_ch, channels[b], 3, 1, 1, rng));
    block->add("relu", std::make_unique<Act>(Activation::relu));
    block->add("pool", std::make_unique<MaxPool2d>(2, 2));
    features->add("block" + std::to_string(b + 1), std::move(block));
    in_ch = channels[b];
  }
  auto net = std::make_shared<Sequential>();
  net->add("features", std::move(features));
  net->add("gap", std::make_unique<GlobalAvgPool>());
  net->add("head", std::make_unique<Linear>(64, spec.num_classes, rng));
  return {net, "features", true};
}

BuiltNet build_resnet18(const ClassifierSpec& spec, Rng& rng, bool squeeze_excite) {
  auto features = std::make_unique<Sequential>();
  auto stem = std::make_unique<Sequential>();
  stem->add("conv", std::make_unique<Conv2d>(1, 64, 7, 2, 3, rng, 1, false));
  stem->add("bn", std::make_unique<BatchNorm2d>(64));
  stem->add("relu", std::make_unique<Act>(Activation::relu));
  stem->add("pool", std::make_unique<MaxPool2d>(3, 2, 1));
  features->add("stem", std::move(stem));

  const int64_t widths[4] = {64, 128, 256, 512};
  int64_t in_ch = 64;
  auto reduction = static_cast<int64_t>(spec.param("se_reduction", 16));
  for (int stage = 0; stage < 4; ++stage) {
    auto layer = std::make_unique<Sequential>();
    for (int block = 0; block < 2; ++block) {
      int stride = (stage > 0 && block == 0) ? 2 : 1;
      if (squeeze_excite) {
        layer->add(std::to_string(block),
                   std::make_unique<SEResidualBlock>(in_ch, widths[stage], stride, reduction, rng));
      } else {
        layer->add(std::to_string(block),
                   std::make_unique<ResidualBlock>(in_ch, widths[stage], stride, rng));
      }
      in_ch = widths[stage];
    }
    features->add("layer" + std::to_string(stage + 1), std::move(layer));
  }

  auto net = std::make_shared<Sequential>();
  net->add("features", std::move(features));
  net->add("gap", std::make_unique<GlobalAvgPool>());
  net->add("head", std::make_unique<Linear>(512, spec.num_classes, rng));
  return {net, "features", true};
}

BuiltNet build_vgg(const ClassifierSpec& spec, Rng& rng) {
  // VGG-11 style conv stack; the MLP head keeps it outside the CAM
  // contract on purpose.
  auto features = std::make_unique<Sequential>();
  const int64_t cfg[] = {64, -1, 128, -1, 256, 256, -1, 512, 512, -1, 512, 512, -1};
  int64_t in_ch = 1;
  int idx = 0;
  for (int64_t c : cfg) {
    if (c < 0) {
      features->add("pool" + std::to_string(idx++), std::make_unique<MaxPool2d>(2, 2));
    } else {
      auto blk = std::make_unique<Sequential>();
      blk->add("conv", std::make_unique<Conv2d>(in_ch, c, 3, 1, 1, rng));
      blk->add("relu", std::make_unique<Act>(Activation::relu));
      features->add("conv" + std::to_string(idx++), std::move(blk));
      in_ch = c;
    }
  }
  auto head = std::make_unique<Sequential>();
  head->add("fc1", std::make_unique<Linear>(512, 256, rng));
  head->add("relu", std::make_unique<Act>(Activation::relu));
  head->add("drop", std::make_unique<Dropout>(0.5f));
  head->add("fc2", std::make_unique<Linear>(256, spec.num_classes, rng));

  auto net = std::make_shared<Sequential>();
  net->add("features", std::move(features));
  net->add("gap", std::make_unique<GlobalAvgPool>());
  net->add("head", std::move(head));
  return {net, "features", false};
}

BuiltNet build_mobilenet(const ClassifierSpec& spec, Rng& rng) {
  auto features = std::make_unique<Sequential>();
  features->add("stem", conv_bn_act(1, 32, 3, 2, 1, rng));
  struct Stage {
    int64_t in, out;
    int stride;
  };
  const Stage stages[] = {{32, 64, 1},   {64, 128, 2},  {128, 128, 1}, {128, 256, 2},
                          {256, 256, 1}, {256, 512, 2}, {512, 512, 1}, {512, 512, 1},
                          {512, 512, 1}, {512, 512, 1}, {512, 512, 1}, {512, 1024, 2},
                          {1024, 1024, 1}};
  int idx = 0;
  for (const auto& st : stages) {
    auto block = std::make_unique<Sequential>();
    block->add("dw", conv_bn_act(st.in, st.in, 3, st.stride, 1, rng, st.in));
    block->add("pw", conv_bn_act(st.in, st.out, 1, 1, 0, rng));
    features->add("ds" + std::to_string(idx++), std::move(block));
  }
  auto net = std::make_shared<Sequential>();
  net->add("features", std::move(features));
  net->add("gap", std::make_unique<GlobalAvgPool>());
  net->add("head", std::make_unique<Linear>(1024, spec.num_classes, rng));
  return {net, "features", true};
}

BuiltNet build_cnn_lstm(const ClassifierSpec& spec, Rng& rng) {
  int64_t side = spec.input_shape[1];
  auto features = std::make_unique<Sequential>();
  const int64_t channels[] = {16, 32, 64};
  int64_t in_ch = 1;
  for (size_t b = 0; b < 3; ++b) {
    auto block = std::make_unique<Sequential>();
    block->add("conv", std::make_unique<Conv2d>(in_ch, channels[b], 3, 1, 1, rng));
    block->add("relu", std::make_unique<Act>(Activation::relu));
    block->add("pool", std::make_unique<MaxPool2d>(2, 2));
    features->add("block" + std::to_string(b + 1), std::move(block));
    in_ch = channels[b];
  }
  int64_t feat_side = side / 8;
  auto hidden = static_cast<int64_t>(spec.param("lstm_hidden", 128));
  auto net = std::make_shared<Sequential>();
  net->add("features", std::move(features));
  net->add("to_tokens", std::make_unique<ColumnsToTokens>());
  net->add("lstm", std::make_unique<Lstm>(64 * feat_side, hidden, rng, false));
  net->add("head", std::make_unique<Linear>(hidden, spec.num_classes, rng));
  return {net, "features", false};
}

BuiltNet build_vit(const ClassifierSpec& spec, Rng& rng) {
  int64_t side = spec.input_shape[1];
  auto patch = static_cast<int64_t>(spec.param("patch", static_cast<double>(side / 8)));
  if (patch < 1 || side % patch != 0) {
    throw Error(ErrorCode::shape_error, "vit patch must divide the input side");
  }
  auto dim = static_cast<int64_t>(spec.param("dim", 64));
  auto heads = static_cast<int64_t>(spec.param("heads", 4));
  auto depth = static_cast<int64_t>(spec.param("depth", 4));
  auto mlp_ratio = static_cast<int64_t>(spec.param("mlp_ratio", 2));
  int64_t tokens = (side / patch) * (side / patch);

  auto net = std::make_shared<Sequential>();
  net->add("patch_embed",
           std::make_unique<Conv2d>(1, dim, static_cast<int>(patch), static_cast<int>(patch), 0, rng));
  net->add("to_tokens", std::make_unique<ImageToTokens>());
  net->add("pos", std::make_unique<ClsTokenPosEmbed>(tokens, dim, rng));
  auto blocks = std::make_unique<Sequential>();
  for (int64_t i = 0; i < depth; ++i) {
    blocks->add(std::to_string(i), std::make_unique<TransformerBlock>(dim, heads, mlp_ratio, rng));
  }
  net->add("blocks", std::move(blocks));
  net->add("ln", std::make_unique<LayerNorm>(dim));
  net->add("cls", std::make_unique<TakeToken>(0));
  net->add("head", std::make_unique<Linear>(dim, spec.num_classes, rng));
  return {net, "blocks", false};
}

BuiltNet build_ssm_seq(const ClassifierSpec& spec, Rng& rng) {
  int64_t dims = spec.input_shape[1];
  auto hidden = static_cast<int64_t>(spec.param("hidden", 96));
  auto net = std::make_shared<Sequential>();
  net->add("embed", std::make_unique<Linear>(dims, hidden, rng));
  net->add("block1", std::make_unique<GatedRecurrence>(hidden, hidden, rng));
  net->add("act1", std::make_unique<Act>(Activation::silu));
  net->add("block2", std::make_unique<GatedRecurrence>(hidden, hidden, rng));
  net->add("act2", std::make_unique<Act>(Activation::silu));
  net->add("pool", std::make_unique<MeanOverTime>());
  net->add("head", std::make_unique<Linear>(hidden, spec.num_classes, rng));
  return {net, "block2", false};
}

BuiltNet build_xlstm_seq(const ClassifierSpec& spec, Rng& rng) {
  int64_t dims = spec.input_shape[1];
  auto hidden = static_cast<int64_t>(spec.param("hidden", 96));
  auto net = std::make_shared<Sequential>();
  net->add("embed", std::make_unique<Linear>(dims, hidden, rng));
  for (int b = 1; b <= 2; ++b) {
    auto inner = std::make_unique<Sequential>();
    inner->add("ln", std::make_unique<LayerNorm>(hidden));
    inner->add("lstm", std::make_unique<Lstm>(hidden, hidden, rng, true));
    net->add("block" + std::to_string(b), std::make_unique<ResidualWrap>(std::move(inner)));
  }
  net->add("ln", std::make_unique<LayerNorm>(hidden));
  net->add("pool", std::make_unique<MeanOverTime>());
  net->add("head", std::make_unique<Linear>(hidden, spec.num_classes, rng));
  return {net, "block2", false};
}

}  // namespace

BuiltNet build_net(const ClassifierSpec& spec, uint64_t seed) {
  Rng rng(derive_seed(seed, std::string("init:") + architecture_name(spec.architecture)));
  switch (spec.architecture) {
    case Architecture::tinycnn: return build_tinycnn(spec, rng);
    case Architecture::resnet18: return build_resnet18(spec, rng, false);
    case Architecture::senet: return build_resnet18(spec, rng, true);
    case Architecture::vgg: return build_vgg(spec, rng);
    case Architecture::mobilenet: return build_mobilenet(spec, rng);
    case Architecture::cnn_lstm: return build_cnn_lstm(spec, rng);
    case Architecture::vit: return build_vit(spec, rng);
    case Architecture::ssm_seq: return build_ssm_seq(spec, rng);
    case Architecture::xlstm_seq: return build_xlstm_seq(spec, rng);
    case Architecture::qsvm:
      throw Error(ErrorCode::config_error, "qsvm has no neural net; use fit_kernel_classifier");
  }
  throw Error(ErrorCode::unknown_architecture, "unhandled architecture");
}

}  // namespace mgmd
