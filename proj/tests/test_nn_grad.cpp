#include <doctest.h>

#include "mgmd/nn/nn.hpp"
#include "support/grad_check.hpp"

using namespace mgmd;
using namespace mgmd::nn;
using mgmd::testing::check_gradients;

namespace {

Tensor random_tensor(std::vector<int64_t> shape, uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

}  // namespace

TEST_CASE("linear gradients") {
  Rng rng(1);
  Linear layer(6, 4, rng);
  auto result = check_gradients(layer, random_tensor({3, 6}, 2), 10);
  CHECK(result.failures == 0);
}

TEST_CASE("activation gradients") {
  for (Activation kind : {Activation::sigmoid, Activation::tanh, Activation::gelu, Activation::silu}) {
    Act layer(kind);
    auto result = check_gradients(layer, random_tensor({4, 5}, 3), 11, false);
    CHECK_MESSAGE(result.failures == 0, result.worst);
  }
}

TEST_CASE("relu gradient away from the kink") {
  Act layer(Activation::relu);
  Tensor x = random_tensor({4, 5}, 4);
  for (int64_t i = 0; i < x.numel(); ++i) {
    if (std::abs(x[i]) < 0.05f) x[i] = 0.2f;  // keep clear of the kink
  }
  auto result = check_gradients(layer, x, 12, false);
  CHECK(result.failures == 0);
}

TEST_CASE("conv2d gradients (stride, padding)") {
  Rng rng(5);
  Conv2d layer(2, 3, 3, 2, 1, rng);
  auto result = check_gradients(layer, random_tensor({2, 2, 7, 7}, 6), 13);
  CHECK_MESSAGE(result.failures == 0, result.worst);
}

TEST_CASE("depthwise conv gradients (groups)") {
  Rng rng(7);
  Conv2d layer(4, 4, 3, 1, 1, rng, 4);
  auto result = check_gradients(layer, random_tensor({2, 4, 6, 6}, 8), 14);
  CHECK_MESSAGE(result.failures == 0, result.worst);
}

TEST_CASE("maxpool gradients") {
  MaxPool2d layer(2, 2);
  // Distinct values avoid argmax ties under perturbation.
  Tensor x({1, 2, 6, 6});
  for (int64_t i = 0; i < x.numel(); ++i) x[i] = static_cast<float>((i * 37) % 101) / 25.0f;
  auto result = check_gradients(layer, x, 15, false);
  CHECK(result.failures == 0);
}

TEST_CASE("global average pool gradients") {
  GlobalAvgPool layer;
  auto result = check_gradients(layer, random_tensor({2, 3, 4, 4}, 9), 16, false);
  CHECK(result.failures == 0);
}

TEST_CASE("batchnorm gradients, train and eval") {
  Rng rng(10);
  BatchNorm2d layer(3);
  auto train_result = check_gradients(layer, random_tensor({3, 3, 4, 4}, 11), 17, true, true);
  CHECK_MESSAGE(train_result.failures == 0, train_result.worst);

  BatchNorm2d eval_layer(3);
  auto eval_result = check_gradients(eval_layer, random_tensor({2, 3, 4, 4}, 12), 18, true, false);
  CHECK_MESSAGE(eval_result.failures == 0, eval_result.worst);
}

TEST_CASE("layernorm gradients") {
  LayerNorm layer(8);
  auto result = check_gradients(layer, random_tensor({2, 3, 8}, 13), 19);
  CHECK_MESSAGE(result.failures == 0, result.worst);
}

TEST_CASE("lstm gradients, sequence and last-step outputs") {
  Rng rng(14);
  Lstm seq_layer(5, 4, rng, true);
  auto seq_result = check_gradients(seq_layer, random_tensor({2, 6, 5}, 15), 20);
  CHECK_MESSAGE(seq_result.failures == 0, seq_result.worst);

  Rng rng2(16);
  Lstm last_layer(5, 4, rng2, false);
  auto last_result = check_gradients(last_layer, random_tensor({2, 6, 5}, 17), 21);
  CHECK_MESSAGE(last_result.failures == 0, last_result.worst);
}

TEST_CASE("gated recurrence gradients") {
  Rng rng(18);
  GatedRecurrence layer(5, 6, rng);
  auto result = check_gradients(layer, random_tensor({2, 7, 5}, 19), 22);
  CHECK_MESSAGE(result.failures == 0, result.worst);
}

TEST_CASE("multi-head attention gradients") {
  Rng rng(20);
  MultiHeadSelfAttention layer(8, 2, rng);
  auto result = check_gradients(layer, random_tensor({2, 5, 8}, 21), 23);
  CHECK_MESSAGE(result.failures == 0, result.worst);
}

TEST_CASE("transformer block gradients") {
  Rng rng(22);
  TransformerBlock layer(8, 2, 2, rng);
  auto result = check_gradients(layer, random_tensor({2, 4, 8}, 23), 24);
  CHECK_MESSAGE(result.failures == 0, result.worst);
}

TEST_CASE("residual block gradients") {
  Rng rng(24);
  ResidualBlock layer(3, 5, 2, rng);
  auto result = check_gradients(layer, random_tensor({2, 3, 6, 6}, 25), 25, true, true);
  CHECK_MESSAGE(result.failures == 0, result.worst);
}

TEST_CASE("squeeze-excite residual block gradients") {
  Rng rng(26);
  SEResidualBlock layer(3, 4, 1, 2, rng);
  auto result = check_gradients(layer, random_tensor({2, 3, 5, 5}, 27), 26, true, true);
  CHECK_MESSAGE(result.failures == 0, result.worst);
}

TEST_CASE("shape adapter gradients") {
  ImageToTokens to_tokens;
  auto r1 = check_gradients(to_tokens, random_tensor({2, 3, 4, 4}, 28), 27, false);
  CHECK(r1.failures == 0);

  ColumnsToTokens cols;
  auto r2 = check_gradients(cols, random_tensor({2, 3, 4, 5}, 29), 28, false);
  CHECK(r2.failures == 0);

  Rng rng(30);
  ClsTokenPosEmbed pos(6, 4, rng);
  auto r3 = check_gradients(pos, random_tensor({2, 6, 4}, 31), 29);
  CHECK(r3.failures == 0);

  MeanOverTime mean_pool;
  auto r4 = check_gradients(mean_pool, random_tensor({2, 5, 4}, 32), 30, false);
  CHECK(r4.failures == 0);

  TakeToken take(0);
  auto r5 = check_gradients(take, random_tensor({2, 5, 4}, 33), 31, false);
  CHECK(r5.failures == 0);
}

TEST_CASE("softmax cross entropy gradient") {
  Tensor logits = random_tensor({4, 2}, 34);
  std::vector<int> targets = {0, 1, 1, 0};
  Tensor dlogits;
  double base = softmax_cross_entropy(logits, targets, &dlogits);
  CHECK(std::isfinite(base));

  float eps = 1e-3f;
  for (int64_t i = 0; i < logits.numel(); ++i) {
    float keep = logits[i];
    logits[i] = keep + eps;
    double up = softmax_cross_entropy(logits, targets, nullptr);
    logits[i] = keep - eps;
    double down = softmax_cross_entropy(logits, targets, nullptr);
    logits[i] = keep;
    double numeric = (up - down) / (2.0 * eps);
    CHECK(std::abs(numeric - dlogits[i]) < 1e-3);
  }
}

TEST_CASE("adam moves parameters toward lower loss") {
  Rng rng(35);
  Linear layer(4, 2, rng);
  Adam adam(0.05f);
  Tensor x = random_tensor({8, 4}, 36);
  std::vector<int> targets = {0, 1, 0, 1, 0, 1, 0, 1};
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 60; ++step) {
    RunCtx ctx;
    ctx.grad = true;
    zero_grad(layer);
    Tensor logits = layer.run_forward(x, ctx);
    Tensor dlogits;
    double loss = softmax_cross_entropy(logits, targets, &dlogits);
    layer.run_backward(dlogits);
    adam.step(layer);
    if (step == 0) first = loss;
    last = loss;
  }
  CHECK(last < first);
}
