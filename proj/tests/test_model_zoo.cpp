#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <thread>

#include "mgmd/core/error.hpp"
#include "mgmd/core/random.hpp"
#include "mgmd/zoo/classifier.hpp"

using namespace mgmd;

namespace {

Tensor random_batch(const ClassifierSpec& spec, int64_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<int64_t> shape = spec.input_shape;
  shape.insert(shape.begin(), n);
  Tensor batch(shape);
  for (int64_t i = 0; i < batch.numel(); ++i) batch[i] = rng.uniform(0.0f, 1.0f);
  return batch;
}

ClassifierSpec small_spec(Architecture arch) {
  ClassifierSpec spec;
  spec.architecture = arch;
  spec.input_shape = is_sequence_architecture(arch) ? std::vector<int64_t>{16, 32}
                                                    : std::vector<int64_t>{1, 32, 32};
  return spec;
}

const Architecture kNeuralArchs[] = {
    Architecture::tinycnn,  Architecture::resnet18, Architecture::vgg,
    Architecture::senet,    Architecture::mobilenet, Architecture::cnn_lstm,
    Architecture::vit,      Architecture::ssm_seq,  Architecture::xlstm_seq,
};

}  // namespace

TEST_CASE("every architecture emits N x 2 finite logits") {
  for (Architecture arch : kNeuralArchs) {
    Classifier model = build_classifier(small_spec(arch), 7);
    Tensor batch = random_batch(model.spec(), 3, 21);
    Tensor logits = model.logits(batch);
    REQUIRE(logits.rank() == 2);
    CHECK(logits.dim(0) == 3);
    CHECK(logits.dim(1) == 2);
    CHECK_MESSAGE(logits.all_finite(), architecture_name(arch));
  }
}

TEST_CASE("tinycnn forward on a 224x224 grid yields 2 finite logits") {
  ClassifierSpec spec;
  spec.architecture = Architecture::tinycnn;
  Classifier model = build_classifier(spec, 7);
  Tensor input = random_batch(spec, 1, 3);
  Tensor logits = model.logits(input);
  CHECK(logits.dim(0) == 1);
  CHECK(logits.dim(1) == 2);
  CHECK(logits.all_finite());
}

TEST_CASE("resnet18 has more than a million trainable parameters") {
  Classifier model = build_classifier(small_spec(Architecture::resnet18), 1);
  CHECK(nn::param_count(*model.net()) > 1000000);
}

TEST_CASE("unknown architecture name raises") {
  try {
    parse_architecture("foo");
    FAIL("expected UnknownArchitecture");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unknown_architecture);
  }
}

TEST_CASE("initialization is deterministic in (spec, seed)") {
  for (Architecture arch : {Architecture::tinycnn, Architecture::vit, Architecture::ssm_seq}) {
    Classifier a = build_classifier(small_spec(arch), 99);
    Classifier b = build_classifier(small_spec(arch), 99);
    Classifier c = build_classifier(small_spec(arch), 100);
    CHECK(a.fingerprint() == b.fingerprint());
    CHECK(a.fingerprint() != c.fingerprint());
  }
}

TEST_CASE("probability rows sum to one across the zoo") {
  // Full 1000-input sweep on the cheap reference models; a smaller sweep
  // on the heavy CNNs keeps the suite inside a CPU budget.
  for (Architecture arch : kNeuralArchs) {
    bool cheap = arch == Architecture::tinycnn || is_sequence_architecture(arch);
    int64_t n = cheap ? 1000 : (arch == Architecture::vgg ? 48 : 96);
    Classifier model = build_classifier(small_spec(arch), 5);
    Tensor batch = random_batch(model.spec(), n, 1234 + static_cast<uint64_t>(arch));
    Tensor probs = model.predict_proba(batch);
    REQUIRE(probs.dim(0) == n);
    for (int64_t i = 0; i < n; ++i) {
      CHECK(probs.at(i, 0) >= 0.0f);
      CHECK(probs.at(i, 1) >= 0.0f);
      CHECK(std::abs(probs.at(i, 0) + probs.at(i, 1) - 1.0f) < 1e-6f);
    }
  }
}

TEST_CASE("empty batch gives an empty result; same input twice is identical") {
  Classifier model = build_classifier(small_spec(Architecture::tinycnn), 2);
  CHECK(model.predict_proba(std::vector<Tensor>{}).empty());

  Tensor one = random_batch(model.spec(), 1, 77);
  Tensor p1 = model.predict_proba(one);
  Tensor p2 = model.predict_proba(one);
  CHECK(p1[0] == p2[0]);
  CHECK(p1[1] == p2[1]);
}

TEST_CASE("concurrent inference on a shared model is consistent") {
  Classifier model = build_classifier(small_spec(Architecture::tinycnn), 3);
  Tensor batch = random_batch(model.spec(), 4, 55);
  Tensor reference = model.predict_proba(batch);

  std::vector<std::thread> workers;
  std::vector<int> mismatches(4, 0);
  for (int w = 0; w < 4; ++w) {
    workers.emplace_back([&, w] {
      for (int round = 0; round < 8; ++round) {
        Tensor probs = model.predict_proba(batch);
        for (int64_t i = 0; i < probs.numel(); ++i) {
          if (probs[i] != reference[i]) mismatches[static_cast<size_t>(w)]++;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  for (int m : mismatches) CHECK(m == 0);
}

TEST_CASE("checkpoint round trip preserves fingerprint and outputs") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "mgmd_zoo_tests";
  fs::create_directories(dir);

  for (Architecture arch : {Architecture::tinycnn, Architecture::xlstm_seq}) {
    Classifier model = build_classifier(small_spec(arch), 31);
    fs::path path = dir / (std::string(architecture_name(arch)) + ".ckpt");
    model.save_checkpoint(path);
    Classifier loaded = Classifier::load_checkpoint(path);
    CHECK(loaded.fingerprint() == model.fingerprint());

    Tensor batch = random_batch(model.spec(), 2, 8);
    Tensor a = model.logits(batch);
    Tensor b = loaded.logits(batch);
    for (int64_t i = 0; i < a.numel(); ++i) CHECK(a[i] == b[i]);
  }
}

TEST_CASE("pooled kernel features: length, constant case, NaN rejection") {
  Tensor grid({224, 224}, 0.37f);
  Tensor features = pool_features_for_kernel(grid);
  CHECK(features.numel() == 4096);
  for (int64_t i = 0; i < features.numel(); ++i) {
    CHECK(features[i] == doctest::Approx(0.37f).epsilon(1e-5));
  }

  Tensor small({32, 32}, 1.0f);
  CHECK(pool_features_for_kernel(small).numel() == 4096);

  Tensor bad({8, 8}, 0.0f);
  bad[3] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(pool_features_for_kernel(bad), Error);
}

TEST_CASE("quadratic kernel separates XOR perfectly") {
  Tensor features({4, 2});
  std::vector<int> labels;
  const float pts[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  for (int i = 0; i < 4; ++i) {
    features.at(i, 0) = pts[i][0];
    features.at(i, 1) = pts[i][1];
    labels.push_back(pts[i][0] * pts[i][1] > 0 ? 1 : 0);
  }
  KernelSpec kernel;
  Classifier model = fit_kernel_classifier(features, labels, kernel);

  // Brute-force decision check on all 4 points.
  const QsvmModel& svm = model.kernel_model();
  for (int i = 0; i < 4; ++i) {
    float x[2] = {pts[i][0], pts[i][1]};
    CHECK(svm.predict(x, 2) == labels[static_cast<size_t>(i)]);
  }

  CHECK(svm.kernel().kernel == "poly");
  CHECK(svm.kernel().degree == 2);
  CHECK(svm.kernel().coef0 == 1.0);
}

TEST_CASE("kernel classifier rejects single-class input") {
  Tensor features({3, 2}, 0.5f);
  std::vector<int> labels = {1, 1, 1};
  try {
    fit_kernel_classifier(features, labels, KernelSpec{});
    FAIL("expected SingleClass");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::single_class);
  }
}

TEST_CASE("polynomial kernel symmetry and positivity") {
  Rng rng(64);
  KernelSpec spec;
  for (int round = 0; round < 200; ++round) {
    int64_t dim = 1 + static_cast<int64_t>(rng.next_below(16));
    std::vector<float> x(static_cast<size_t>(dim)), y(static_cast<size_t>(dim));
    for (auto& v : x) v = rng.uniform(-2.0f, 2.0f);
    for (auto& v : y) v = rng.uniform(-2.0f, 2.0f);
    CHECK(poly_kernel(x.data(), y.data(), dim, spec) == poly_kernel(y.data(), x.data(), dim, spec));
    CHECK(poly_kernel(x.data(), x.data(), dim, spec) >= 0.0);
  }
}

TEST_CASE("kernel model logits flow through the uniform interface") {
  Tensor features({4, 2});
  std::vector<int> labels = {1, 0, 0, 1};
  const float pts[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  for (int i = 0; i < 4; ++i) {
    features.at(i, 0) = pts[i][0];
    features.at(i, 1) = pts[i][1];
  }
  Classifier model = fit_kernel_classifier(features, labels, KernelSpec{});
  Tensor probs = model.predict_proba(features);
  REQUIRE(probs.dim(0) == 4);
  for (int64_t i = 0; i < 4; ++i) {
    CHECK(std::abs(probs.at(i, 0) + probs.at(i, 1) - 1.0f) < 1e-6f);
    int predicted = probs.at(i, 1) >= probs.at(i, 0) ? 1 : 0;
    CHECK(predicted == labels[static_cast<size_t>(i)]);
  }
}

TEST_CASE("sequence models accept frame-token input shapes") {
  ClassifierSpec spec = small_spec(Architecture::ssm_seq);
  CHECK(spec.input_shape.size() == 2);
  Classifier model = build_classifier(spec, 4);
  Tensor tokens({16, 32}, 0.25f);  // (frames, mel dims)
  Tensor logits = model.logits(tokens);
  CHECK(logits.dim(0) == 1);
  CHECK(logits.dim(1) == 2);
}
