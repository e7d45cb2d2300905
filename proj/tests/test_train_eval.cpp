#include <doctest.h>

#include "mgmd/core/error.hpp"
#include "mgmd/train/trainer.hpp"
#include "support/synthetic.hpp"

using namespace mgmd;
using mgmd::testing::make_planted_dataset;
using mgmd::testing::PlantedConfig;
using mgmd::testing::PlantedDataset;

namespace {

ClassifierSpec tinycnn_spec(int64_t side) {
  ClassifierSpec spec;
  spec.architecture = Architecture::tinycnn;
  spec.input_shape = {1, side, side};
  return spec;
}

TrainConfig quick_config(int epochs, int64_t seed) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("planted-feature training reaches the oracle-certified signal") {
  PlantedConfig planted;
  PlantedDataset data = make_planted_dataset(planted);
  // The pixel-threshold oracle certifies the feature is linearly separable.
  CHECK(planted_pixel_oracle_accuracy(data, data.val_ids) == 1.0);

  Classifier model = build_classifier(tinycnn_spec(planted.side), 17);
  TrainConfig cfg = quick_config(10, 17);
  TrainingLog log = train_classifier(model, data.train_ids, data.val_ids, data.source, cfg);

  REQUIRE(log.epochs.size() == 10);  // exactly cfg.epochs records
  CHECK(log.epochs.back().epoch == 10);
  CHECK(log.wall_time_s > 0.0);
  CHECK(log.final_fingerprint == model.fingerprint());

  EvalResult result = evaluate_ids(model, data.val_ids, data.source);
  CHECK(result.metrics.accuracy >= 0.95);
}

TEST_CASE("empty split and single-class split raise") {
  PlantedConfig planted;
  planted.n_train = 8;
  planted.n_val = 4;
  PlantedDataset data = make_planted_dataset(planted);
  Classifier model = build_classifier(tinycnn_spec(planted.side), 1);

  CHECK_THROWS_AS(
      train_classifier(model, {}, data.val_ids, data.source, quick_config(1, 1)), Error);

  // Even-indexed planted ids are all machine: a single-class train split.
  std::vector<std::string> machine_only;
  for (size_t i = 0; i < data.train_ids.size(); i += 2) machine_only.push_back(data.train_ids[i]);
  try {
    train_classifier(model, machine_only, data.val_ids, data.source, quick_config(1, 1));
    FAIL("expected SingleClass");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::single_class);
  }
}

TEST_CASE("training is deterministic in the seed") {
  PlantedConfig planted;
  planted.n_train = 64;
  planted.n_val = 16;
  PlantedDataset data = make_planted_dataset(planted);

  auto run = [&](int64_t seed) {
    Classifier model = build_classifier(tinycnn_spec(planted.side), 5);
    TrainingLog log = train_classifier(model, data.train_ids, data.val_ids, data.source,
                                       quick_config(2, seed));
    return log.final_fingerprint;
  };
  CHECK(run(11) == run(11));
  CHECK(run(11) != run(12));
}

TEST_CASE("an absurd learning rate diverges loudly") {
  PlantedConfig planted;
  planted.n_train = 32;
  planted.n_val = 8;
  PlantedDataset data = make_planted_dataset(planted);
  Classifier model = build_classifier(tinycnn_spec(planted.side), 5);
  TrainConfig cfg = quick_config(3, 5);
  cfg.learning_rate = 1e22;
  try {
    train_classifier(model, data.train_ids, data.val_ids, data.source, cfg);
    FAIL("expected DivergenceError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::divergence);
  }
}

TEST_CASE("out-of-domain eval equals in-domain on the same set and drops on a shifted domain") {
  PlantedConfig planted;
  planted.n_train = 200;
  planted.n_val = 60;
  PlantedDataset data = make_planted_dataset(planted);
  Classifier model = build_classifier(tinycnn_spec(planted.side), 23);
  train_classifier(model, data.train_ids, data.val_ids, data.source, quick_config(6, 23));

  EvalResult in_domain = evaluate_ids(model, data.val_ids, data.source);

  std::vector<NamedEvalSet> sets = {{"same_domain", data.val_ids, &data.source}};
  // Shifted domain: much hotter background noise, same planted patch.
  PlantedConfig shifted = planted;
  shifted.noise_level = 0.95f;
  shifted.seed = 999;
  PlantedDataset shifted_data = make_planted_dataset(shifted);
  CHECK(planted_pixel_oracle_accuracy(shifted_data, shifted_data.val_ids) == 1.0);
  sets.push_back({"shifted_domain", shifted_data.val_ids, &shifted_data.source});

  auto rows = run_out_of_domain_eval(model, sets);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].name == "same_domain");
  // Consistency: the same pipeline gives the same numbers, exactly.
  CHECK(rows[0].metrics.accuracy == in_domain.metrics.accuracy);
  CHECK(rows[0].metrics.f1 == in_domain.metrics.f1);
  CHECK(rows[0].metrics.confusion.tp == in_domain.metrics.confusion.tp);
  // The shifted domain is strictly harder for the trained model even
  // though the oracle still separates it.
  CHECK(rows[1].metrics.accuracy < rows[0].metrics.accuracy);
}

TEST_CASE("qsvm trains through the same entry point with an explicit early exit") {
  PlantedConfig planted;
  planted.n_train = 40;
  planted.n_val = 12;
  PlantedDataset data = make_planted_dataset(planted);

  ClassifierSpec spec;
  spec.architecture = Architecture::qsvm;
  spec.input_shape = {1, planted.side, planted.side};
  Classifier model = build_classifier(spec, 1);
  TrainingLog log = train_classifier(model, data.train_ids, data.val_ids, data.source,
                                     quick_config(10, 1));
  CHECK(log.epochs.size() == 1);
  CHECK_FALSE(log.early_exit.empty());
  EvalResult result = evaluate_ids(model, data.val_ids, data.source);
  CHECK(result.metrics.accuracy >= 0.9);  // planted feature is easy for the kernel too
}

TEST_CASE("train config validation") {
  TrainConfig bad;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}
