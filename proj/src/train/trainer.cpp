#include "mgmd/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mgmd/core/error.hpp"
#include "mgmd/core/random.hpp"
#include "mgmd/data/manifest.hpp"

namespace mgmd {

void TrainConfig::validate() const {
  if (batch_size < 1 || epochs < 1 || learning_rate <= 0.0) {
    throw Error(ErrorCode::config_error, "train config fields must be positive");
  }
}

Tensor model_input_from_grid(const ClassifierSpec& spec, const Tensor& grid) {
  if (grid.rank() != 2) throw Error(ErrorCode::shape_error, "expected a 2-D model-input grid");
  int64_t h = grid.dim(0), w = grid.dim(1);
  if (is_sequence_architecture(spec.architecture)) {
    // One token per time frame (column); feature dim = mel rows.
    Tensor tokens({w, h});
    for (int64_t t = 0; t < w; ++t) {
      for (int64_t m = 0; m < h; ++m) tokens.at(t, m) = grid.at(m, t);
    }
    return tokens;
  }
  return grid.reshaped({1, h, w});
}

Tensor stack_batch(const ClassifierSpec& spec, const std::vector<Tensor>& grids) {
  if (grids.empty()) throw Error(ErrorCode::empty_input, "empty batch");
  Tensor first = model_input_from_grid(spec, grids[0]);
  std::vector<int64_t> shape = first.shape();
  shape.insert(shape.begin(), static_cast<int64_t>(grids.size()));
  Tensor batch(shape);
  int64_t stride = first.numel();
  std::copy(first.data(), first.data() + stride, batch.data());
  for (size_t i = 1; i < grids.size(); ++i) {
    Tensor item = model_input_from_grid(spec, grids[i]);
    if (item.numel() != stride) throw Error(ErrorCode::shape_error, "inconsistent input shapes in batch");
    std::copy(item.data(), item.data() + stride, batch.data() + static_cast<int64_t>(i) * stride);
  }
  return batch;
}

namespace {

struct SplitEval {
  double loss = 0.0;
  double accuracy = 0.0;
};

SplitEval eval_split(Classifier& model, const std::vector<std::string>& ids,
                     const ExampleSource& source, int batch_size) {
  double loss_sum = 0.0;
  int64_t correct = 0;
  size_t pos = 0;
  while (pos < ids.size()) {
    size_t take = std::min(static_cast<size_t>(batch_size), ids.size() - pos);
    std::vector<Tensor> grids;
    std::vector<int> targets;
    for (size_t i = 0; i < take; ++i) {
      grids.push_back(source.grid(ids[pos + i]));
      targets.push_back(source.label_of(ids[pos + i]));
    }
    Tensor batch = stack_batch(model.spec(), grids);
    Tensor logits = model.logits(batch);
    loss_sum += nn::softmax_cross_entropy(logits, targets, nullptr) * static_cast<double>(take);
    for (size_t i = 0; i < take; ++i) {
      int pred = logits.at(static_cast<int64_t>(i), 1) >= logits.at(static_cast<int64_t>(i), 0) ? 1 : 0;
      if (pred == targets[i]) ++correct;
    }
    pos += take;
  }
  SplitEval out;
  out.loss = loss_sum / static_cast<double>(ids.size());
  out.accuracy = static_cast<double>(correct) / static_cast<double>(ids.size());
  return out;
}

void require_two_classes(const std::vector<std::string>& ids, const ExampleSource& source) {
  bool has0 = false, has1 = false;
  for (const auto& id : ids) {
    int l = source.label_of(id);
    (l == 1 ? has1 : has0) = true;
    if (has0 && has1) return;
  }
  throw Error(ErrorCode::single_class, "train split must contain both classes");
}

TrainingLog fit_kernel_from_source(Classifier& model, const std::vector<std::string>& train_ids,
                                   const std::vector<std::string>& val_ids,
                                   const ExampleSource& source, const TrainConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();

  Tensor features({static_cast<int64_t>(train_ids.size()), kKernelPoolSide * kKernelPoolSide});
  std::vector<int> labels;
  for (size_t i = 0; i < train_ids.size(); ++i) {
    Tensor raw = pool_features_for_kernel(source.grid(train_ids[i]));
    std::copy(raw.data(), raw.data() + raw.numel(),
              features.data() + static_cast<int64_t>(i) * raw.numel());
    labels.push_back(source.label_of(train_ids[i]));
  }
  FeatureStandardizer standardizer;
  standardizer.fit(features);
  Tensor standardized = standardizer.apply(features);

  KernelSpec kernel;
  kernel.regularization = model.spec().param("svm_c", 1.0);
  QsvmModel svm = QsvmModel::fit(standardized, labels, kernel);
  svm.standardizer = standardizer;
  model.set_kernel_model(std::move(svm));

  SplitEval train_eval = eval_split(model, train_ids, source, cfg.batch_size);
  SplitEval val_eval = eval_split(model, val_ids, source, cfg.batch_size);

  TrainingLog log;
  log.epochs.push_back({1, train_eval.loss, train_eval.accuracy, val_eval.loss, val_eval.accuracy});
  log.early_exit = "kernel solver: single fit, no epoch schedule";
  log.best_epoch = 1;
  log.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  log.final_fingerprint = model.fingerprint();
  return log;
}

}  // namespace

TrainingLog train_classifier(Classifier& model, const std::vector<std::string>& train_ids,
                             const std::vector<std::string>& val_ids, const ExampleSource& source,
                             const TrainConfig& cfg) {
  cfg.validate();
  if (train_ids.empty() || val_ids.empty()) {
    throw Error(ErrorCode::empty_dataset, "train and val splits must be non-empty");
  }
  require_two_classes(train_ids, source);

  if (model.is_kernel_model()) {
    return fit_kernel_from_source(model, train_ids, val_ids, source, cfg);
  }

  auto t0 = std::chrono::steady_clock::now();
  nn::Module& net = *model.net();
  nn::Adam optimizer(static_cast<float>(cfg.learning_rate));
  Rng rng(derive_seed(static_cast<uint64_t>(cfg.seed), "train"));

  TrainingLog log;
  double best_val_acc = -1.0;
  std::vector<float> best_params;
  std::vector<std::string> order = train_ids;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    deterministic_shuffle(order, rng);
    double loss_sum = 0.0;
    int64_t correct = 0;
    size_t pos = 0;
    while (pos < order.size()) {
      size_t take = std::min(static_cast<size_t>(cfg.batch_size), order.size() - pos);
      std::vector<Tensor> grids;
      std::vector<int> targets;
      for (size_t i = 0; i < take; ++i) {
        grids.push_back(source.grid(order[pos + i]));
        targets.push_back(source.label_of(order[pos + i]));
      }
      Tensor batch = stack_batch(model.spec(), grids);

      auto lock = model.grad_lock();
      nn::RunCtx ctx;
      ctx.grad = true;
      ctx.train = true;
      ctx.rng = &rng;
      nn::zero_grad(net);
      Tensor logits = net.run_forward(batch, ctx);
      Tensor dlogits;
      double loss = nn::softmax_cross_entropy(logits, targets, &dlogits);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::divergence, "training loss became non-finite at epoch " +
                                               std::to_string(epoch));
      }
      net.run_backward(dlogits);
      optimizer.step(net);
      lock.unlock();

      loss_sum += loss * static_cast<double>(take);
      for (size_t i = 0; i < take; ++i) {
        int pred = logits.at(static_cast<int64_t>(i), 1) >= logits.at(static_cast<int64_t>(i), 0) ? 1 : 0;
        if (pred == targets[i]) ++correct;
      }
      pos += take;
    }

    SplitEval val_eval = eval_split(model, val_ids, source, cfg.batch_size);
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(order.size());
    record.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    record.val_loss = val_eval.loss;
    record.val_accuracy = val_eval.accuracy;
    log.epochs.push_back(record);

    if (val_eval.accuracy > best_val_acc) {
      best_val_acc = val_eval.accuracy;
      best_params = nn::export_params(net);
      log.best_epoch = epoch;
    }
  }

  if (!best_params.empty()) nn::import_params(net, best_params);
  log.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  log.final_fingerprint = model.fingerprint();
  return log;
}

EvalResult evaluate_ids(const Classifier& model, const std::vector<std::string>& ids,
                        const ExampleSource& source, int batch_size) {
  if (ids.empty()) throw Error(ErrorCode::empty_dataset, "no ids to evaluate");
  EvalResult result;
  result.ids = ids;
  size_t pos = 0;
  while (pos < ids.size()) {
    size_t take = std::min(static_cast<size_t>(batch_size), ids.size() - pos);
    std::vector<Tensor> grids;
    for (size_t i = 0; i < take; ++i) grids.push_back(source.grid(ids[pos + i]));
    Tensor batch = stack_batch(model.spec(), grids);
    Tensor probs = model.predict_proba(batch);
    for (size_t i = 0; i < take; ++i) {
      auto row = static_cast<int64_t>(i);
      result.labels.push_back(source.label_of(ids[pos + i]));
      result.predictions.push_back(probs.at(row, kClassHuman) >= probs.at(row, kClassMachine) ? 1 : 0);
      result.scores.push_back(probs.at(row, kClassHuman));
    }
    pos += take;
  }
  result.metrics = compute_metrics(result.labels, result.predictions, kClassHuman);
  return result;
}

std::vector<OodRow> run_out_of_domain_eval(const Classifier& model,
                                           const std::vector<NamedEvalSet>& sets) {
  if (sets.empty()) throw Error(ErrorCode::empty_dataset, "no evaluation sets supplied");
  std::vector<OodRow> rows;
  for (const auto& set : sets) {
    if (!set.source) throw Error(ErrorCode::config_error, "evaluation set lacks a source");
    EvalResult result = evaluate_ids(model, set.ids, *set.source);
    rows.push_back({set.name, result.metrics});
  }
  return rows;
}

}  // namespace mgmd
