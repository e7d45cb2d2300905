#pragma once

#include <string>
#include <vector>

#include "mgmd/core/tensor.hpp"
#include "mgmd/train/metrics.hpp"
#include "mgmd/zoo/classifier.hpp"

namespace mgmd {

struct TrainConfig {
  int batch_size = 64;
  int epochs = 10;
  double learning_rate = 0.001;
  int64_t seed = 0;
  std::string device = "cpu";

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  double wall_time_s = 0.0;
  std::string final_fingerprint;
  int best_epoch = 0;
  std::string early_exit;  // set when fewer than cfg.epochs ran (kernel solver)
};

/// Supplies the model-input grid and class index per sample id. Grids
/// are (side, side); sequence models receive them as per-frame tokens.
class ExampleSource {
 public:
  virtual ~ExampleSource() = default;
  virtual Tensor grid(const std::string& id) const = 0;
  virtual int label_of(const std::string& id) const = 0;
};

/// Adapts a square model-input grid to the architecture's input layout:
/// (1,S,S) image or (T=frames, D=mel) token sequence (grid transposed).
Tensor model_input_from_grid(const ClassifierSpec& spec, const Tensor& grid);

/// Stacks adapted inputs into one batch tensor.
Tensor stack_batch(const ClassifierSpec& spec, const std::vector<Tensor>& grids);

/// Trains with cross-entropy + Adam for exactly cfg.epochs epochs,
/// keeping the parameters of the best-validation-accuracy epoch. The
/// qsvm architecture instead pools features, fits the standardizer on
/// the train split, and runs the kernel solver (single log record with
/// early_exit set).
TrainingLog train_classifier(Classifier& model, const std::vector<std::string>& train_ids,
                             const std::vector<std::string>& val_ids, const ExampleSource& source,
                             const TrainConfig& cfg);

struct EvalResult {
  Metrics metrics;
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<int> predictions;
  std::vector<double> scores;  // positive-class probability
};

/// Batched evaluation over ids; positive class = human (index 1).
EvalResult evaluate_ids(const Classifier& model, const std::vector<std::string>& ids,
                        const ExampleSource& source, int batch_size = 64);

struct NamedEvalSet {
  std::string name;
  std::vector<std::string> ids;
  const ExampleSource* source = nullptr;
};

struct OodRow {
  std::string name;
  Metrics metrics;
};

/// One metrics row per named manifest, all through the same
/// featurization path as training.
std::vector<OodRow> run_out_of_domain_eval(const Classifier& model,
                                           const std::vector<NamedEvalSet>& sets);

}  // namespace mgmd
