#include "mgmd/zoo/classifier.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "mgmd/core/array_io.hpp"
#include "mgmd/core/error.hpp"
#include "mgmd/zoo/build.hpp"

namespace mgmd {

namespace {
constexpr char kCheckpointMagic[8] = {'M', 'G', 'M', 'D', 'C', 'K', 'P', '1'};
}

Classifier build_classifier(const ClassifierSpec& spec, uint64_t seed) {
  spec.validate();
  Classifier model;
  model.spec_ = spec;
  model.seed_ = seed;
  if (spec.architecture == Architecture::qsvm) {
    model.svm_ = std::make_shared<QsvmModel>();
    return model;
  }
  BuiltNet built = build_net(spec, seed);
  model.net_ = built.net;
  model.feature_layer_ = built.feature_layer;
  model.cam_compatible_ = built.cam_compatible;
  return model;
}

Classifier fit_kernel_classifier(const Tensor& features, const std::vector<int>& labels,
                                 const KernelSpec& kernel) {
  if (features.rank() != 2) {
    throw Error(ErrorCode::dimension_mismatch, "features must be (N, D)");
  }
  Classifier model;
  model.spec_.architecture = Architecture::qsvm;
  model.spec_.input_shape = {1, 224, 224};
  model.svm_ = std::make_shared<QsvmModel>(QsvmModel::fit(features, labels, kernel));
  return model;
}

QsvmModel& Classifier::kernel_model() {
  if (!svm_) throw Error(ErrorCode::config_error, "not a kernel model");
  return *svm_;
}

const QsvmModel& Classifier::kernel_model() const {
  if (!svm_) throw Error(ErrorCode::config_error, "not a kernel model");
  return *svm_;
}

void Classifier::set_kernel_model(QsvmModel model) {
  svm_ = std::make_shared<QsvmModel>(std::move(model));
}

Tensor Classifier::prepare_batch(const Tensor& batch) const {
  bool sequence = is_sequence_architecture(spec_.architecture);
  if (sequence) {
    if (batch.rank() == 2) return batch.reshaped({1, batch.dim(0), batch.dim(1)});
    if (batch.rank() == 3) return batch;
    throw Error(ErrorCode::shape_error, "sequence model expects (T,D) or (N,T,D)");
  }
  int64_t side = spec_.input_shape[1];
  if (batch.rank() == 2 && batch.dim(0) == side && batch.dim(1) == side) {
    return batch.reshaped({1, 1, side, side});
  }
  if (batch.rank() == 3 && batch.dim(0) == 1) return batch.reshaped({1, 1, batch.dim(1), batch.dim(2)});
  if (batch.rank() == 4) return batch;
  throw Error(ErrorCode::shape_error, "image model expects (S,S), (1,S,S) or (N,1,S,S)");
}

Tensor Classifier::logits(const Tensor& batch) const {
  if (is_kernel_model()) {
    const QsvmModel& svm = *svm_;
    int64_t dim = svm.feature_dim();
    // Feature rows go straight to the kernel; image grids are pooled and
    // standardized with the persisted training statistics first.
    std::vector<Tensor> rows;
    if (batch.rank() == 1 && batch.dim(0) == dim) {
      rows.push_back(batch);
    } else if (batch.rank() == 2 && batch.dim(1) == dim && batch.dim(0) != batch.dim(1)) {
      for (int64_t i = 0; i < batch.dim(0); ++i) {
        Tensor row({dim});
        std::copy(batch.data() + i * dim, batch.data() + (i + 1) * dim, row.data());
        rows.push_back(std::move(row));
      }
    } else {
      Tensor prepared = prepare_batch(batch);
      int64_t n = prepared.dim(0), side = prepared.dim(2);
      for (int64_t i = 0; i < n; ++i) {
        Tensor grid({side, side});
        std::copy(prepared.data() + i * side * side, prepared.data() + (i + 1) * side * side,
                  grid.data());
        Tensor feats = pool_features_for_kernel(grid);
        if (svm.standardizer.fitted()) feats = svm.standardizer.apply(feats);
        rows.push_back(std::move(feats));
      }
    }
    Tensor out({static_cast<int64_t>(rows.size()), 2});
    for (size_t i = 0; i < rows.size(); ++i) {
      auto d = static_cast<float>(svm.decision(rows[i].data(), rows[i].numel()));
      out.at(static_cast<int64_t>(i), 0) = -0.5f * d;
      out.at(static_cast<int64_t>(i), 1) = 0.5f * d;
    }
    return out;
  }

  Tensor prepared = prepare_batch(batch);
  nn::RunCtx ctx;  // pure inference
  return net_->run_forward(prepared, ctx);
}

Tensor Classifier::predict_proba(const Tensor& batch) const {
  return nn::softmax_rows(logits(batch));
}

std::vector<std::vector<double>> Classifier::predict_proba(const std::vector<Tensor>& inputs) const {
  std::vector<std::vector<double>> out;
  for (const auto& input : inputs) {
    Tensor probs = predict_proba(input);
    out.push_back({probs[0], probs[1]});
  }
  return out;
}

int Classifier::predict_class(const Tensor& input) const {
  Tensor probs = predict_proba(input);
  return probs[1] >= probs[0] ? 1 : 0;
}

double Classifier::class_score(const Tensor& input, int target_class) const {
  Tensor l = logits(input);
  return l.at(0, target_class);
}

Tensor Classifier::input_gradient(const Tensor& input, int target_class) const {
  if (is_kernel_model()) {
    throw Error(ErrorCode::non_differentiable, "kernel model exposes no gradients");
  }
  std::unique_lock lock(grad_mutex_);
  Tensor prepared = prepare_batch(input);
  if (prepared.dim(0) != 1) {
    throw Error(ErrorCode::shape_error, "input_gradient takes a single sample");
  }
  nn::RunCtx ctx;
  ctx.grad = true;
  Tensor out = net_->run_forward(prepared, ctx);
  Tensor dlogits(out.shape(), 0.0f);
  dlogits.at(0, target_class) = 1.0f;
  Tensor dx = net_->run_backward(dlogits);
  return input.rank() == prepared.rank() ? dx : dx.reshaped(input.shape());
}

LayerCapture Classifier::capture_layer(const Tensor& input, const std::string& layer_path,
                                       int target_class) const {
  if (is_kernel_model()) {
    throw Error(ErrorCode::non_differentiable, "kernel model exposes no gradients");
  }
  std::unique_lock lock(grad_mutex_);
  nn::Module* target = net_->find(layer_path);
  if (!target) throw Error(ErrorCode::layer_not_found, "no layer at path '" + layer_path + "'");

  Tensor prepared = prepare_batch(input);
  target->set_capture(true);
  try {
    nn::RunCtx ctx;
    ctx.grad = true;
    Tensor out = net_->run_forward(prepared, ctx);
    Tensor dlogits(out.shape(), 0.0f);
    dlogits.at(0, target_class) = 1.0f;
    net_->run_backward(dlogits);
  } catch (...) {
    target->set_capture(false);
    throw;
  }
  LayerCapture cap{target->captured_output(), target->captured_grad()};
  target->set_capture(false);
  return cap;
}

Tensor Classifier::feature_maps(const Tensor& input) const {
  if (is_kernel_model()) {
    throw Error(ErrorCode::unsupported_architecture, "kernel model has no feature maps");
  }
  std::unique_lock lock(grad_mutex_);
  nn::Module* target = net_->find(feature_layer_);
  if (!target) throw Error(ErrorCode::layer_not_found, "feature layer missing");
  target->set_capture(true);
  nn::RunCtx ctx;
  Tensor prepared = prepare_batch(input);
  net_->run_forward(prepared, ctx);
  Tensor maps = target->captured_output();
  target->set_capture(false);
  return maps;
}

Tensor Classifier::cam_head_weights() const {
  if (!cam_compatible_) {
    throw Error(ErrorCode::unsupported_architecture,
                "CAM needs a global-average-pool + single linear head");
  }
  auto* head = dynamic_cast<nn::Linear*>(net_->find("head"));
  if (!head) throw Error(ErrorCode::unsupported_architecture, "head is not a single linear layer");
  return head->weight();
}

std::string Classifier::fingerprint() const {
  if (is_kernel_model()) {
    const QsvmModel& svm = *svm_;
    uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a64(svm.support_vectors().data(),
                static_cast<size_t>(svm.support_vectors().numel()) * sizeof(float), h);
    h = fnv1a64(svm.coefficients().data(), svm.coefficients().size() * sizeof(float), h);
    double b = svm.bias();
    h = fnv1a64(&b, sizeof(b), h);
    if (svm.standardizer.fitted()) {
      h = fnv1a64(svm.standardizer.mean.data(),
                  static_cast<size_t>(svm.standardizer.mean.numel()) * sizeof(float), h);
      h = fnv1a64(svm.standardizer.stddev.data(),
                  static_cast<size_t>(svm.standardizer.stddev.numel()) * sizeof(float), h);
    }
    return hex64(h);
  }
  return hex64(nn::param_fingerprint(*net_));
}

void Classifier::save_checkpoint(const std::filesystem::path& path) const {
  nlohmann::json header = {
      {"architecture_name", architecture_name(spec_.architecture)},
      {"architecture_params", spec_.architecture_params},
      {"input_shape", spec_.input_shape},
      {"num_classes", spec_.num_classes},
      {"seed", seed_},
      {"fingerprint", fingerprint()},
  };
  std::vector<float> blob;
  if (is_kernel_model()) {
    const QsvmModel& svm = *svm_;
    header["kernel"] = {{"kernel", svm.kernel().kernel},
                        {"degree", svm.kernel().degree},
                        {"coef0", svm.kernel().coef0},
                        {"regularization", svm.kernel().regularization},
                        {"gamma", svm.kernel().gamma}};
    header["n_support"] = svm.support_vectors().dim(0);
    header["feature_dim"] = svm.feature_dim();
    header["bias"] = svm.bias();
    header["standardized"] = svm.standardizer.fitted();
    const Tensor& sv = svm.support_vectors();
    blob.insert(blob.end(), sv.data(), sv.data() + sv.numel());
    blob.insert(blob.end(), svm.coefficients().begin(), svm.coefficients().end());
    if (svm.standardizer.fitted()) {
      const Tensor& m = svm.standardizer.mean;
      const Tensor& s = svm.standardizer.stddev;
      blob.insert(blob.end(), m.data(), m.data() + m.numel());
      blob.insert(blob.end(), s.data(), s.data() + s.numel());
    }
  } else {
    blob = nn::export_params(*net_);
  }

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  std::string header_str = header.dump();
  auto header_len = static_cast<uint64_t>(header_str.size());
  out.write(kCheckpointMagic, 8);
  out.write(reinterpret_cast<const char*>(&header_len), 8);
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  out.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(blob.size() * sizeof(float)));
  if (!out) throw Error(ErrorCode::io_error, "short write to " + path.string());
}

Classifier Classifier::load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::missing_artifact, "checkpoint not found: " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw Error(ErrorCode::decode_error, "bad checkpoint magic in " + path.string());
  }
  uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), 8);
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(header_len));
  nlohmann::json header = nlohmann::json::parse(header_str);

  ClassifierSpec spec;
  spec.architecture = parse_architecture(header.at("architecture_name").get<std::string>());
  spec.input_shape = header.at("input_shape").get<std::vector<int64_t>>();
  spec.num_classes = header.at("num_classes").get<int>();
  spec.architecture_params = header.value("architecture_params", std::map<std::string, double>{});
  auto seed = header.at("seed").get<uint64_t>();

  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<float> params(raw.size() / sizeof(float));
  std::memcpy(params.data(), raw.data(), params.size() * sizeof(float));

  Classifier model = build_classifier(spec, seed);
  if (spec.architecture == Architecture::qsvm) {
    KernelSpec kernel;
    kernel.kernel = header.at("kernel").at("kernel").get<std::string>();
    kernel.degree = header.at("kernel").at("degree").get<int>();
    kernel.coef0 = header.at("kernel").at("coef0").get<double>();
    kernel.regularization = header.at("kernel").at("regularization").get<double>();
    kernel.gamma = header.at("kernel").value("gamma", 0.0);
    auto n_sv = header.at("n_support").get<int64_t>();
    auto dim = header.at("feature_dim").get<int64_t>();
    auto bias = header.at("bias").get<double>();
    bool standardized = header.at("standardized").get<bool>();

    size_t pos = 0;
    Tensor support({n_sv, dim});
    std::copy(params.begin(), params.begin() + n_sv * dim, support.data());
    pos += static_cast<size_t>(n_sv * dim);
    std::vector<float> coef(params.begin() + static_cast<long>(pos),
                            params.begin() + static_cast<long>(pos) + n_sv);
    pos += static_cast<size_t>(n_sv);
    QsvmModel svm;
    svm.restore(kernel, std::move(support), std::move(coef), bias);
    if (standardized) {
      svm.standardizer.mean = Tensor({dim});
      svm.standardizer.stddev = Tensor({dim});
      std::copy(params.begin() + static_cast<long>(pos), params.begin() + static_cast<long>(pos) + dim,
                svm.standardizer.mean.data());
      pos += static_cast<size_t>(dim);
      std::copy(params.begin() + static_cast<long>(pos), params.begin() + static_cast<long>(pos) + dim,
                svm.standardizer.stddev.data());
    }
    model.set_kernel_model(std::move(svm));
  } else {
    nn::import_params(*model.net_, params);
  }

  std::string want = header.at("fingerprint").get<std::string>();
  if (model.fingerprint() != want) {
    throw Error(ErrorCode::decode_error, "checkpoint fingerprint mismatch (corrupt file?)");
  }
  return model;
}

}  // namespace mgmd
