#include "mgmd/fusion/fusion.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "mgmd/audio/mel.hpp"
#include "mgmd/audio/resample.hpp"
#include "mgmd/core/array_io.hpp"
#include "mgmd/core/error.hpp"
#include "mgmd/core/random.hpp"

namespace mgmd {

Tensor EmbeddingProvider::embed_audio(const AudioClip&) const {
  throw Error(ErrorCode::provider_error, provider_id() + " does not embed audio");
}

Tensor EmbeddingProvider::embed_text(const std::string&) const {
  throw Error(ErrorCode::provider_error, provider_id() + " does not embed text");
}

// --- MelStatsAudioProvider -----------------------------------------------

MelStatsAudioProvider::MelStatsAudioProvider(int64_t bands) : bands_(bands) {
  if (bands < 1) throw Error(ErrorCode::config_error, "bands must be >= 1");
}

Tensor MelStatsAudioProvider::embed_audio(const AudioClip& clip) const {
  MelConfig cfg;
  cfg.n_mels = static_cast<int>(bands_);
  cfg.fft_window = 1024;
  cfg.hop = 512;
  cfg.input_side = 32;  // resized grid unused here
  AudioClip prepared = clip.sample_rate == cfg.target_rate ? clip : resample(clip, cfg.target_rate);
  MelSpectrogram mel = compute_mel_spectrogram(prepared, cfg);

  Tensor out({2 * bands_});
  int64_t frames = mel.grid.dim(1);
  for (int64_t m = 0; m < bands_; ++m) {
    double sum = 0.0;
    for (int64_t t = 0; t < frames; ++t) sum += mel.grid.at(m, t);
    double mean = sum / static_cast<double>(frames);
    double sq = 0.0;
    for (int64_t t = 0; t < frames; ++t) {
      double d = mel.grid.at(m, t) - mean;
      sq += d * d;
    }
    out[m] = static_cast<float>(mean);
    out[bands_ + m] = static_cast<float>(std::sqrt(sq / static_cast<double>(frames)));
  }
  return out;
}

// --- HashedTextProvider -----------------------------------------------------

Tensor HashedTextProvider::embed_text(const std::string& text) const {
  Tensor out({dim_}, 0.0f);
  if (text.size() >= 3) {
    for (size_t i = 0; i + 3 <= text.size(); ++i) {
      uint64_t h = fnv1a64(text.data() + i, 3);
      out[static_cast<int64_t>(h % static_cast<uint64_t>(dim_))] += 1.0f;
    }
  }
  double norm = 0.0;
  for (int64_t i = 0; i < dim_; ++i) norm += static_cast<double>(out[i]) * out[i];
  if (norm > 0) {
    auto inv = static_cast<float>(1.0 / std::sqrt(norm));
    for (int64_t i = 0; i < dim_; ++i) out[i] *= inv;
  }
  return out;
}

// --- ExecEmbeddingProvider -----------------------------------------------------

namespace {
std::string run_command_capture(const std::string& command, const std::string& stdin_data) {
  std::string full = command;
  std::string tmp_in;
  if (!stdin_data.empty()) {
    tmp_in = "/tmp/mgmd_provider_in_" + hex64(fnv1a64(stdin_data)) + ".txt";
    write_text_file(tmp_in, stdin_data);
    full += " < " + tmp_in;
  }
  FILE* pipe = popen(full.c_str(), "r");
  if (!pipe) throw Error(ErrorCode::provider_error, "cannot launch provider: " + command);
  std::string output;
  char buf[4096];
  size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) output.append(buf, got);
  int status = pclose(pipe);
  if (!tmp_in.empty()) std::remove(tmp_in.c_str());
  if (status != 0) {
    throw Error(ErrorCode::provider_error, "provider exited with status " + std::to_string(status));
  }
  return output;
}
}  // namespace

ExecEmbeddingProvider::ExecEmbeddingProvider(std::string command) : command_(std::move(command)) {
  std::string reply = run_command_capture(command_ + " --handshake", "");
  try {
    nlohmann::json handshake = nlohmann::json::parse(reply);
    provider_id_ = handshake.at("provider_id").get<std::string>();
    modality_ = handshake.at("modality").get<std::string>();
    dim_ = handshake.at("dim").get<int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::provider_error, std::string("bad handshake: ") + e.what());
  }
  if (dim_ < 1 || (modality_ != "audio" && modality_ != "text")) {
    throw Error(ErrorCode::provider_error, "handshake declared invalid modality or dim");
  }
}

Tensor ExecEmbeddingProvider::parse_vector(const std::string& output) const {
  try {
    nlohmann::json arr = nlohmann::json::parse(output);
    if (!arr.is_array() || static_cast<int64_t>(arr.size()) != dim_) {
      throw Error(ErrorCode::provider_error, "provider returned wrong-length vector");
    }
    Tensor out({dim_});
    for (int64_t i = 0; i < dim_; ++i) out[i] = arr[static_cast<size_t>(i)].get<float>();
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::provider_error, std::string("bad provider output: ") + e.what());
  }
}

Tensor ExecEmbeddingProvider::embed_audio(const AudioClip& clip) const {
  if (modality_ != "audio") return EmbeddingProvider::embed_audio(clip);
  if (clip.source_path.empty()) {
    throw Error(ErrorCode::provider_error, "exec provider needs a file-backed clip");
  }
  return parse_vector(run_command_capture(command_ + " --embed-file '" + clip.source_path + "'", ""));
}

Tensor ExecEmbeddingProvider::embed_text(const std::string& text) const {
  if (modality_ != "text") return EmbeddingProvider::embed_text(text);
  return parse_vector(run_command_capture(command_ + " --embed-text", text));
}

// --- Fusion -------------------------------------------------------------------

Tensor embed_pair(const EmbeddingProvider& audio_provider, const EmbeddingProvider& text_provider,
                  const AudioClip& clip, const std::optional<std::string>& lyrics,
                  EmptyLyricsPolicy policy) {
  Tensor audio = audio_provider.embed_audio(clip);
  if (audio.numel() != audio_provider.dim()) {
    throw Error(ErrorCode::provider_error, "audio provider returned wrong-length vector");
  }
  Tensor text;
  if (lyrics.has_value() && !lyrics->empty()) {
    text = text_provider.embed_text(*lyrics);
    if (text.numel() != text_provider.dim()) {
      throw Error(ErrorCode::provider_error, "text provider returned wrong-length vector");
    }
  } else if (policy == EmptyLyricsPolicy::zero_fill) {
    text = Tensor({text_provider.dim()}, 0.0f);
  } else {
    throw Error(ErrorCode::missing_lyrics, "lyrics required under the strict policy");
  }

  Tensor fused({audio.numel() + text.numel()});
  std::copy(audio.data(), audio.data() + audio.numel(), fused.data());
  std::copy(text.data(), text.data() + text.numel(), fused.data() + audio.numel());
  return fused;
}

std::string FusionModel::fingerprint() const {
  return head ? hex64(nn::param_fingerprint(*head)) : std::string("empty");
}

FusionModel train_fusion_head(const std::vector<std::pair<Tensor, int>>& pairs,
                              const TrainConfig& cfg, int64_t audio_dim, int64_t text_dim,
                              const std::string& audio_provider_id,
                              const std::string& text_provider_id) {
  cfg.validate();
  if (pairs.empty()) throw Error(ErrorCode::empty_dataset, "no fusion training pairs");
  int64_t fused_dim = audio_dim + text_dim;
  bool has0 = false, has1 = false;
  for (const auto& [vec, label] : pairs) {
    if (vec.numel() != fused_dim) {
      throw Error(ErrorCode::dimension_mismatch, "fused vector length differs from declared dims");
    }
    (label == 1 ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw Error(ErrorCode::single_class, "both classes required");

  Rng init_rng(derive_seed(static_cast<uint64_t>(cfg.seed), "fusion-init"));
  auto head = std::make_shared<nn::Sequential>();
  head->add("fc1", std::make_unique<nn::Linear>(fused_dim, 512, init_rng));
  head->add("relu1", std::make_unique<nn::Act>(nn::Activation::relu));
  head->add("drop1", std::make_unique<nn::Dropout>(0.3f));
  head->add("fc2", std::make_unique<nn::Linear>(512, 128, init_rng));
  head->add("relu2", std::make_unique<nn::Act>(nn::Activation::relu));
  head->add("drop2", std::make_unique<nn::Dropout>(0.3f));
  head->add("fc3", std::make_unique<nn::Linear>(128, 2, init_rng));

  nn::Adam optimizer(static_cast<float>(cfg.learning_rate));
  Rng rng(derive_seed(static_cast<uint64_t>(cfg.seed), "fusion-train"));
  std::vector<size_t> order(pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    deterministic_shuffle(order, rng);
    size_t pos = 0;
    while (pos < order.size()) {
      size_t take = std::min(static_cast<size_t>(cfg.batch_size), order.size() - pos);
      Tensor batch({static_cast<int64_t>(take), fused_dim});
      std::vector<int> targets;
      for (size_t i = 0; i < take; ++i) {
        const auto& [vec, label] = pairs[order[pos + i]];
        std::copy(vec.data(), vec.data() + fused_dim, batch.data() + static_cast<int64_t>(i) * fused_dim);
        targets.push_back(label);
      }
      nn::RunCtx ctx;
      ctx.grad = true;
      ctx.train = true;
      ctx.rng = &rng;
      nn::zero_grad(*head);
      Tensor logits = head->run_forward(batch, ctx);
      Tensor dlogits;
      double loss = nn::softmax_cross_entropy(logits, targets, &dlogits);
      if (!std::isfinite(loss)) throw Error(ErrorCode::divergence, "fusion loss became non-finite");
      head->run_backward(dlogits);
      optimizer.step(*head);
      pos += take;
    }
  }

  FusionModel model;
  model.audio_dim = audio_dim;
  model.text_dim = text_dim;
  model.head = head;
  model.audio_provider_id = audio_provider_id;
  model.text_provider_id = text_provider_id;
  model.seed = static_cast<uint64_t>(cfg.seed);
  return model;
}

std::vector<double> predict_fusion(const FusionModel& model, const Tensor& fused) {
  if (!model.head) throw Error(ErrorCode::config_error, "fusion model has no head");
  if (fused.numel() != model.fused_dim()) {
    throw Error(ErrorCode::dimension_mismatch, "fused vector length does not match head input");
  }
  nn::RunCtx ctx;
  Tensor logits = model.head->run_forward(fused.reshaped({1, fused.numel()}), ctx);
  Tensor probs = nn::softmax_rows(logits);
  return {probs[0], probs[1]};
}

void write_embedding_cache(const std::filesystem::path& dir, const std::string& id,
                           const std::string& modality, const std::string& provider_id,
                           const Tensor& vector) {
  nlohmann::json meta = {
      {"id", id},
      {"modality", modality},
      {"provider_id", provider_id},
      {"dim", vector.numel()},
  };
  write_f32_array(dir / (id + "." + modality + ".f32"), vector, meta);
}

Tensor read_embedding_cache(const std::filesystem::path& dir, const std::string& id,
                            const std::string& modality) {
  return read_f32_array(dir / (id + "." + modality + ".f32"));
}

}  // namespace mgmd
