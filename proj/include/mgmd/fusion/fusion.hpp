#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mgmd/audio/wav.hpp"
#include "mgmd/core/tensor.hpp"
#include "mgmd/nn/nn.hpp"
#include "mgmd/train/trainer.hpp"

namespace mgmd {

/// Frozen per-modality feature extractor. Implementations must be
/// deterministic: the same input always yields the same vector.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string provider_id() const = 0;
  virtual std::string modality() const = 0;  // "audio" or "text"
  virtual int64_t dim() const = 0;
  virtual Tensor embed_audio(const AudioClip& clip) const;
  virtual Tensor embed_text(const std::string& text) const;
};

/// Reference audio provider: per-band mean and standard deviation of a
/// small mel grid, dim = 2 * bands.
class MelStatsAudioProvider : public EmbeddingProvider {
 public:
  explicit MelStatsAudioProvider(int64_t bands = 32);
  std::string provider_id() const override { return "mel_stats"; }
  std::string modality() const override { return "audio"; }
  int64_t dim() const override { return 2 * bands_; }
  Tensor embed_audio(const AudioClip& clip) const override;

 private:
  int64_t bands_;
};

/// Reference text provider: L2-normalized hashed character trigram
/// counts.
class HashedTextProvider : public EmbeddingProvider {
 public:
  explicit HashedTextProvider(int64_t dim = 64) : dim_(dim) {}
  std::string provider_id() const override { return "char_hash"; }
  std::string modality() const override { return "text"; }
  int64_t dim() const override { return dim_; }
  Tensor embed_text(const std::string& text) const override;

 private:
  int64_t dim_;
};

/// External-process provider. Handshake: `cmd --handshake` prints JSON
/// {provider_id, modality, dim}. Embedding: `cmd --embed-file <path>`
/// (audio) or `cmd --embed-text` with the text on stdin; stdout is a
/// JSON array of `dim` reals.
class ExecEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit ExecEmbeddingProvider(std::string command);
  std::string provider_id() const override { return provider_id_; }
  std::string modality() const override { return modality_; }
  int64_t dim() const override { return dim_; }
  Tensor embed_audio(const AudioClip& clip) const override;
  Tensor embed_text(const std::string& text) const override;

 private:
  Tensor parse_vector(const std::string& output) const;
  std::string command_;
  std::string provider_id_;
  std::string modality_;
  int64_t dim_ = 0;
};

enum class EmptyLyricsPolicy { strict, zero_fill };

/// Audio embedding first, text second; fixed order is part of the
/// contract. Missing lyrics follow the policy: strict raises
/// MissingLyrics, zero_fill substitutes a zero text vector.
Tensor embed_pair(const EmbeddingProvider& audio_provider, const EmbeddingProvider& text_provider,
                  const AudioClip& clip, const std::optional<std::string>& lyrics,
                  EmptyLyricsPolicy policy = EmptyLyricsPolicy::strict);

struct FusionModel {
  int64_t audio_dim = 0;
  int64_t text_dim = 0;
  std::shared_ptr<nn::Sequential> head;
  std::string audio_provider_id;
  std::string text_provider_id;
  uint64_t seed = 0;

  int64_t fused_dim() const { return audio_dim + text_dim; }
  std::string fingerprint() const;
};

/// Trains the MLP head (512/128 hidden, ReLU, dropout 0.3) on fused
/// vectors; providers are untouched by construction.
FusionModel train_fusion_head(const std::vector<std::pair<Tensor, int>>& pairs,
                              const TrainConfig& cfg, int64_t audio_dim, int64_t text_dim,
                              const std::string& audio_provider_id = "",
                              const std::string& text_provider_id = "");

/// Two probabilities summing to one; DimensionMismatch on a wrong-length
/// vector.
std::vector<double> predict_fusion(const FusionModel& model, const Tensor& fused);

/// Embedding cache records: `<id>.<modality>.f32` + sidecar.
void write_embedding_cache(const std::filesystem::path& dir, const std::string& id,
                           const std::string& modality, const std::string& provider_id,
                           const Tensor& vector);
Tensor read_embedding_cache(const std::filesystem::path& dir, const std::string& id,
                            const std::string& modality);

}  // namespace mgmd
