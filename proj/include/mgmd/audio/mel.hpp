#pragma once

#include <string>
#include <vector>

#include "mgmd/audio/wav.hpp"
#include "mgmd/core/tensor.hpp"

namespace mgmd {

/// Mel extraction parameters. The dB floor is relative to the per-clip
/// maximum; a silent clip maps to the floor everywhere.
struct MelConfig {
  int target_rate = 16000;
  int n_mels = 128;
  int fft_window = 2048;
  int hop = 512;
  int input_side = 224;
  double clip_seconds = 10.0;
  float db_floor = -80.0f;

  void validate() const;
};

struct MelSpectrogram {
  Tensor grid;      // n_mels x frames, dB
  Tensor resized;   // input_side x input_side, [0,1]
  MelConfig config;
  std::string source_id;
};

/// Frames with center padding: frame_count = floor(n_samples / hop) + 1.
int64_t mel_frame_count(int64_t n_samples, int hop);

/// STFT -> Slaney mel filterbank -> dB (floored) -> min-max + bilinear
/// resize to the square model input. Requires clip.sample_rate equal to
/// cfg.target_rate.
MelSpectrogram compute_mel_spectrogram(const AudioClip& clip, const MelConfig& cfg);

/// In-place radix-2 FFT; n must be a power of two.
void fft_radix2(std::vector<double>& re, std::vector<double>& im);

/// Triangular Slaney-normalized mel filterbank, n_mels x (n_fft/2 + 1).
Tensor mel_filterbank(int n_mels, int n_fft, int sample_rate);

}  // namespace mgmd
