#include "mgmd/audio/mel.hpp"

#include <algorithm>
#include <cmath>

#include "mgmd/core/error.hpp"
#include "mgmd/core/grid.hpp"

namespace mgmd {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr float kAmin = 1e-10f;

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

double hz_to_mel(double hz) {
  // Slaney scale: linear below 1 kHz, log above.
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double log_step = std::log(6.4) / 27.0;
  if (hz < min_log_hz) return hz / f_sp;
  return min_log_mel + std::log(hz / min_log_hz) / log_step;
}

double mel_to_hz(double mel) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double log_step = std::log(6.4) / 27.0;
  if (mel < min_log_mel) return mel * f_sp;
  return min_log_hz * std::exp((mel - min_log_mel) * log_step);
}

}  // namespace

void MelConfig::validate() const {
  if (target_rate <= 0 || n_mels < 1 || fft_window <= 0 || hop <= 0 || input_side <= 0) {
    throw Error(ErrorCode::config_error, "mel config fields must be positive");
  }
  if (hop > fft_window) throw Error(ErrorCode::config_error, "hop must not exceed fft_window");
  if (!is_pow2(fft_window)) throw Error(ErrorCode::config_error, "fft_window must be a power of two");
}

int64_t mel_frame_count(int64_t n_samples, int hop) { return n_samples / hop + 1; }

void fft_radix2(std::vector<double>& re, std::vector<double>& im) {
  size_t n = re.size();
  if (n == 0 || (n & (n - 1)) != 0 || im.size() != n) {
    throw Error(ErrorCode::config_error, "fft size must be a power of two");
  }
  // Bit-reversal permutation.
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * kPi / static_cast<double>(len);
    double wr = std::cos(ang), wi = std::sin(ang);
    for (size_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (size_t k = 0; k < len / 2; ++k) {
        size_t a = i + k, b = i + k + len / 2;
        double tr = re[b] * cr - im[b] * ci;
        double ti = re[b] * ci + im[b] * cr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
        double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

Tensor mel_filterbank(int n_mels, int n_fft, int sample_rate) {
  int n_bins = n_fft / 2 + 1;
  double mel_lo = hz_to_mel(0.0);
  double mel_hi = hz_to_mel(sample_rate / 2.0);

  std::vector<double> mel_f(static_cast<size_t>(n_mels) + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    mel_f[static_cast<size_t>(i)] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  }

  Tensor fb({n_mels, n_bins});
  for (int m = 0; m < n_mels; ++m) {
    double left = mel_f[static_cast<size_t>(m)];
    double center = mel_f[static_cast<size_t>(m) + 1];
    double right = mel_f[static_cast<size_t>(m) + 2];
    double enorm = 2.0 / (right - left + 1e-10);  // Slaney area normalization
    for (int k = 0; k < n_bins; ++k) {
      double freq = static_cast<double>(k) * sample_rate / n_fft;
      double lower = (freq - left) / (center - left + 1e-10);
      double upper = (right - freq) / (right - center + 1e-10);
      double v = std::max(0.0, std::min(lower, upper));
      fb.at(m, k) = static_cast<float>(v * enorm);
    }
  }
  return fb;
}

MelSpectrogram compute_mel_spectrogram(const AudioClip& clip, const MelConfig& cfg) {
  cfg.validate();
  if (clip.samples.empty()) throw Error(ErrorCode::empty_audio, "cannot compute mel of empty clip");
  if (clip.sample_rate != cfg.target_rate) {
    throw Error(ErrorCode::config_error, "clip rate " + std::to_string(clip.sample_rate) +
                                             " does not match config target " +
                                             std::to_string(cfg.target_rate));
  }

  auto n = static_cast<int64_t>(clip.samples.size());
  int64_t n_frames = mel_frame_count(n, cfg.hop);
  int n_fft = cfg.fft_window;
  int n_bins = n_fft / 2 + 1;
  int64_t pad = n_fft / 2;

  // Center padding, reflected at the edges.
  auto padded_sample = [&](int64_t idx) -> double {
    int64_t i = idx - pad;
    if (n == 1) return clip.samples[0];
    while (i < 0 || i >= n) {
      if (i < 0) i = -i;
      if (i >= n) i = 2 * (n - 1) - i;
    }
    return clip.samples[static_cast<size_t>(i)];
  };

  std::vector<double> window(static_cast<size_t>(n_fft));
  for (int i = 0; i < n_fft; ++i) {
    window[static_cast<size_t>(i)] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / n_fft));
  }

  Tensor fb = mel_filterbank(cfg.n_mels, n_fft, cfg.target_rate);
  Tensor power({cfg.n_mels, n_frames});

  std::vector<double> re(static_cast<size_t>(n_fft)), im(static_cast<size_t>(n_fft));
  std::vector<double> spec(static_cast<size_t>(n_bins));
  for (int64_t t = 0; t < n_frames; ++t) {
    int64_t start = t * cfg.hop;
    for (int i = 0; i < n_fft; ++i) {
      re[static_cast<size_t>(i)] = padded_sample(start + i) * window[static_cast<size_t>(i)];
      im[static_cast<size_t>(i)] = 0.0;
    }
    fft_radix2(re, im);
    for (int k = 0; k < n_bins; ++k) {
      spec[static_cast<size_t>(k)] =
          re[static_cast<size_t>(k)] * re[static_cast<size_t>(k)] +
          im[static_cast<size_t>(k)] * im[static_cast<size_t>(k)];
    }
    for (int m = 0; m < cfg.n_mels; ++m) {
      double acc = 0.0;
      const float* row = fb.data() + static_cast<size_t>(m) * n_bins;
      for (int k = 0; k < n_bins; ++k) acc += row[k] * spec[static_cast<size_t>(k)];
      power.at(m, t) = static_cast<float>(acc);
    }
  }

  // Power -> dB relative to the per-clip max, floored. Silence maps to
  // the floor everywhere.
  float max_power = 0.0f;
  for (int64_t i = 0; i < power.numel(); ++i) max_power = std::max(max_power, power[i]);

  MelSpectrogram mel;
  mel.config = cfg;
  mel.source_id = clip.source_path;
  mel.grid = Tensor({cfg.n_mels, n_frames});
  if (max_power <= kAmin) {
    mel.grid.fill(cfg.db_floor);
  } else {
    float ref_db = 10.0f * std::log10(max_power);
    for (int64_t i = 0; i < power.numel(); ++i) {
      float db = 10.0f * std::log10(std::max(power[i], kAmin)) - ref_db;
      mel.grid[i] = std::max(db, cfg.db_floor);
    }
  }

  mel.resized = bilinear_resize(minmax_normalize(mel.grid), cfg.input_side, cfg.input_side);
  if (!mel.resized.all_finite()) {
    throw Error(ErrorCode::nan_input, "non-finite values in resized mel grid");
  }
  return mel;
}

}  // namespace mgmd
