#include "mgmd/audio/resample.hpp"

#include <algorithm>
#include <cmath>

#include "mgmd/core/error.hpp"

namespace mgmd {

namespace {

constexpr int kBaseHalfTaps = 32;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  double px = 3.14159265358979323846 * x;
  return std::sin(px) / px;
}

}  // namespace

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw Error(ErrorCode::config_error, "target_rate must be positive");
  if (clip.samples.empty()) throw Error(ErrorCode::empty_audio, "cannot resample empty clip");
  if (clip.sample_rate == target_rate) return clip;

  double ratio = static_cast<double>(target_rate) / clip.sample_rate;
  double cutoff = std::min(1.0, ratio);  // fraction of input Nyquist
  int half_taps = static_cast<int>(std::ceil(kBaseHalfTaps / cutoff));

  auto out_len = static_cast<int64_t>(std::llround(static_cast<double>(clip.samples.size()) * ratio));
  out_len = std::max<int64_t>(out_len, 1);

  AudioClip out;
  out.sample_rate = target_rate;
  out.source_path = clip.source_path;
  out.samples.resize(static_cast<size_t>(out_len));

  auto n = static_cast<int64_t>(clip.samples.size());
  for (int64_t i = 0; i < out_len; ++i) {
    double center = static_cast<double>(i) / ratio;
    auto j0 = static_cast<int64_t>(std::ceil(center)) - half_taps;
    auto j1 = static_cast<int64_t>(std::floor(center)) + half_taps;
    double acc = 0.0;
    for (int64_t j = std::max<int64_t>(0, j0); j <= std::min(n - 1, j1); ++j) {
      double u = center - static_cast<double>(j);
      double w = 0.5 * (1.0 + std::cos(3.14159265358979323846 * u / half_taps));  // Hann taper
      acc += clip.samples[static_cast<size_t>(j)] * cutoff * sinc(cutoff * u) * w;
    }
    out.samples[static_cast<size_t>(i)] = static_cast<float>(acc);
  }
  out.duration_s = static_cast<double>(out_len) / target_rate;
  return out;
}

AudioClip load_audio(const std::filesystem::path& path, int target_rate) {
  AudioClip clip = read_wav(path);
  clip = resample(clip, target_rate);
  for (float v : clip.samples) {
    if (!std::isfinite(v)) throw Error(ErrorCode::decode_error, "non-finite samples in " + path.string());
  }
  return clip;
}

AudioClip fix_duration(const AudioClip& clip, double seconds) {
  auto want = static_cast<int64_t>(std::llround(seconds * clip.sample_rate));
  auto have = static_cast<int64_t>(clip.samples.size());
  if (have == want) return clip;

  AudioClip out = clip;
  if (have < want) {
    out.samples.resize(static_cast<size_t>(want), 0.0f);
  } else {
    auto start = (have - want) / 2;
    out.samples.assign(clip.samples.begin() + start, clip.samples.begin() + start + want);
  }
  out.duration_s = static_cast<double>(want) / clip.sample_rate;
  return out;
}

}  // namespace mgmd
