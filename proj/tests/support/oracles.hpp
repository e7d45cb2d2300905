#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace mgmd::testing {

/// Reference STFT framing rule: center-padded analysis gives
/// floor(n / hop) + 1 frames (frame t starts at t*hop in the padded
/// signal, pad = fft/2 on each side; frames exist while the window start
/// t*hop stays within [0, n]).
inline int64_t framing_oracle(int64_t n_samples, int64_t hop) {
  int64_t frames = 0;
  for (int64_t start = 0; start <= n_samples; start += hop) ++frames;
  return frames;
}

/// Two-stage floor split-size oracle, applied per class then summed.
struct OracleSizes {
  size_t train = 0, val = 0, test = 0;
};

inline OracleSizes split_oracle_per_class(size_t n) {
  OracleSizes sizes;
  size_t trainval = static_cast<size_t>(std::floor(0.8 * static_cast<double>(n)));
  sizes.test = n - trainval;
  sizes.train = static_cast<size_t>(std::floor(0.8 * static_cast<double>(trainval)));
  sizes.val = trainval - sizes.train;
  return sizes;
}

/// Independent Welch p-value: the t statistic from first principles and
/// the tail probability by adaptive Simpson integration of the Student-t
/// density (no shared code with the shipped implementation).
double welch_p_value_oracle(const std::vector<double>& a, const std::vector<double>& b);

/// Student-t density integral over [lo, hi].
double t_density_integral(double df, double lo, double hi);

}  // namespace mgmd::testing
