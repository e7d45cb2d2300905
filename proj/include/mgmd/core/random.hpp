#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mgmd {

/// FNV-1a 64-bit over raw bytes. Used for parameter fingerprints and
/// config hashes; stable across platforms.
uint64_t fnv1a64(const void* data, size_t size, uint64_t seed = 0xcbf29ce484222325ULL);
uint64_t fnv1a64(const std::string& s, uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(uint64_t v);

/// Derives an independent stream seed from (seed, tag). Streams for
/// different tags never collide on the base seed alone.
uint64_t derive_seed(uint64_t seed, const std::string& tag);

/// Deterministic RNG wrapper. std::shuffle and the std distributions are
/// implementation-defined, so splits and sampling go through these
/// explicit algorithms instead.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  /// Unbiased draw in [0, bound) via rejection sampling.
  uint64_t next_below(uint64_t bound);

  /// Uniform float in [0, 1).
  float next_float();

  /// Uniform double in [0, 1).
  double next_double();

  /// Uniform in [lo, hi).
  float uniform(float lo, float hi) { return lo + (hi - lo) * next_float(); }

  /// Standard normal via Box-Muller (explicit, portable).
  float normal();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  float spare_ = 0.0f;
};

/// Fisher-Yates with explicit draws; identical order on every platform.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, Rng& rng) {
  if (items.size() < 2) return;
  for (size_t i = items.size() - 1; i > 0; --i) {
    size_t j = static_cast<size_t>(rng.next_below(i + 1));
    std::swap(items[i], items[j]);
  }
}

}  // namespace mgmd
