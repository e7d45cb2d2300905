#include "mgmd/core/random.hpp"

#include <cmath>
#include <cstdio>

namespace mgmd {

uint64_t fnv1a64(const void* data, size_t size, uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t fnv1a64(const std::string& s, uint64_t seed) {
  return fnv1a64(s.data(), s.size(), seed);
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

uint64_t derive_seed(uint64_t seed, const std::string& tag) {
  uint64_t h = fnv1a64(tag);
  h = fnv1a64(&seed, sizeof(seed), h);
  // Avoid the degenerate all-zero state.
  return h == 0 ? 0x9e3779b97f4a7c15ULL : h;
}

uint64_t Rng::next_below(uint64_t bound) {
  if (bound <= 1) return 0;
  uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t v = engine_();
  while (v >= limit) v = engine_();
  return v % bound;
}

float Rng::next_float() {
  return static_cast<float>(engine_() >> 40) * (1.0f / 16777216.0f);
}

double Rng::next_double() {
  return static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0);
}

float Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  float u1 = next_float();
  float u2 = next_float();
  while (u1 <= 1e-12f) u1 = next_float();
  float r = std::sqrt(-2.0f * std::log(u1));
  float theta = 2.0f * 3.14159265358979323846f * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

}  // namespace mgmd
