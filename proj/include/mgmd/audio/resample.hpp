#pragma once

#include "mgmd/audio/wav.hpp"

namespace mgmd {

/// Bandlimited (windowed-sinc) rate conversion. A clip already at the
/// target rate is returned untouched so the identity path stays
/// byte-exact.
AudioClip resample(const AudioClip& clip, int target_rate);

/// Decode + mono mixdown + resample in one step.
AudioClip load_audio(const std::filesystem::path& path, int target_rate);

/// Zero-pad or center-crop to an exact duration. Applied before mel
/// extraction so every model input covers the same time span.
AudioClip fix_duration(const AudioClip& clip, double seconds);

}  // namespace mgmd
