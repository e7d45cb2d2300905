#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mgmd {

/// Decoded mono waveform at a known rate.
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = 0;
  std::string source_path;
  double duration_s = 0.0;
};

/// Decodes a RIFF/WAVE file. PCM 16/24/32-bit and IEEE float32 are
/// supported; multi-channel input is averaged down to mono.
/// Throws DecodeError on malformed input and EmptyAudio on zero samples.
AudioClip read_wav(const std::filesystem::path& path);

/// PCM16 writer, used by fixtures and the synth tooling.
void write_wav(const std::filesystem::path& path, const std::vector<float>& samples,
               int sample_rate, int channels = 1);

}  // namespace mgmd
