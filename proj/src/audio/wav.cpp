#include "mgmd/audio/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "mgmd/core/error.hpp"

namespace mgmd {

namespace {

struct Reader {
  const uint8_t* p;
  size_t size;
  size_t pos = 0;

  bool can_read(size_t n) const { return pos + n <= size; }

  uint32_t u32() {
    uint32_t v = static_cast<uint32_t>(p[pos]) | (static_cast<uint32_t>(p[pos + 1]) << 8) |
                 (static_cast<uint32_t>(p[pos + 2]) << 16) | (static_cast<uint32_t>(p[pos + 3]) << 24);
    pos += 4;
    return v;
  }
  uint16_t u16() {
    uint16_t v = static_cast<uint16_t>(p[pos] | (p[pos + 1] << 8));
    pos += 2;
    return v;
  }
};

float decode_sample(const uint8_t* p, uint16_t bits, uint16_t format) {
  if (format == 3) {  // IEEE float
    float v;
    std::memcpy(&v, p, 4);
    return v;
  }
  switch (bits) {
    case 16: {
      int16_t v;
      std::memcpy(&v, p, 2);
      return static_cast<float>(v) / 32768.0f;
    }
    case 24: {
      int32_t v = (p[0] << 8) | (p[1] << 16) | (static_cast<int32_t>(static_cast<int8_t>(p[2])) << 24);
      return static_cast<float>(v >> 8) / 8388608.0f;
    }
    case 32: {
      int32_t v;
      std::memcpy(&v, p, 4);
      return static_cast<float>(v) / 2147483648.0f;
    }
    default:
      throw Error(ErrorCode::decode_error, "unsupported PCM bit depth " + std::to_string(bits));
  }
}

}  // namespace

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::decode_error, "cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::decode_error, "not a RIFF/WAVE file: " + path.string());
  }

  Reader r{bytes.data(), bytes.size(), 12};
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  const uint8_t* data_ptr = nullptr;
  size_t data_size = 0;
  bool have_fmt = false;

  while (r.can_read(8)) {
    char id[5] = {0};
    std::memcpy(id, bytes.data() + r.pos, 4);
    r.pos += 4;
    uint32_t chunk_size = r.u32();
    if (!r.can_read(chunk_size)) {
      throw Error(ErrorCode::decode_error, "truncated chunk '" + std::string(id) + "' in " + path.string());
    }
    if (std::strcmp(id, "fmt ") == 0) {
      if (chunk_size < 16) throw Error(ErrorCode::decode_error, "fmt chunk too small");
      size_t base = r.pos;
      Reader f{bytes.data(), bytes.size(), base};
      format = f.u16();
      channels = f.u16();
      sample_rate = f.u32();
      f.u32();  // byte rate
      f.u16();  // block align
      bits = f.u16();
      if (format == 0xFFFE && chunk_size >= 40) {
        // WAVE_FORMAT_EXTENSIBLE: sub-format GUID starts with the format tag.
        format = static_cast<uint16_t>(bytes[base + 24] | (bytes[base + 25] << 8));
      }
      have_fmt = true;
    } else if (std::strcmp(id, "data") == 0) {
      data_ptr = bytes.data() + r.pos;
      data_size = chunk_size;
    }
    r.pos += chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data_ptr == nullptr) {
    throw Error(ErrorCode::decode_error, "missing fmt or data chunk in " + path.string());
  }
  if (format != 1 && format != 3) {
    throw Error(ErrorCode::decode_error, "unsupported WAVE format tag " + std::to_string(format));
  }
  if (channels == 0 || sample_rate == 0 || bits == 0) {
    throw Error(ErrorCode::decode_error, "invalid fmt fields in " + path.string());
  }
  if (format == 3 && bits != 32) {
    throw Error(ErrorCode::decode_error, "float WAVE must be 32-bit");
  }

  size_t bytes_per_sample = bits / 8;
  size_t frame_size = bytes_per_sample * channels;
  size_t n_frames = frame_size > 0 ? data_size / frame_size : 0;
  if (n_frames == 0) throw Error(ErrorCode::empty_audio, "no samples in " + path.string());

  AudioClip clip;
  clip.sample_rate = static_cast<int>(sample_rate);
  clip.source_path = path.string();
  clip.samples.resize(n_frames);
  for (size_t i = 0; i < n_frames; ++i) {
    float acc = 0.0f;
    for (uint16_t c = 0; c < channels; ++c) {
      acc += decode_sample(data_ptr + i * frame_size + c * bytes_per_sample, bits, format);
    }
    clip.samples[i] = acc / static_cast<float>(channels);
  }
  clip.duration_s = static_cast<double>(n_frames) / sample_rate;
  return clip;
}

void write_wav(const std::filesystem::path& path, const std::vector<float>& samples,
               int sample_rate, int channels) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path.string() + " for writing");

  auto u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto u16 = [&](uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };

  uint32_t data_size = static_cast<uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  u32(36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  u32(16);
  u16(1);  // PCM
  u16(static_cast<uint16_t>(channels));
  u32(static_cast<uint32_t>(sample_rate));
  u32(static_cast<uint32_t>(sample_rate * channels * 2));
  u16(static_cast<uint16_t>(channels * 2));
  u16(16);
  out.write("data", 4);
  u32(data_size);
  for (float s : samples) {
    float clamped = std::clamp(s, -1.0f, 1.0f);
    auto v = static_cast<int16_t>(std::lround(clamped * 32767.0f));
    out.write(reinterpret_cast<const char*>(&v), 2);
  }
}

}  // namespace mgmd
