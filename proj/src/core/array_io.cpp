#include "mgmd/core/array_io.hpp"

#include <fstream>

#include "mgmd/core/error.hpp"

namespace mgmd {

namespace fs = std::filesystem;

void write_f32_array(const fs::path& path, const Tensor& tensor, nlohmann::json metadata) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(tensor.data()),
            static_cast<std::streamsize>(tensor.numel() * sizeof(float)));
  if (!out) throw Error(ErrorCode::io_error, "short write to " + path.string());
  out.close();

  metadata["shape"] = tensor.shape();
  metadata["dtype"] = "float32";
  metadata["order"] = "row-major";
  write_text_file(path.string() + ".json", metadata.dump(2) + "\n");
}

Tensor read_f32_array(const fs::path& path, nlohmann::json* metadata_out) {
  fs::path sidecar(path.string() + ".json");
  if (!fs::exists(path) || !fs::exists(sidecar)) {
    throw Error(ErrorCode::missing_feature_cache, "array file or sidecar missing: " + path.string());
  }
  nlohmann::json meta = nlohmann::json::parse(read_text_file(sidecar));
  std::vector<int64_t> shape = meta.at("shape").get<std::vector<int64_t>>();

  Tensor tensor(shape);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  in.read(reinterpret_cast<char*>(tensor.data()),
          static_cast<std::streamsize>(tensor.numel() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(tensor.numel() * sizeof(float))) {
    throw Error(ErrorCode::io_error, "array file truncated: " + path.string());
  }
  if (metadata_out) *metadata_out = std::move(meta);
  return tensor;
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::io_error, "short write to " + path.string());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text;
}

}  // namespace mgmd
