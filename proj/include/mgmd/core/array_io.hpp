#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "mgmd/core/tensor.hpp"

namespace mgmd {

/// Portable array container: raw little-endian float32, row-major, with a
/// JSON sidecar at `<path>.json` carrying the shape plus caller metadata.
void write_f32_array(const std::filesystem::path& path, const Tensor& tensor,
                     nlohmann::json metadata = nlohmann::json::object());

/// Reads the array back; the sidecar supplies the shape. Returns the
/// sidecar JSON through `metadata_out` when non-null.
Tensor read_f32_array(const std::filesystem::path& path,
                      nlohmann::json* metadata_out = nullptr);

/// Writes text atomically enough for our purposes (truncate + write).
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace mgmd
