#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mgmd/core/tensor.hpp"

namespace mgmd {

enum class Technique { ig, occlusion, cam, gradcam, lime };

const char* technique_name(Technique technique);
Technique parse_technique(const std::string& name);

/// Signed per-cell contribution grid aligned to the model input.
struct AttributionMap {
  Tensor values;  // (side, side) or (rows, cols) matching the input grid
  Technique technique = Technique::ig;
  int target_class = 0;
  std::string sample_id;
  uint64_t seed = 0;
  std::map<std::string, double> params;
};

enum class Polarity { positive, negative };
enum class FractionMode { cells, mass };

struct BinaryMask {
  std::vector<uint8_t> selected;  // row-major
  int64_t rows = 0;
  int64_t cols = 0;
  double fraction = 0.0;
  Polarity polarity = Polarity::positive;

  int64_t cells() const { return rows * cols; }
  int64_t count() const;
  bool at(int64_t r, int64_t c) const { return selected[static_cast<size_t>(r * cols + c)] != 0; }
};

/// Selects round(fraction * cells) cells with the largest (positive
/// polarity) or smallest (negative) values. Ties resolve in row-major
/// order. FractionMode::mass instead selects the smallest prefix holding
/// `fraction` of the polarity's total attribution mass.
BinaryMask threshold_topk(const AttributionMap& map, double fraction, Polarity polarity,
                          FractionMode mode = FractionMode::cells);

/// Heatmap persistence: raw float32 grid + JSON sidecar with technique,
/// params, seed, sample id, model fingerprint and target class.
void write_heatmap(const std::filesystem::path& path, const AttributionMap& map,
                   const std::string& model_fingerprint);
AttributionMap read_heatmap(const std::filesystem::path& path, std::string* model_fingerprint = nullptr);

/// Minimal differentiable-scorer view used by the model-agnostic
/// techniques; keeps them testable against hand-built models.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;
  virtual int64_t rows() const = 0;
  virtual int64_t cols() const = 0;
  virtual double score(const Tensor& grid) const = 0;
  virtual Tensor gradient(const Tensor& grid) const;
};

}  // namespace mgmd
