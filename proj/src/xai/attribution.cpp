#include "mgmd/xai/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "mgmd/core/array_io.hpp"
#include "mgmd/core/error.hpp"

namespace mgmd {

namespace {
const std::pair<Technique, const char*> kTechniqueNames[] = {
    {Technique::ig, "ig"},
    {Technique::occlusion, "occlusion"},
    {Technique::cam, "cam"},
    {Technique::gradcam, "gradcam"},
    {Technique::lime, "lime"},
};
}

const char* technique_name(Technique technique) {
  for (const auto& [t, name] : kTechniqueNames) {
    if (t == technique) return name;
  }
  return "unknown";
}

Technique parse_technique(const std::string& name) {
  for (const auto& [t, tech_name] : kTechniqueNames) {
    if (name == tech_name) return t;
  }
  throw Error(ErrorCode::config_error, "no attribution technique named '" + name + "'");
}

int64_t BinaryMask::count() const {
  int64_t n = 0;
  for (uint8_t v : selected) n += v != 0;
  return n;
}

BinaryMask threshold_topk(const AttributionMap& map, double fraction, Polarity polarity,
                          FractionMode mode) {
  if (fraction <= 0.0 || fraction > 1.0) {
    throw Error(ErrorCode::config_error, "fraction must be in (0, 1]");
  }
  if (!map.values.all_finite()) throw Error(ErrorCode::nan_input, "attribution map is not finite");
  const Tensor& v = map.values;
  int64_t cells = v.numel();

  std::vector<int64_t> order(static_cast<size_t>(cells));
  std::iota(order.begin(), order.end(), 0);
  if (polarity == Polarity::positive) {
    std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) { return v[a] > v[b]; });
  } else {
    std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) { return v[a] < v[b]; });
  }

  int64_t take = 0;
  if (mode == FractionMode::cells) {
    take = std::llround(fraction * static_cast<double>(cells));
  } else {
    // Mass mode: smallest prefix carrying `fraction` of the total mass on
    // this polarity's side.
    double total = 0.0;
    for (int64_t i = 0; i < cells; ++i) {
      double x = v[i];
      if (polarity == Polarity::positive ? x > 0 : x < 0) total += std::abs(x);
    }
    double want = fraction * total;
    double got = 0.0;
    while (take < cells && got < want) {
      double x = v[order[static_cast<size_t>(take)]];
      if (polarity == Polarity::positive ? x <= 0 : x >= 0) break;
      got += std::abs(x);
      ++take;
    }
  }
  take = std::clamp<int64_t>(take, 0, cells);

  BinaryMask mask;
  mask.rows = v.dim(0);
  mask.cols = v.dim(1);
  mask.fraction = fraction;
  mask.polarity = polarity;
  mask.selected.assign(static_cast<size_t>(cells), 0);
  for (int64_t i = 0; i < take; ++i) mask.selected[static_cast<size_t>(order[static_cast<size_t>(i)])] = 1;
  return mask;
}

void write_heatmap(const std::filesystem::path& path, const AttributionMap& map,
                   const std::string& model_fingerprint) {
  nlohmann::json meta = {
      {"technique", technique_name(map.technique)},
      {"params", map.params},
      {"seed", map.seed},
      {"sample_id", map.sample_id},
      {"model_fingerprint", model_fingerprint},
      {"target_class", map.target_class},
  };
  auto residual = map.params.find("completeness_residual");
  if (residual != map.params.end()) meta["completeness_residual"] = residual->second;
  write_f32_array(path, map.values, meta);
}

AttributionMap read_heatmap(const std::filesystem::path& path, std::string* model_fingerprint) {
  nlohmann::json meta;
  AttributionMap map;
  map.values = read_f32_array(path, &meta);
  map.technique = parse_technique(meta.at("technique").get<std::string>());
  map.target_class = meta.at("target_class").get<int>();
  map.sample_id = meta.at("sample_id").get<std::string>();
  map.seed = meta.at("seed").get<uint64_t>();
  map.params = meta.value("params", std::map<std::string, double>{});
  if (model_fingerprint) *model_fingerprint = meta.value("model_fingerprint", std::string{});
  return map;
}

Tensor ScoreModel::gradient(const Tensor&) const {
  throw Error(ErrorCode::non_differentiable, "model exposes no gradient");
}

}  // namespace mgmd
