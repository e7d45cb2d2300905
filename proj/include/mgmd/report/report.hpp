#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgmd/fidelity/fidelity.hpp"
#include "mgmd/train/metrics.hpp"

namespace mgmd {

struct ModelMetricsRow {
  std::string model;
  std::string dataset;
  Metrics metrics;
  double wall_time_s = 0.0;
};

nlohmann::json metrics_to_json(const Metrics& metrics);
Metrics metrics_from_json(const nlohmann::json& obj);

/// CSV columns: model, dataset, accuracy, f1, recall, precision, n,
/// wall_time_s. A JSON mirror sits next to it.
void write_metrics_csv(const std::filesystem::path& path, const std::vector<ModelMetricsRow>& rows);
void write_metrics_json(const std::filesystem::path& path, const std::vector<ModelMetricsRow>& rows);
std::vector<ModelMetricsRow> read_metrics_json(const std::filesystem::path& path);

void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve);

/// One curve per model with the AUC in the legend, plus the chance
/// diagonal.
void render_roc_plot(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, RocCurve>>& curves);

nlohmann::json single_fidelity_to_json(const FidelityReport& report);
void write_single_fidelity_csv(const std::filesystem::path& path,
                               const std::vector<FidelityReport>& reports);

nlohmann::json multi_fidelity_to_json(const MultiFidelityReport& report);
void write_multi_fidelity_csv(const std::filesystem::path& path, const MultiFidelityReport& report);
/// Raw per-run per-sample log, one JSON object per line; every aggregate
/// in the table is re-derivable from it.
void write_multi_fidelity_run_log(const std::filesystem::path& path,
                                  const MultiFidelityReport& report);

}  // namespace mgmd
