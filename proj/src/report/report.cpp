#include "mgmd/report/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mgmd/core/array_io.hpp"
#include "mgmd/core/error.hpp"
#include "mgmd/core/image.hpp"

namespace mgmd {

namespace {
std::string fmt(double v, int digits = 6) {
  std::ostringstream out;
  out.precision(digits);
  out << v;
  return out.str();
}
}  // namespace

nlohmann::json metrics_to_json(const Metrics& metrics) {
  return {
      {"accuracy", metrics.accuracy},
      {"f1", metrics.f1},
      {"recall", metrics.recall},
      {"precision", metrics.precision},
      {"n", metrics.n},
      {"confusion",
       {{"tp", metrics.confusion.tp},
        {"tn", metrics.confusion.tn},
        {"fp", metrics.confusion.fp},
        {"fn", metrics.confusion.fn}}},
  };
}

Metrics metrics_from_json(const nlohmann::json& obj) {
  Metrics m;
  m.accuracy = obj.at("accuracy").get<double>();
  m.f1 = obj.at("f1").get<double>();
  m.recall = obj.at("recall").get<double>();
  m.precision = obj.at("precision").get<double>();
  m.n = obj.at("n").get<int64_t>();
  const auto& c = obj.at("confusion");
  m.confusion = {c.at("tp").get<int64_t>(), c.at("tn").get<int64_t>(), c.at("fp").get<int64_t>(),
                 c.at("fn").get<int64_t>()};
  return m;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<ModelMetricsRow>& rows) {
  std::ostringstream out;
  out << "model,dataset,accuracy,f1,recall,precision,n,wall_time_s\n";
  for (const auto& row : rows) {
    out << row.model << "," << row.dataset << "," << fmt(row.metrics.accuracy) << ","
        << fmt(row.metrics.f1) << "," << fmt(row.metrics.recall) << ","
        << fmt(row.metrics.precision) << "," << row.metrics.n << "," << fmt(row.wall_time_s) << "\n";
  }
  write_text_file(path, out.str());
}

void write_metrics_json(const std::filesystem::path& path, const std::vector<ModelMetricsRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json obj = metrics_to_json(row.metrics);
    obj["model"] = row.model;
    obj["dataset"] = row.dataset;
    obj["wall_time_s"] = row.wall_time_s;
    arr.push_back(obj);
  }
  write_text_file(path, arr.dump(2) + "\n");
}

std::vector<ModelMetricsRow> read_metrics_json(const std::filesystem::path& path) {
  nlohmann::json arr = nlohmann::json::parse(read_text_file(path));
  std::vector<ModelMetricsRow> rows;
  for (const auto& obj : arr) {
    ModelMetricsRow row;
    row.model = obj.at("model").get<std::string>();
    row.dataset = obj.at("dataset").get<std::string>();
    row.wall_time_s = obj.value("wall_time_s", 0.0);
    row.metrics = metrics_from_json(obj);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve) {
  std::ostringstream out;
  out << "fpr,tpr,threshold\n";
  for (const auto& point : curve.points) {
    out << fmt(point.fpr) << "," << fmt(point.tpr) << "," << fmt(point.threshold) << "\n";
  }
  write_text_file(path, out.str());
}

void render_roc_plot(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, RocCurve>>& curves) {
  const int plot = 440, margin_l = 50, margin_b = 40, margin_t = 16;
  int legend_h = 14 * static_cast<int>(curves.size()) + 8;
  Canvas canvas(margin_l + plot + 20, margin_t + plot + margin_b + legend_h);

  Color axis{40, 40, 40};
  auto px = [&](double fpr) { return margin_l + static_cast<int>(std::lround(fpr * plot)); };
  auto py = [&](double tpr) { return margin_t + plot - static_cast<int>(std::lround(tpr * plot)); };

  canvas.draw_line(px(0), py(0), px(1), py(0), axis);
  canvas.draw_line(px(0), py(0), px(0), py(1), axis);
  for (int i = 0; i <= 4; ++i) {
    double v = i / 4.0;
    canvas.draw_line(px(v), py(0), px(v), py(0) + 3, axis);
    canvas.draw_text(px(v) - 9, py(0) + 6, fmt(v, 2), axis);
    canvas.draw_line(px(0) - 3, py(v), px(0), py(v), axis);
    canvas.draw_text(px(0) - 3 - Canvas::text_width(fmt(v, 2)), py(v) - 3, fmt(v, 2), axis);
  }
  canvas.draw_text(margin_l + plot / 2 - 36, margin_t + plot + 22, "FPR", axis);
  canvas.draw_text(4, margin_t + plot / 2, "TPR", axis);

  // Chance diagonal.
  for (int i = 0; i <= plot; i += 6) {
    canvas.set_pixel(margin_l + i, margin_t + plot - i, {150, 150, 150});
    canvas.set_pixel(margin_l + i + 1, margin_t + plot - i - 1, {150, 150, 150});
  }

  const Color palette[] = {{214, 39, 40},  {31, 119, 180}, {44, 160, 44},  {255, 127, 14},
                           {148, 103, 189}, {140, 86, 75},  {227, 119, 194}, {23, 190, 207},
                           {188, 189, 34},  {127, 127, 127}};
  for (size_t c = 0; c < curves.size(); ++c) {
    Color color = palette[c % (sizeof(palette) / sizeof(palette[0]))];
    const auto& points = curves[c].second.points;
    for (size_t i = 1; i < points.size(); ++i) {
      canvas.draw_line(px(points[i - 1].fpr), py(points[i - 1].tpr), px(points[i].fpr),
                       py(points[i].tpr), color);
    }
    int ly = margin_t + plot + 34 + 14 * static_cast<int>(c);
    canvas.draw_line(margin_l, ly + 3, margin_l + 18, ly + 3, color);
    char auc_buf[64];
    std::snprintf(auc_buf, sizeof(auc_buf), "%s (AUC=%.3f)", curves[c].first.c_str(),
                  curves[c].second.auc);
    canvas.draw_text(margin_l + 24, ly, auc_buf, axis);
  }
  canvas.write_png(path);
}

nlohmann::json single_fidelity_to_json(const FidelityReport& report) {
  return {
      {"technique", technique_name(report.technique)},
      {"baseline", metrics_to_json(report.baseline_metrics)},
      {"masked", metrics_to_json(report.masked_metrics)},
      {"n_samples", report.n_samples},
      {"avg_mask_pct", report.avg_mask_pct},
      {"policy",
       {{"fraction", report.policy.fraction},
        {"polarity", report.policy.polarity == Polarity::positive ? "positive" : "negative"},
        {"fill", report.policy.fill}}},
  };
}

void write_single_fidelity_csv(const std::filesystem::path& path,
                               const std::vector<FidelityReport>& reports) {
  // Mirrors the single-technique table: a Raw Spectrogram baseline row,
  // then one masked row per technique.
  std::ostringstream out;
  out << "visualisation,accuracy,f1,recall\n";
  if (!reports.empty()) {
    const Metrics& base = reports.front().baseline_metrics;
    out << "raw_spectrogram," << fmt(100.0 * base.accuracy, 4) << "," << fmt(100.0 * base.f1, 4)
        << "," << fmt(100.0 * base.recall, 4) << "\n";
  }
  for (const auto& report : reports) {
    out << technique_name(report.technique) << "," << fmt(100.0 * report.masked_metrics.accuracy, 4)
        << "," << fmt(100.0 * report.masked_metrics.f1, 4) << ","
        << fmt(100.0 * report.masked_metrics.recall, 4) << "\n";
  }
  write_text_file(path, out.str());
}

nlohmann::json multi_fidelity_to_json(const MultiFidelityReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows) {
    rows.push_back({
        {"combination_size", row.k},
        {"avg_mask_mean", row.avg_mask_mean},
        {"avg_mask_std", row.avg_mask_std},
        {"accuracy_mean", row.accuracy_mean},
        {"accuracy_std", row.accuracy_std},
        {"p_value", row.p_value < 0 ? nlohmann::json(nullptr) : nlohmann::json(row.p_value)},
        {"mask_reduction_pct", row.mask_reduction_pct},
        {"accuracy_change_pct", row.accuracy_change_pct},
    });
  }
  std::vector<std::string> technique_names;
  for (Technique t : report.techniques) technique_names.push_back(technique_name(t));
  return {
      {"rows", rows},
      {"techniques", technique_names},
      {"runs", report.n_runs},
      {"accuracy_definition", "standard accuracy on the masked evaluation subset"},
      {"policy",
       {{"fraction", report.policy.fraction},
        {"polarity", report.policy.polarity == Polarity::positive ? "positive" : "negative"},
        {"fill", report.policy.fill}}},
  };
}

void write_multi_fidelity_csv(const std::filesystem::path& path, const MultiFidelityReport& report) {
  std::ostringstream out;
  out << "combination_size,avg_mask,avg_mask_std,accuracy,accuracy_std,p_value,mask_reduction,"
         "accuracy_change\n";
  for (const auto& row : report.rows) {
    out << row.k << "," << fmt(row.avg_mask_mean, 4) << "," << fmt(row.avg_mask_std, 4) << ","
        << fmt(100.0 * row.accuracy_mean, 4) << "," << fmt(100.0 * row.accuracy_std, 4) << ",";
    if (row.p_value < 0) out << "-";
    else out << fmt(row.p_value, 4);
    out << "," << (row.p_value < 0 ? "-" : fmt(row.mask_reduction_pct, 4)) << ","
        << (row.p_value < 0 ? "-" : fmt(row.accuracy_change_pct, 4)) << "\n";
  }
  write_text_file(path, out.str());
}

void write_multi_fidelity_run_log(const std::filesystem::path& path,
                                  const MultiFidelityReport& report) {
  std::ostringstream out;
  for (const auto& run : report.runs) {
    for (const auto& entry : run.entries) {
      for (const auto& sample : entry.samples) {
        nlohmann::json line = {
            {"run", run.run_index},       {"run_seed", run.run_seed},
            {"k", entry.k},               {"id", sample.id},
            {"label", sample.label},      {"masked_prediction", sample.masked_prediction},
            {"mask_pct", sample.mask_pct},
        };
        out << line.dump() << "\n";
      }
    }
  }
  write_text_file(path, out.str());
}

}  // namespace mgmd
