#include "mgmd/train/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "mgmd/core/error.hpp"

namespace mgmd {

Metrics compute_metrics(const std::vector<int>& labels, const std::vector<int>& predictions,
                        int positive_class) {
  if (labels.size() != predictions.size()) {
    throw Error(ErrorCode::length_mismatch, "labels and predictions differ in length");
  }
  if (labels.empty()) throw Error(ErrorCode::empty_input, "no samples to score");

  Metrics m;
  m.n = static_cast<int64_t>(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    bool truth = labels[i] == positive_class;
    bool pred = predictions[i] == positive_class;
    if (truth && pred) ++m.confusion.tp;
    else if (!truth && !pred) ++m.confusion.tn;
    else if (!truth && pred) ++m.confusion.fp;
    else ++m.confusion.fn;
  }
  const auto& c = m.confusion;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(m.n);
  m.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  m.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

RocCurve compute_roc_auc(const std::vector<int>& labels, const std::vector<double>& scores,
                         int positive_class) {
  if (labels.size() != scores.size()) {
    throw Error(ErrorCode::length_mismatch, "labels and scores differ in length");
  }
  int64_t n_pos = 0, n_neg = 0;
  for (int l : labels) (l == positive_class ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorCode::single_class, "ROC needs both classes present");
  }

  std::vector<size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  int64_t tp = 0, fp = 0;
  size_t i = 0;
  double area = 0.0;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  while (i < order.size()) {
    double threshold = scores[order[i]];
    // One simultaneous step over the whole tie group.
    while (i < order.size() && scores[order[i]] == threshold) {
      if (labels[order[i]] == positive_class) ++tp;
      else ++fp;
      ++i;
    }
    double fpr = static_cast<double>(fp) / static_cast<double>(n_neg);
    double tpr = static_cast<double>(tp) / static_cast<double>(n_pos);
    area += 0.5 * (fpr - prev_fpr) * (tpr + prev_tpr);
    curve.points.push_back({fpr, tpr, threshold});
    prev_fpr = fpr;
    prev_tpr = tpr;
  }
  curve.auc = area;
  return curve;
}

}  // namespace mgmd
