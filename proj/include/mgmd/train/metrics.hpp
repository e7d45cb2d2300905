#pragma once

#include <cstdint>
#include <vector>

namespace mgmd {

struct ConfusionCounts {
  int64_t tp = 0, tn = 0, fp = 0, fn = 0;
};

struct Metrics {
  double accuracy = 0.0;
  double f1 = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  ConfusionCounts confusion;
  int64_t n = 0;
};

/// Binary metrics against `positive_class`. Ratios with an empty
/// denominator (0/0) are defined as 0 so degenerate runs stay reportable.
Metrics compute_metrics(const std::vector<int>& labels, const std::vector<int>& predictions,
                        int positive_class);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0,0) .. (1,1), fpr/tpr non-decreasing
  double auc = 0.0;
};

/// Threshold sweep over `scores` (higher = more positive). Tied scores
/// advance fpr and tpr in one simultaneous step. AUC is the trapezoidal
/// area under the resulting curve.
RocCurve compute_roc_auc(const std::vector<int>& labels, const std::vector<double>& scores,
                         int positive_class = 1);

}  // namespace mgmd
