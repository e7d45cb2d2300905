#pragma once

#include <vector>

namespace mgmd {

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

/// Two-sided unequal-variance two-sample test with Welch-Satterthwaite
/// degrees of freedom. Degenerate convention: both variances zero gives
/// p = 1 for equal means, p = 0 otherwise. Requires >= 2 samples a side.
WelchResult welch_t_test_full(const std::vector<double>& a, const std::vector<double>& b);
double welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

/// Student-t CDF via the regularized incomplete beta function.
double student_t_cdf(double t, double df);

/// Regularized incomplete beta I_x(a, b) (continued-fraction evaluation).
double regularized_incomplete_beta(double a, double b, double x);

double sample_mean(const std::vector<double>& xs);
double sample_variance(const std::vector<double>& xs);  // n-1 denominator
double sample_stddev(const std::vector<double>& xs);

}  // namespace mgmd
