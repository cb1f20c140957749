#pragma once

#include <span>
#include <utility>
#include <vector>

namespace psmatch {

/// Outcome of a two-sample hypothesis test. `df` is meaningful for the
/// t-test only. `extreme` flags the degenerate zero-variance t case whose
/// statistic is encoded as +/-infinity.
struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double df = 0.0;
  bool extreme = false;
};

struct FiveNumberSummary {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Two-sample Kolmogorov-Smirnov statistic: the largest gap between the
/// empirical CDFs, evaluated at every pooled sample point with ties pooled.
/// https://en.wikipedia.org/wiki/Kolmogorov%E2%80%93Smirnov_test
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// KS statistic plus an asymptotic p-value with the small-sample continuity
/// correction lambda = D * (sqrt(ne) + 0.12 + 0.11/sqrt(ne)),
/// ne = na*nb/(na+nb).
TestResult ks_test(std::span<const double> a, std::span<const double> b);

/// Welch's unequal-variance t-test, two-sided. Requires >= 2 elements per
/// sample. If both sample variances are zero the result degenerates to
/// p = 1 for equal means and p = 0 (extreme statistic) otherwise.
TestResult welch_t_test(std::span<const double> a, std::span<const double> b);

/// Five-number summary with linear-interpolation quantiles.
FiveNumberSummary boxplot_summary(std::span<const double> a);

/// Empirical CDF step points: (value, fraction <= value) at each distinct
/// sorted value.
std::vector<std::pair<double, double>> ecdf_points(std::span<const double> a);

// Numerical building blocks, exposed for tests.

/// Regularized incomplete beta function I_x(a, b) via the Lentz continued
/// fraction. https://en.wikipedia.org/wiki/Beta_function#Incomplete_beta_function
double regularized_incomplete_beta(double a, double b, double x);

/// CDF of Student's t distribution with df degrees of freedom.
double students_t_cdf(double t, double df);

/// Kolmogorov distribution tail Q(lambda) = 2 sum_{k>=1} (-1)^{k-1}
/// exp(-2 k^2 lambda^2), truncated when a term drops below 1e-12.
double kolmogorov_q(double lambda);

double normal_cdf(double x);
double normal_pdf(double x);

}  // namespace psmatch
