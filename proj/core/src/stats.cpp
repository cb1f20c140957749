#include "psmatch/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "psmatch/errors.hpp"

namespace psmatch {

namespace {

double mean_of(std::span<const double> a) {
  double s = 0;
  for (double v : a) s += v;
  return s / static_cast<double>(a.size());
}

// Unbiased sample variance.
double variance_of(std::span<const double> a, double mean) {
  double s = 0;
  for (double v : a) s += (v - mean) * (v - mean);
  return s / static_cast<double>(a.size() - 1);
}

// Continued fraction for the incomplete beta function, modified Lentz.
double beta_cf(double a, double b, double x) {
  constexpr double kTiny = 1e-30;
  constexpr double kEps = 1e-14;
  constexpr int kMaxIter = 500;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw Error("incomplete beta continued fraction did not converge");
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error("incomplete beta requires a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(ln_front) * beta_cf(a, b, x) / a;
  }
  return 1.0 - std::exp(ln_front) * beta_cf(b, a, 1.0 - x) / b;
}

double students_t_cdf(double t, double df) {
  if (df <= 0.0) throw Error("t CDF requires df > 0");
  if (t == 0.0) return 0.5;
  const double x = df / (df + t * t);
  const double tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

double kolmogorov_q(double lambda) {
  if (lambda <= 1e-9) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 1000; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_pdf(double x) {
  static const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::acos(-1.0));
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DataError("ks_statistic: empty sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());

  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() || j < sb.size()) {
    double x;
    if (i < sa.size() && j < sb.size()) {
      x = std::min(sa[i], sb[j]);
    } else if (i < sa.size()) {
      x = sa[i];
    } else {
      x = sb[j];
    }
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    const double gap = std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb);
    d = std::max(d, gap);
  }
  return d;
}

TestResult ks_test(std::span<const double> a, std::span<const double> b) {
  TestResult r;
  r.statistic = ks_statistic(a, b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ne = na * nb / (na + nb);
  const double sqrt_ne = std::sqrt(ne);
  const double lambda = r.statistic * (sqrt_ne + 0.12 + 0.11 / sqrt_ne);
  r.p_value = kolmogorov_q(lambda);
  r.df = 0.0;
  return r;
}

TestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DataError("welch_t_test: each sample needs >= 2 elements");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  const double va = variance_of(a, ma);
  const double vb = variance_of(b, mb);

  TestResult r;
  if (va == 0.0 && vb == 0.0) {
    if (ma == mb) {
      r.statistic = 0.0;
      r.p_value = 1.0;
    } else {
      r.statistic = ma > mb ? std::numeric_limits<double>::infinity()
                            : -std::numeric_limits<double>::infinity();
      r.p_value = 0.0;
      r.extreme = true;
    }
    r.df = 0.0;
    return r;
  }

  const double sea = va / na;
  const double seb = vb / nb;
  const double se2 = sea + seb;
  r.statistic = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 / (sea * sea / (na - 1.0) + seb * seb / (nb - 1.0));
  // Two-sided: P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2).
  r.p_value =
      std::clamp(regularized_incomplete_beta(0.5 * r.df, 0.5, r.df / (r.df + r.statistic * r.statistic)),
                 0.0, 1.0);
  return r;
}

FiveNumberSummary boxplot_summary(std::span<const double> a) {
  if (a.empty()) throw DataError("boxplot_summary: empty sample");
  std::vector<double> sorted(a.begin(), a.end());
  std::sort(sorted.begin(), sorted.end());
  FiveNumberSummary s;
  s.min = sorted.front();
  s.q1 = quantile_sorted(sorted, 0.25);
  s.median = quantile_sorted(sorted, 0.5);
  s.q3 = quantile_sorted(sorted, 0.75);
  s.max = sorted.back();
  return s;
}

std::vector<std::pair<double, double>> ecdf_points(std::span<const double> a) {
  std::vector<double> sorted(a.begin(), a.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> points;
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    points.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
  }
  return points;
}

}  // namespace psmatch
