#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "psmatch/errors.hpp"
#include "psmatch/probit.hpp"
#include "psmatch/stats.hpp"

using namespace psmatch;

namespace {

struct Synthetic {
  Matrix x;
  std::vector<int> y;
  std::vector<double> x_flat;
};

Synthetic bernoulli_probit_sample(int n, double b0, double b1, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> x_dist(-2.0, 2.0);
  std::uniform_real_distribution<double> u_dist(0.0, 1.0);
  Synthetic s;
  s.x = Matrix(static_cast<std::size_t>(n), 1);
  for (int i = 0; i < n; ++i) {
    const double xv = x_dist(rng);
    s.x(static_cast<std::size_t>(i), 0) = xv;
    s.x_flat.push_back(xv);
    const double p = normal_cdf(b0 + b1 * xv);
    s.y.push_back(u_dist(rng) < p ? 1 : 0);
  }
  return s;
}

// Log-likelihood gradient on the z-scored design, the scale the optimizer
// works on.
double standardized_gradient_norm(const Matrix& x, const std::vector<int>& y,
                                  const ProbitModel& model) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  std::vector<double> mean(d, 0.0), sd(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    double m = 0;
    for (std::size_t i = 0; i < n; ++i) m += x(i, j);
    m /= static_cast<double>(n);
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) ss += (x(i, j) - m) * (x(i, j) - m);
    mean[j] = m;
    sd[j] = std::sqrt(ss / static_cast<double>(n - 1));
  }
  double norm = 0.0;
  std::vector<double> grad(d + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double eta = model.coefficients[0];
    for (std::size_t j = 0; j < d; ++j) eta += model.coefficients[j + 1] * x(i, j);
    const double cdf = std::clamp(normal_cdf(eta), 1e-12, 1.0 - 1e-12);
    const double resid = normal_pdf(eta) * (static_cast<double>(y[i]) - cdf) / (cdf * (1.0 - cdf));
    grad[0] += resid;
    for (std::size_t j = 0; j < d; ++j) {
      if (sd[j] > 1e-12) grad[j + 1] += resid * (x(i, j) - mean[j]) / sd[j];
    }
  }
  for (double g : grad) norm = std::max(norm, std::fabs(g));
  return norm;
}

}  // namespace

TEST_CASE("balanced labels with a constant covariate give a null fit") {
  Matrix x(8, 1);
  for (std::size_t i = 0; i < 8; ++i) x(i, 0) = 3.0;
  const std::vector<int> y{0, 1, 0, 1, 0, 1, 0, 1};
  const ProbitModel model = fit_probit(x, y);
  CHECK(model.converged);
  CHECK(std::fabs(model.coefficients[0]) < 1e-8);
  CHECK(model.coefficients[1] == 0.0);
  const std::vector<double> probe{3.0};
  CHECK(predict_probit(model, probe) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("perfectly separable data raises a separation error") {
  Matrix x(4, 1);
  x(0, 0) = 1;
  x(1, 0) = 2;
  x(2, 0) = 3;
  x(3, 0) = 4;
  const std::vector<int> y{0, 0, 1, 1};
  CHECK_THROWS_WITH_AS(fit_probit(x, y), doctest::Contains("separation"), ModelError);
}

TEST_CASE("fit matches the grid-search MLE on a 40-row sample") {
  const Synthetic s = bernoulli_probit_sample(40, 0.3, 0.8, 2027);
  const ProbitModel model = fit_probit(s.x, s.y);
  REQUIRE(model.converged);
  const oracle::GridFit grid = oracle::probit_grid_mle(s.x_flat, s.y, -2.0, 2.0, 0.01);
  CHECK(std::fabs(model.coefficients[0] - grid.intercept) <= 0.02);
  CHECK(std::fabs(model.coefficients[1] - grid.slope) <= 0.02);
}

TEST_CASE("converged fits have a tiny standardized gradient") {
  for (std::uint64_t seed : {11ull, 12ull, 13ull, 14ull}) {
    const Synthetic s = bernoulli_probit_sample(60, -0.2, 0.6, seed);
    const ProbitModel model = fit_probit(s.x, s.y);
    REQUIRE(model.converged);
    CHECK(standardized_gradient_norm(s.x, s.y, model) < 1e-8);
  }
}

TEST_CASE("probit predictions at pinned coefficients") {
  SUBCASE("all-zero coefficients score one half") {
    ProbitModel model;
    model.coefficients = {0.0, 0.0, 0.0};
    const std::vector<double> probe{10.0, -3.0};
    CHECK(predict_probit(model, probe) == 0.5);
  }
  SUBCASE("intercept-only model scores Phi(intercept)") {
    ProbitModel model;
    model.coefficients = {1.0};
    const std::vector<double> empty;
    CHECK(predict_probit(model, empty) == doctest::Approx(oracle::normal_cdf(1.0)).epsilon(1e-7));
    CHECK(predict_probit(model, empty) == doctest::Approx(0.8413).epsilon(1e-4));
    model.coefficients = {-1.0};
    CHECK(predict_probit(model, empty) ==
          doctest::Approx(1.0 - oracle::normal_cdf(1.0)).epsilon(1e-7));
  }
  SUBCASE("width mismatch") {
    ProbitModel model;
    model.coefficients = {0.0, 1.0};
    const std::vector<double> wide{1.0, 2.0};
    CHECK_THROWS_AS(predict_probit(model, wide), DataError);
  }
}

TEST_CASE("fit is invariant to affine rescaling of a covariate") {
  const Synthetic s = bernoulli_probit_sample(50, 0.1, 0.7, 99);
  Matrix scaled(s.x.rows(), 1);
  for (std::size_t i = 0; i < s.x.rows(); ++i) scaled(i, 0) = 40.0 * s.x(i, 0) + 300.0;

  const ProbitModel base = fit_probit(s.x, s.y);
  const ProbitModel mapped = fit_probit(scaled, s.y);
  for (std::size_t i = 0; i < s.x.rows(); ++i) {
    const std::vector<double> a{s.x(i, 0)};
    const std::vector<double> b{scaled(i, 0)};
    CHECK(predict_probit(base, a) == doctest::Approx(predict_probit(mapped, b)).epsilon(1e-6));
  }
}

TEST_CASE("probit requires both classes and enough rows") {
  Matrix x(3, 1);
  x(0, 0) = 1;
  x(1, 0) = 2;
  x(2, 0) = 3;
  const std::vector<int> ones{1, 1, 1};
  CHECK_THROWS_AS(fit_probit(x, ones), ModelError);

  Matrix wide(2, 3);
  const std::vector<int> y{0, 1};
  CHECK_THROWS_AS(fit_probit(wide, y), ModelError);
}
