#include "psmatch/probit.hpp"

#include <algorithm>
#include <cmath>

#include "psmatch/errors.hpp"
#include "psmatch/stats.hpp"

namespace psmatch {

namespace {

constexpr double kProbClamp = 1e-12;
constexpr double kSeparationNorm = 1e3;

// Cholesky solve of the (small, SPD) normal equations; returns false when
// the matrix is not positive definite.
bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 1e-12)) return false;
    const double ljj = std::sqrt(d);
    a[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / ljj;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * b[k];
    b[ii] = s / a[ii * n + ii];
  }
  return true;
}

double log_likelihood(const std::vector<double>& eta, std::span<const int> y) {
  double ll = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    const double phi = std::clamp(normal_cdf(eta[i]), kProbClamp, 1.0 - kProbClamp);
    ll += y[i] == 1 ? std::log(phi) : std::log1p(-phi);
  }
  return ll;
}

}  // namespace

ProbitModel fit_probit(const Matrix& x, std::span<const int> y, int max_iter, double tol) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n == 0 || y.size() != n) throw DataError("probit: X and y sizes do not match");
  bool has_pos = false, has_neg = false;
  for (int label : y) {
    if (label == 1) has_pos = true;
    else if (label == 0) has_neg = true;
    else throw DataError("probit: labels must be 0 or 1");
  }
  if (!has_pos || !has_neg) throw ModelError("probit: both classes required");
  if (d + 1 > n) throw ModelError("probit: more parameters than rows");

  // Standardize; constant covariates are excluded from the solve and get a
  // zero coefficient after back-transformation.
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  std::vector<bool> active(d, false);
  for (std::size_t j = 0; j < d; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += x(i, j);
    m /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (x(i, j) - m) * (x(i, j) - m);
    const double s = std::sqrt(ss / static_cast<double>(n - 1));
    mean[j] = m;
    sd[j] = s;
    active[j] = s > 1e-12;
  }
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < d; ++j)
    if (active[j]) cols.push_back(j);
  const std::size_t p = cols.size() + 1;  // intercept + active covariates

  Matrix z(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    z(i, 0) = 1.0;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      z(i, c + 1) = (x(i, cols[c]) - mean[cols[c]]) / sd[cols[c]];
    }
  }

  std::vector<double> beta(p, 0.0);
  std::vector<double> eta(n, 0.0);
  auto compute_eta = [&](const std::vector<double>& b) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < p; ++j) s += z(i, j) * b[j];
      eta[i] = s;
    }
  };

  bool converged = false;
  int iterations = 0;
  compute_eta(beta);
  double ll = log_likelihood(eta, y);

  for (int iter = 0; iter < max_iter; ++iter) {
    iterations = iter;

    // Complete separation: the current coefficients put every observation
    // strictly on its own side, so the likelihood is unbounded.
    bool all_separated = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double signed_margin = (y[i] == 1 ? 1.0 : -1.0) * eta[i];
      if (!(signed_margin > 0.0)) {
        all_separated = false;
        break;
      }
    }
    if (all_separated) throw ModelError("probit: perfect separation detected");

    // Score and Fisher information.
    std::vector<double> grad(p, 0.0);
    std::vector<double> info(p * p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double phi_cdf = std::clamp(normal_cdf(eta[i]), kProbClamp, 1.0 - kProbClamp);
      const double phi_pdf = normal_pdf(eta[i]);
      const double resid = phi_pdf * (static_cast<double>(y[i]) - phi_cdf) / (phi_cdf * (1.0 - phi_cdf));
      const double w = phi_pdf * phi_pdf / (phi_cdf * (1.0 - phi_cdf));
      for (std::size_t j = 0; j < p; ++j) {
        grad[j] += z(i, j) * resid;
        for (std::size_t k = 0; k <= j; ++k) info[j * p + k] += w * z(i, j) * z(i, k);
      }
    }
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = j + 1; k < p; ++k) info[j * p + k] = info[k * p + j];

    double grad_norm = 0.0;
    for (double g : grad) grad_norm = std::max(grad_norm, std::fabs(g));
    if (grad_norm < tol) {
      converged = true;
      break;
    }

    std::vector<double> step = grad;
    if (!cholesky_solve(info, step, p)) throw ModelError("probit: singular Hessian");

    // Step-halving until the likelihood improves.
    double scale = 1.0;
    bool improved = false;
    std::vector<double> candidate(p);
    for (int half = 0; half < 30; ++half) {
      for (std::size_t j = 0; j < p; ++j) candidate[j] = beta[j] + scale * step[j];
      compute_eta(candidate);
      const double cand_ll = log_likelihood(eta, y);
      if (cand_ll >= ll) {
        beta = candidate;
        ll = cand_ll;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) {
      compute_eta(beta);
      break;  // stalled; converged stays false unless the gradient test passed
    }

    double norm2 = 0.0;
    for (double b : beta) norm2 += b * b;
    if (std::sqrt(norm2) > kSeparationNorm) {
      throw ModelError("probit: separation detected, coefficients diverged");
    }
  }

  // Back-transform to the raw covariate scale.
  ProbitModel model;
  model.coefficients.assign(d + 1, 0.0);
  double intercept = beta[0];
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const std::size_t j = cols[c];
    model.coefficients[j + 1] = beta[c + 1] / sd[j];
    intercept -= beta[c + 1] * mean[j] / sd[j];
  }
  model.coefficients[0] = intercept;
  model.converged = converged;
  model.iterations = iterations;
  return model;
}

double predict_probit(const ProbitModel& model, std::span<const double> x) {
  if (x.size() + 1 != model.coefficients.size()) {
    throw DataError("probit: input width " + std::to_string(x.size()) + " does not match model width " +
                    std::to_string(model.coefficients.size() - 1));
  }
  double eta = model.coefficients[0];
  for (std::size_t j = 0; j < x.size(); ++j) eta += model.coefficients[j + 1] * x[j];
  return std::clamp(normal_cdf(eta), 1e-9, 1.0 - 1e-9);
}

}  // namespace psmatch
