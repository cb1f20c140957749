#pragma once

#include <span>
#include <vector>

#include "psmatch/matrix.hpp"

namespace psmatch {

struct ProbitModel {
  std::vector<double> coefficients;  // intercept first, then one per covariate
  bool converged = false;
  int iterations = 0;
};

struct ProbitParams {
  int max_iter = 100;
  double tol = 1e-8;
};

/// Maximum-likelihood probit regression by Newton iterations with
/// step-halving. Covariates are z-scored internally and the coefficients
/// back-transformed; constant covariates get a zero coefficient. Throws
/// ModelError on complete separation or a singular Hessian.
ProbitModel fit_probit(const Matrix& x, std::span<const int> y, int max_iter = 100,
                       double tol = 1e-8);

/// Phi(intercept + beta . x), clamped to [1e-9, 1 - 1e-9].
double predict_probit(const ProbitModel& model, std::span<const double> x);

}  // namespace psmatch
