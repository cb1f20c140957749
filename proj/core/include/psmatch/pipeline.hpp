#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "psmatch/dataset.hpp"
#include "psmatch/errors.hpp"
#include "psmatch/matching.hpp"

namespace psmatch {

struct EvaluationConfig {
  Method method = Method::XGBoost;
  double alpha = 0.05;
  double csc_threshold = 0.95;
  int max_weeks = 0;  // 0 means every available control window
  MatchOptions matching;
  ModelParams model;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
  int resolve_max_weeks(const StudyTable& table) const;
};

/// One control-pool size attempt: what was checked and why it failed.
struct IterationRecord {
  int m = 0;
  OverlapReport overlap;
  bool csc_pass = false;
  bool balance_run = false;
  BalanceReport balance;
  bool balanced = false;
  std::vector<std::string> failing_covariates;
};

struct EvaluationResult {
  std::string segment_id;
  Method method = Method::XGBoost;
  double effect_mph = 0.0;
  double effect_p = 1.0;
  int sample_size_weeks = 0;  // smallest m whose balance passed
  BalanceReport balance;
  OverlapReport overlap;
  std::vector<IterationRecord> trace;
};

/// Raised when no control-pool size up to max_weeks achieves common support
/// and balance; carries the attempted iterations.
class InsufficientControlPoolError : public ModelError {
 public:
  InsufficientControlPoolError(const std::string& message, std::vector<IterationRecord> trace_in)
      : ModelError(message), trace(std::move(trace_in)) {}

  std::vector<IterationRecord> trace;
};

/// Runs the full evaluation loop: for m = 1..max_weeks, estimate scores on
/// the m-week control pool, gate on common support, match, run the balance
/// test, and stop at the first balanced m with the effect estimate. The
/// outcome is only read after balance passes. Model-fitting errors propagate
/// with the iteration attached.
EvaluationResult evaluate(const StudyTable& table, const EvaluationConfig& config);

struct MethodOutcome {
  Method method = Method::XGBoost;
  std::optional<EvaluationResult> result;
  std::string failure_reason;  // empty on success
  std::vector<IterationRecord> trace;

  bool failed() const { return !result.has_value(); }
};

struct MethodComparison {
  std::string segment_id;
  std::vector<MethodOutcome> outcomes;  // probit, gbm, xgboost
};

/// Runs evaluate once per method with a shared seed and alpha; per-method
/// failures are embedded rather than thrown.
MethodComparison compare_methods(const StudyTable& table, const EvaluationConfig& base_config);

}  // namespace psmatch
