#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psmatch/boosting.hpp"
#include "psmatch/dataset.hpp"
#include "psmatch/probit.hpp"
#include "psmatch/stats.hpp"

namespace psmatch {

enum class Method { XGBoost, GBM, Probit };

std::string_view method_name(Method m);
std::optional<Method> method_from_name(std::string_view name);

struct ModelParams {
  BoostParams boost;
  ProbitParams probit;
};

/// Propensity scores aligned to a StudyTable's observations.
struct PropensityScores {
  std::vector<double> scores;
  Method method = Method::XGBoost;
};

/// Common-support diagnostics: how much of the treated score distribution
/// lies inside the control score range, plus per-group spread summaries.
struct OverlapReport {
  double treated_min = 0.0;
  double treated_max = 0.0;
  double control_min = 0.0;
  double control_max = 0.0;
  double coverage = 0.0;
  double threshold = 0.95;
  bool pass = false;
  FiveNumberSummary treated_summary;
  FiveNumberSummary control_summary;
};

struct MatchedPair {
  int treated_index = -1;  // into StudyTable::observations
  int control_index = -1;
  double score_distance = 0.0;
};

struct MatchedPairs {
  std::vector<MatchedPair> pairs;
  bool with_replacement = true;
};

struct MatchOptions {
  bool with_replacement = true;
  std::optional<double> caliper;  // max score distance when set
};

/// Per-covariate before/after balancing-test results.
struct BalanceRow {
  std::string covariate;
  double mean_treated = 0.0;
  double mean_control_before = 0.0;
  double mean_control_after = 0.0;
  double t_p_before = 1.0;
  double t_p_after = 1.0;
  double ks_stat_before = 0.0;
  double ks_stat_after = 0.0;
  double ks_p_before = 1.0;
  double ks_p_after = 1.0;
};

struct BalanceReport {
  std::vector<BalanceRow> rows;
  double alpha = 0.05;
  bool balanced = false;

  std::vector<std::string> failing_covariates() const;
};

/// Fits the chosen propensity model on the table's covariates and scores
/// every observation. Deterministic given the boosting seed. Model errors
/// are rethrown tagged with the method name.
PropensityScores estimate_scores(const StudyTable& table, Method method, const ModelParams& params,
                                 int n_threads = 1);

/// Coverage = fraction of treated scores inside [min control, max control];
/// pass when coverage >= threshold.
OverlapReport check_common_support(const PropensityScores& scores, const StudyTable& table,
                                   double threshold = 0.95);

/// 1:1 nearest-neighbor matching on propensity scores. Treated observations
/// are processed in ascending index; distance ties break toward the lowest
/// control index. Without replacement, chosen controls leave the pool.
MatchedPairs match_nearest(const PropensityScores& scores, const StudyTable& table,
                           const MatchOptions& options = {});

/// Before/after covariate balance: "before" compares all treated against
/// all controls, "after" compares treated against the matched control
/// multiset (repeats counted). Balanced iff every after-matching p-value
/// exceeds alpha on both tests.
BalanceReport balance_test(const StudyTable& table, const MatchedPairs& pairs, double alpha);

/// Average treatment effect on the treated: mean treated outcome minus mean
/// matched-control outcome (mph). Throws DataError naming the observation
/// when a matched row lacks an outcome.
double atet(const StudyTable& table, const MatchedPairs& pairs);

/// Welch t-test of treated outcomes against matched-control outcomes.
TestResult effect_test(const StudyTable& table, const MatchedPairs& pairs);

/// Unmatched difference of outcome means (treated minus all controls); the
/// biased estimator the matched comparison corrects.
double naive_difference(const StudyTable& table);

}  // namespace psmatch
