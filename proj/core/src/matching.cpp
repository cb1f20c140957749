#include "psmatch/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "psmatch/errors.hpp"

namespace psmatch {

namespace {

std::string describe_observation(const StudyTable& table, int index) {
  const Observation& o = table.observations[static_cast<std::size_t>(index)];
  return "observation " + std::to_string(index) + " (" + o.week_id + " " + o.date.to_string() +
         " hour " + std::to_string(o.hour) + ")";
}

double outcome_or_throw(const StudyTable& table, int index) {
  const Observation& o = table.observations[static_cast<std::size_t>(index)];
  if (!o.outcome) {
    throw DataError("missing outcome on matched " + describe_observation(table, index));
  }
  return *o.outcome;
}

void gather_matched_outcomes(const StudyTable& table, const MatchedPairs& pairs,
                             std::vector<double>& treated, std::vector<double>& matched) {
  treated.reserve(pairs.pairs.size());
  matched.reserve(pairs.pairs.size());
  for (const MatchedPair& p : pairs.pairs) {
    treated.push_back(outcome_or_throw(table, p.treated_index));
    matched.push_back(outcome_or_throw(table, p.control_index));
  }
}

void check_pairs_cover_treated(const StudyTable& table, const MatchedPairs& pairs) {
  const auto treated = table.treated_indices();
  if (pairs.pairs.size() != treated.size()) {
    throw DataError("matched pairs cover " + std::to_string(pairs.pairs.size()) + " of " +
                    std::to_string(treated.size()) + " treated observations");
  }
  std::vector<int> seen;
  seen.reserve(pairs.pairs.size());
  for (const MatchedPair& p : pairs.pairs) seen.push_back(p.treated_index);
  std::sort(seen.begin(), seen.end());
  if (seen != treated) throw DataError("matched pairs do not cover every treated observation exactly once");
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::XGBoost: return "xgboost";
    case Method::GBM: return "gbm";
    case Method::Probit: return "probit";
  }
  return "unknown";
}

std::optional<Method> method_from_name(std::string_view name) {
  if (name == "xgboost") return Method::XGBoost;
  if (name == "gbm") return Method::GBM;
  if (name == "probit") return Method::Probit;
  return std::nullopt;
}

std::vector<std::string> BalanceReport::failing_covariates() const {
  std::vector<std::string> out;
  for (const BalanceRow& row : rows) {
    if (!(row.t_p_after > alpha) || !(row.ks_p_after > alpha)) out.push_back(row.covariate);
  }
  return out;
}

PropensityScores estimate_scores(const StudyTable& table, Method method, const ModelParams& params,
                                 int n_threads) {
  if (table.treated_count() == 0 || table.control_count() == 0) {
    throw DataError("estimate_scores: both groups must be non-empty");
  }
  const CovariateMatrix design = covariate_matrix(table);

  PropensityScores out;
  out.method = method;
  out.scores.assign(table.observations.size(), 0.0);
  try {
    if (method == Method::Probit) {
      const ProbitModel model =
          fit_probit(design.x, design.labels, params.probit.max_iter, params.probit.tol);
      for (std::size_t i = 0; i < table.observations.size(); ++i) {
        out.scores[i] = predict_probit(model, table.observations[i].covariates);
      }
    } else {
      BoostParams boost = params.boost;
      boost.mode = method == Method::GBM ? BoostMode::FirstOrderGBM : BoostMode::SecondOrder;
      const Ensemble model = train(design.x, design.labels, boost, n_threads);
      for (std::size_t i = 0; i < table.observations.size(); ++i) {
        out.scores[i] = predict_proba(model, table.observations[i].covariates);
      }
    }
  } catch (const ModelError& e) {
    throw ModelError(std::string(method_name(method)) + ": " + e.what());
  }
  return out;
}

OverlapReport check_common_support(const PropensityScores& scores, const StudyTable& table,
                                   double threshold) {
  std::vector<double> treated, control;
  for (std::size_t i = 0; i < table.observations.size(); ++i) {
    (table.observations[i].group == Group::Treated ? treated : control).push_back(scores.scores[i]);
  }
  if (treated.empty() || control.empty()) {
    throw DataError("check_common_support: both groups must be non-empty");
  }

  OverlapReport report;
  report.threshold = threshold;
  report.treated_min = *std::min_element(treated.begin(), treated.end());
  report.treated_max = *std::max_element(treated.begin(), treated.end());
  report.control_min = *std::min_element(control.begin(), control.end());
  report.control_max = *std::max_element(control.begin(), control.end());

  std::size_t inside = 0;
  for (double s : treated) {
    if (s >= report.control_min && s <= report.control_max) ++inside;
  }
  report.coverage = static_cast<double>(inside) / static_cast<double>(treated.size());
  report.pass = report.coverage >= threshold;
  report.treated_summary = boxplot_summary(treated);
  report.control_summary = boxplot_summary(control);
  return report;
}

MatchedPairs match_nearest(const PropensityScores& scores, const StudyTable& table,
                           const MatchOptions& options) {
  const std::vector<int> treated = table.treated_indices();
  const std::vector<int> controls = table.control_indices();
  if (controls.empty()) throw DataError("match_nearest: no control observations");
  if (!options.with_replacement && controls.size() < treated.size()) {
    throw ModelError("match_nearest: control pool exhausted, " + std::to_string(controls.size()) +
                     " controls for " + std::to_string(treated.size()) + " treated");
  }

  MatchedPairs out;
  out.with_replacement = options.with_replacement;
  out.pairs.reserve(treated.size());
  std::vector<bool> used(table.observations.size(), false);

  for (int t : treated) {
    const double st = scores.scores[static_cast<std::size_t>(t)];
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int c : controls) {
      if (!options.with_replacement && used[static_cast<std::size_t>(c)]) continue;
      const double dist = std::fabs(st - scores.scores[static_cast<std::size_t>(c)]);
      if (dist < best_dist) {
        best_dist = dist;
        best = c;
      }
    }
    if (best < 0) {
      throw ModelError("match_nearest: control pool exhausted at treated index " + std::to_string(t));
    }
    if (options.caliper && best_dist > *options.caliper) {
      throw ModelError("match_nearest: no control within caliper " + std::to_string(*options.caliper) +
                       " for " + describe_observation(table, t) + " (nearest at " +
                       std::to_string(best_dist) + ")");
    }
    used[static_cast<std::size_t>(best)] = true;
    out.pairs.push_back(MatchedPair{t, best, best_dist});
  }
  return out;
}

BalanceReport balance_test(const StudyTable& table, const MatchedPairs& pairs, double alpha) {
  check_pairs_cover_treated(table, pairs);
  const std::vector<int> treated = table.treated_indices();
  const std::vector<int> controls = table.control_indices();

  BalanceReport report;
  report.alpha = alpha;
  report.rows.reserve(table.covariate_names.size());

  for (std::size_t j = 0; j < table.covariate_names.size(); ++j) {
    std::vector<double> vt, vc_before, vc_after;
    vt.reserve(treated.size());
    vc_before.reserve(controls.size());
    vc_after.reserve(pairs.pairs.size());
    for (int i : treated) vt.push_back(table.observations[static_cast<std::size_t>(i)].covariates[j]);
    for (int i : controls) vc_before.push_back(table.observations[static_cast<std::size_t>(i)].covariates[j]);
    for (const MatchedPair& p : pairs.pairs) {
      vc_after.push_back(table.observations[static_cast<std::size_t>(p.control_index)].covariates[j]);
    }

    BalanceRow row;
    row.covariate = table.covariate_names[j];
    auto mean_of = [](const std::vector<double>& v) {
      double s = 0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    row.mean_treated = mean_of(vt);
    row.mean_control_before = mean_of(vc_before);
    row.mean_control_after = mean_of(vc_after);

    const TestResult t_before = welch_t_test(vt, vc_before);
    const TestResult t_after = welch_t_test(vt, vc_after);
    const TestResult ks_before = ks_test(vt, vc_before);
    const TestResult ks_after = ks_test(vt, vc_after);
    row.t_p_before = t_before.p_value;
    row.t_p_after = t_after.p_value;
    row.ks_stat_before = ks_before.statistic;
    row.ks_stat_after = ks_after.statistic;
    row.ks_p_before = ks_before.p_value;
    row.ks_p_after = ks_after.p_value;
    report.rows.push_back(std::move(row));
  }

  report.balanced = true;
  for (const BalanceRow& row : report.rows) {
    if (!(row.t_p_after > alpha) || !(row.ks_p_after > alpha)) {
      report.balanced = false;
      break;
    }
  }
  return report;
}

double atet(const StudyTable& table, const MatchedPairs& pairs) {
  check_pairs_cover_treated(table, pairs);
  std::vector<double> treated, matched;
  gather_matched_outcomes(table, pairs, treated, matched);
  double sum_t = 0, sum_c = 0;
  for (double v : treated) sum_t += v;
  for (double v : matched) sum_c += v;
  const double n = static_cast<double>(pairs.pairs.size());
  return sum_t / n - sum_c / n;
}

TestResult effect_test(const StudyTable& table, const MatchedPairs& pairs) {
  check_pairs_cover_treated(table, pairs);
  std::vector<double> treated, matched;
  gather_matched_outcomes(table, pairs, treated, matched);
  return welch_t_test(treated, matched);
}

double naive_difference(const StudyTable& table) {
  double sum_t = 0, sum_c = 0;
  std::size_t n_t = 0, n_c = 0;
  for (std::size_t i = 0; i < table.observations.size(); ++i) {
    const Observation& o = table.observations[i];
    if (!o.outcome) {
      throw DataError("missing outcome on " + describe_observation(table, static_cast<int>(i)));
    }
    if (o.group == Group::Treated) {
      sum_t += *o.outcome;
      ++n_t;
    } else {
      sum_c += *o.outcome;
      ++n_c;
    }
  }
  if (n_t == 0 || n_c == 0) throw DataError("naive_difference: both groups must be non-empty");
  return sum_t / static_cast<double>(n_t) - sum_c / static_cast<double>(n_c);
}

}  // namespace psmatch
