#include "psmatch/pipeline.hpp"

namespace psmatch {

void EvaluationConfig::validate() const {
  if (!(alpha > 0.0) || !(alpha < 1.0)) throw ConfigError("alpha must be in (0, 1)");
  if (!(csc_threshold >= 0.0) || csc_threshold > 1.0) {
    throw ConfigError("csc_threshold must be in [0, 1]");
  }
  if (max_weeks < 0) throw ConfigError("max_weeks must be >= 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  model.boost.validate();
  if (model.probit.max_iter < 1) throw ConfigError("probit_max_iter must be >= 1");
  if (!(model.probit.tol > 0.0)) throw ConfigError("probit_tol must be > 0");
  if (matching.caliper && !(*matching.caliper > 0.0)) throw ConfigError("caliper must be > 0");
}

int EvaluationConfig::resolve_max_weeks(const StudyTable& table) const {
  const int available = static_cast<int>(table.week_order.size());
  if (max_weeks == 0) return available;
  if (max_weeks > available) {
    throw ConfigError("max_weeks = " + std::to_string(max_weeks) + " exceeds the " +
                      std::to_string(available) + " declared control windows");
  }
  return max_weeks;
}

EvaluationResult evaluate(const StudyTable& table, const EvaluationConfig& config) {
  config.validate();
  table.validate();
  const int max_weeks = config.resolve_max_weeks(table);

  ModelParams model = config.model;
  model.boost.seed = config.seed;

  std::vector<IterationRecord> trace;
  for (int m = 1; m <= max_weeks; ++m) {
    const StudyTable pool = control_subset(table, m);

    IterationRecord record;
    record.m = m;
    try {
      const PropensityScores scores = estimate_scores(pool, config.method, model, config.threads);
      record.overlap = check_common_support(scores, pool, config.csc_threshold);
      record.csc_pass = record.overlap.pass;
      if (!record.csc_pass) {
        trace.push_back(std::move(record));
        continue;  // a wider pool may restore overlap
      }

      const MatchedPairs pairs = match_nearest(scores, pool, config.matching);
      record.balance = balance_test(pool, pairs, config.alpha);
      record.balance_run = true;
      record.balanced = record.balance.balanced;
      record.failing_covariates = record.balance.failing_covariates();
      trace.push_back(record);

      if (record.balanced) {
        EvaluationResult result;
        result.segment_id = table.segment_id;
        result.method = config.method;
        result.effect_mph = atet(pool, pairs);
        result.effect_p = effect_test(pool, pairs).p_value;
        result.sample_size_weeks = m;
        result.balance = std::move(record.balance);
        result.overlap = record.overlap;
        result.trace = std::move(trace);
        return result;
      }
    } catch (const InsufficientControlPoolError&) {
      throw;
    } catch (const ModelError& e) {
      throw ModelError("m=" + std::to_string(m) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("m=" + std::to_string(m) + ": " + e.what());
    }
  }

  throw InsufficientControlPoolError(
      "no control pool of up to " + std::to_string(max_weeks) +
          " weeks satisfied common support and balance for method '" +
          std::string(method_name(config.method)) + "'",
      std::move(trace));
}

MethodComparison compare_methods(const StudyTable& table, const EvaluationConfig& base_config) {
  MethodComparison comparison;
  comparison.segment_id = table.segment_id;
  for (Method method : {Method::Probit, Method::GBM, Method::XGBoost}) {
    EvaluationConfig config = base_config;
    config.method = method;

    MethodOutcome outcome;
    outcome.method = method;
    try {
      EvaluationResult result = evaluate(table, config);
      outcome.trace = result.trace;
      outcome.result = std::move(result);
    } catch (const InsufficientControlPoolError& e) {
      outcome.failure_reason = e.what();
      outcome.trace = e.trace;
    } catch (const ModelError& e) {
      outcome.failure_reason = e.what();
    }
    comparison.outcomes.push_back(std::move(outcome));
  }
  return comparison;
}

}  // namespace psmatch
