#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "psmatch/pipeline.hpp"

namespace psmatch {

struct ScoreDistribution {
  FiveNumberSummary summary;
  std::vector<std::pair<double, double>> cdf;  // ECDF step points
};

/// Output of a single fixed-m matching + balance pass (the `balance`
/// subcommand).
struct BalanceRunOutput {
  int m = 0;
  Method method = Method::XGBoost;
  OverlapReport overlap;
  BalanceReport balance;
  ScoreDistribution treated_scores;
  ScoreDistribution control_scores;
};

/// Assembles the structured report document: metadata (tool version, seed,
/// embedded config + recomputable hash, data date span) plus one section per
/// segment. Serialization is deterministic, so identical inputs and seed
/// produce byte-identical reports.
class ReportBuilder {
 public:
  ReportBuilder(std::string command, const EvaluationConfig& config);
  ~ReportBuilder();
  ReportBuilder(ReportBuilder&&) noexcept;
  ReportBuilder& operator=(ReportBuilder&&) noexcept;

  void add_evaluation(const StudyTable& table, const EvaluationResult& result);
  void add_evaluation_failure(const StudyTable& table, Method method, const std::string& reason,
                              const std::vector<IterationRecord>& trace);
  void add_balance_run(const StudyTable& table, const BalanceRunOutput& run);
  void add_comparison(const StudyTable& table, const MethodComparison& comparison);

  std::string to_json() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// FNV-1a hash of the canonical (compact) JSON encoding of the config, as
/// embedded in report metadata.
std::string evaluation_config_hash(const EvaluationConfig& config);

// Fixed-width text tables mirroring the report document. Effects print to
// 0.1 mph, p-values to two decimals with values below 0.01 as "<0.01";
// failed entries print as "-".

std::string format_p_value(double p);

std::string format_balance_table(const std::string& segment_id, const BalanceReport& report);

struct EffectRow {
  std::string segment_id;
  bool failed = false;
  double effect_mph = 0.0;
  double effect_p = 1.0;
  int sample_size_weeks = 0;
};
std::string format_effect_table(std::span<const EffectRow> rows);

std::string format_comparison_table(std::span<const MethodComparison> comparisons);

/// Per-iteration after-matching summary; the effect column is filled only
/// for the final balanced pool size.
std::string format_iteration_table(const std::string& segment_id,
                                   std::span<const IterationRecord> trace,
                                   const EvaluationResult* final_result);

std::string format_overlap_summary(const std::string& segment_id, const OverlapReport& overlap);

}  // namespace psmatch
