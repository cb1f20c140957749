#include "psmatch/report.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "psmatch/version.hpp"

namespace psmatch {

namespace {

using ordered_json = nlohmann::ordered_json;

// Keeps the document valid JSON when a statistic degenerates to +/-inf.
ordered_json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string hash_hex(std::string_view bytes) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a64(bytes));
  return buf;
}

ordered_json config_json(const EvaluationConfig& config) {
  ordered_json j;
  j["method"] = std::string(method_name(config.method));
  j["alpha"] = config.alpha;
  j["csc_threshold"] = config.csc_threshold;
  j["max_weeks"] = config.max_weeks;
  j["seed"] = config.seed;
  j["threads"] = config.threads;
  j["with_replacement"] = config.matching.with_replacement;
  if (config.matching.caliper) {
    j["caliper"] = *config.matching.caliper;
  } else {
    j["caliper"] = nullptr;
  }
  ordered_json boost;
  boost["n_trees"] = config.model.boost.n_trees;
  boost["max_depth"] = config.model.boost.max_depth;
  boost["lambda"] = config.model.boost.lambda;
  boost["gamma"] = config.model.boost.gamma;
  boost["shrinkage"] = config.model.boost.shrinkage;
  boost["min_child_weight"] = config.model.boost.min_child_weight;
  boost["base_score"] = config.model.boost.base_score;
  boost["subsample"] = config.model.boost.subsample;
  j["boosting"] = boost;
  ordered_json probit;
  probit["max_iter"] = config.model.probit.max_iter;
  probit["tol"] = config.model.probit.tol;
  j["probit"] = probit;
  return j;
}

ordered_json summary_json(const FiveNumberSummary& s) {
  ordered_json j;
  j["min"] = s.min;
  j["q1"] = s.q1;
  j["median"] = s.median;
  j["q3"] = s.q3;
  j["max"] = s.max;
  return j;
}

ordered_json overlap_json(const OverlapReport& o) {
  ordered_json j;
  j["coverage"] = o.coverage;
  j["threshold"] = o.threshold;
  j["pass"] = o.pass;
  j["treated_range"] = ordered_json::array({o.treated_min, o.treated_max});
  j["control_range"] = ordered_json::array({o.control_min, o.control_max});
  j["treated_summary"] = summary_json(o.treated_summary);
  j["control_summary"] = summary_json(o.control_summary);
  return j;
}

ordered_json balance_rows_json(const BalanceReport& b) {
  ordered_json rows = ordered_json::array();
  for (const BalanceRow& r : b.rows) {
    ordered_json row;
    row["covariate"] = r.covariate;
    row["mean_treated"] = r.mean_treated;
    row["mean_control_before"] = r.mean_control_before;
    row["mean_control_after"] = r.mean_control_after;
    row["t_p_before"] = r.t_p_before;
    row["t_p_after"] = r.t_p_after;
    row["ks_stat_before"] = r.ks_stat_before;
    row["ks_stat_after"] = r.ks_stat_after;
    row["ks_p_before"] = r.ks_p_before;
    row["ks_p_after"] = r.ks_p_after;
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json balance_json(const BalanceReport& b) {
  ordered_json j;
  j["alpha"] = b.alpha;
  j["balanced"] = b.balanced;
  j["rows"] = balance_rows_json(b);
  return j;
}

ordered_json trace_json(const std::vector<IterationRecord>& trace) {
  ordered_json arr = ordered_json::array();
  for (const IterationRecord& rec : trace) {
    ordered_json j;
    j["m"] = rec.m;
    j["csc_pass"] = rec.csc_pass;
    j["coverage"] = rec.overlap.coverage;
    j["balance_run"] = rec.balance_run;
    j["balanced"] = rec.balanced;
    j["failing_covariates"] = rec.failing_covariates;
    if (rec.balance_run) j["balance"] = balance_json(rec.balance);
    arr.push_back(std::move(j));
  }
  return arr;
}

ordered_json distribution_json(const ScoreDistribution& d) {
  ordered_json j;
  j["summary"] = summary_json(d.summary);
  ordered_json cdf = ordered_json::array();
  for (const auto& [value, fraction] : d.cdf) cdf.push_back(ordered_json::array({value, fraction}));
  j["cdf"] = cdf;
  return j;
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

// Minimal fixed-width table writer.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header) : rows_{std::move(header)} {}

  void add_row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }

  std::string str() const {
    std::vector<std::size_t> widths;
    for (const auto& row : rows_) {
      if (widths.size() < row.size()) widths.resize(row.size(), 0);
      for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
    }
    std::ostringstream out;
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        out << row[i];
        if (i + 1 < row.size()) {
          out << std::string(widths[i] - row[i].size() + 2, ' ');
        }
      }
      out << "\n";
    }
    return out.str();
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace

struct ReportBuilder::Impl {
  std::string command;
  EvaluationConfig config;
  ordered_json segments = ordered_json::array();
  bool have_dates = false;
  Date data_start, data_end;

  void absorb_dates(const StudyTable& table) {
    for (const Observation& o : table.observations) {
      if (!have_dates) {
        data_start = data_end = o.date;
        have_dates = true;
      } else {
        if (o.date < data_start) data_start = o.date;
        if (data_end < o.date) data_end = o.date;
      }
    }
  }
};

ReportBuilder::ReportBuilder(std::string command, const EvaluationConfig& config)
    : impl_(std::make_unique<Impl>()) {
  impl_->command = std::move(command);
  impl_->config = config;
}

ReportBuilder::~ReportBuilder() = default;
ReportBuilder::ReportBuilder(ReportBuilder&&) noexcept = default;
ReportBuilder& ReportBuilder::operator=(ReportBuilder&&) noexcept = default;

void ReportBuilder::add_evaluation(const StudyTable& table, const EvaluationResult& result) {
  impl_->absorb_dates(table);
  ordered_json seg;
  seg["segment_id"] = table.segment_id;
  seg["method"] = std::string(method_name(result.method));
  seg["status"] = "ok";
  ordered_json eval;
  eval["effect_mph"] = json_number(result.effect_mph);
  eval["effect_p"] = json_number(result.effect_p);
  eval["sample_size_weeks"] = result.sample_size_weeks;
  seg["evaluation"] = eval;
  seg["overlap"] = overlap_json(result.overlap);
  seg["balance"] = balance_json(result.balance);
  seg["iterations"] = trace_json(result.trace);
  impl_->segments.push_back(std::move(seg));
}

void ReportBuilder::add_evaluation_failure(const StudyTable& table, Method method,
                                           const std::string& reason,
                                           const std::vector<IterationRecord>& trace) {
  impl_->absorb_dates(table);
  ordered_json seg;
  seg["segment_id"] = table.segment_id;
  seg["method"] = std::string(method_name(method));
  seg["status"] = "failed";
  seg["failure_reason"] = reason;
  seg["evaluation"] = nullptr;
  seg["iterations"] = trace_json(trace);
  impl_->segments.push_back(std::move(seg));
}

void ReportBuilder::add_balance_run(const StudyTable& table, const BalanceRunOutput& run) {
  impl_->absorb_dates(table);
  ordered_json seg;
  seg["segment_id"] = table.segment_id;
  seg["method"] = std::string(method_name(run.method));
  seg["m"] = run.m;
  seg["overlap"] = overlap_json(run.overlap);
  seg["balance"] = balance_json(run.balance);
  ordered_json scores;
  scores["treated"] = distribution_json(run.treated_scores);
  scores["control"] = distribution_json(run.control_scores);
  seg["score_distributions"] = scores;
  impl_->segments.push_back(std::move(seg));
}

void ReportBuilder::add_comparison(const StudyTable& table, const MethodComparison& comparison) {
  impl_->absorb_dates(table);
  ordered_json seg;
  seg["segment_id"] = table.segment_id;
  ordered_json methods = ordered_json::array();
  for (const MethodOutcome& outcome : comparison.outcomes) {
    ordered_json m;
    m["method"] = std::string(method_name(outcome.method));
    if (outcome.result) {
      m["status"] = "ok";
      ordered_json eval;
      eval["effect_mph"] = json_number(outcome.result->effect_mph);
      eval["effect_p"] = json_number(outcome.result->effect_p);
      eval["sample_size_weeks"] = outcome.result->sample_size_weeks;
      m["evaluation"] = eval;
      m["balance"] = balance_json(outcome.result->balance);
    } else {
      m["status"] = "failed";
      m["failure_reason"] = outcome.failure_reason;
      m["evaluation"] = nullptr;
    }
    m["iterations"] = trace_json(outcome.trace);
    methods.push_back(std::move(m));
  }
  seg["methods"] = methods;
  impl_->segments.push_back(std::move(seg));
}

std::string ReportBuilder::to_json() const {
  ordered_json root;
  ordered_json meta;
  meta["tool"] = "psmatch";
  meta["version"] = kVersion;
  meta["command"] = impl_->command;
  meta["seed"] = impl_->config.seed;
  const ordered_json cfg = config_json(impl_->config);
  meta["config"] = cfg;
  meta["config_hash"] = hash_hex(cfg.dump());
  if (impl_->have_dates) {
    meta["data_start"] = impl_->data_start.to_string();
    meta["data_end"] = impl_->data_end.to_string();
  }
  root["metadata"] = meta;
  root["segments"] = impl_->segments;
  return root.dump(2) + "\n";
}

std::string evaluation_config_hash(const EvaluationConfig& config) {
  return hash_hex(config_json(config).dump());
}

std::string format_p_value(double p) {
  if (p < 0.01) return "<0.01";
  return format_fixed(p, 2);
}

std::string format_balance_table(const std::string& segment_id, const BalanceReport& report) {
  std::ostringstream out;
  out << "Balancing test for segment " << segment_id << " (alpha = " << format_fixed(report.alpha, 2)
      << ")\n";
  TextTable table({"Covariate", "Measure", "Before Matching", "After Matching"});
  for (const BalanceRow& row : report.rows) {
    table.add_row({row.covariate, "Mean of treatment group", format_fixed(row.mean_treated, 1),
                   format_fixed(row.mean_treated, 1)});
    table.add_row({"", "Mean of control group", format_fixed(row.mean_control_before, 1),
                   format_fixed(row.mean_control_after, 1)});
    table.add_row({"", "T-test p-value", format_p_value(row.t_p_before), format_p_value(row.t_p_after)});
    table.add_row({"", "KS statistic", format_fixed(row.ks_stat_before, 2),
                   format_fixed(row.ks_stat_after, 2)});
    table.add_row({"", "KS test p-value", format_p_value(row.ks_p_before), format_p_value(row.ks_p_after)});
  }
  out << table.str();
  out << "Balanced: " << (report.balanced ? "yes" : "no") << "\n";
  return out.str();
}

std::string format_effect_table(std::span<const EffectRow> rows) {
  TextTable table({"Road segment", "Effect (mph)", "T-test p-value", "Sample size (week)"});
  for (const EffectRow& row : rows) {
    if (row.failed) {
      table.add_row({row.segment_id, "-", "-", "-"});
    } else {
      table.add_row({row.segment_id, format_fixed(row.effect_mph, 1), format_p_value(row.effect_p),
                     std::to_string(row.sample_size_weeks)});
    }
  }
  return table.str();
}

std::string format_comparison_table(std::span<const MethodComparison> comparisons) {
  std::vector<std::string> header{"Method", "Measure"};
  for (const MethodComparison& c : comparisons) header.push_back("Segment " + c.segment_id);
  TextTable table(std::move(header));

  const std::size_t n_methods = comparisons.empty() ? 0 : comparisons.front().outcomes.size();
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    std::vector<std::string> effect_row{std::string(method_name(comparisons.front().outcomes[mi].method)),
                                        "Effect (mph)"};
    std::vector<std::string> p_row{"", "T-test p-value"};
    std::vector<std::string> weeks_row{"", "Sample size (week)"};
    for (const MethodComparison& c : comparisons) {
      const MethodOutcome& outcome = c.outcomes[mi];
      if (outcome.result) {
        effect_row.push_back(format_fixed(outcome.result->effect_mph, 1));
        p_row.push_back(format_p_value(outcome.result->effect_p));
        weeks_row.push_back(std::to_string(outcome.result->sample_size_weeks));
      } else {
        effect_row.push_back("-");
        p_row.push_back("-");
        weeks_row.push_back("-");
      }
    }
    table.add_row(std::move(effect_row));
    table.add_row(std::move(p_row));
    table.add_row(std::move(weeks_row));
  }
  return table.str();
}

std::string format_iteration_table(const std::string& segment_id,
                                   std::span<const IterationRecord> trace,
                                   const EvaluationResult* final_result) {
  std::ostringstream out;
  out << "Iteration summary for segment " << segment_id << "\n";
  TextTable table({"Sample size (week)", "Variable", "T-test p-value", "KS statistic",
                   "KS test p-value", "Effect (mph)", "Effect p-value"});
  for (const IterationRecord& rec : trace) {
    const bool is_final = final_result != nullptr && rec.m == final_result->sample_size_weeks &&
                          rec.balanced;
    std::string effect = is_final ? format_fixed(final_result->effect_mph, 1) : "-";
    std::string effect_p = is_final ? format_p_value(final_result->effect_p) : "-";
    if (!rec.balance_run) {
      table.add_row({std::to_string(rec.m), "(common support failed, coverage " +
                     format_fixed(rec.overlap.coverage, 2) + ")", "-", "-", "-", effect, effect_p});
      continue;
    }
    bool first = true;
    for (const BalanceRow& row : rec.balance.rows) {
      table.add_row({first ? std::to_string(rec.m) : "", row.covariate, format_p_value(row.t_p_after),
                     format_fixed(row.ks_stat_after, 2), format_p_value(row.ks_p_after),
                     first ? effect : "", first ? effect_p : ""});
      first = false;
    }
  }
  out << table.str();
  return out.str();
}

std::string format_overlap_summary(const std::string& segment_id, const OverlapReport& overlap) {
  std::ostringstream out;
  out << "Propensity score overlap for segment " << segment_id << ": coverage "
      << format_fixed(overlap.coverage, 3) << " (threshold " << format_fixed(overlap.threshold, 2)
      << ", " << (overlap.pass ? "pass" : "fail") << ")\n";
  TextTable table({"Group", "Min", "Q1", "Median", "Q3", "Max"});
  auto add = [&](const char* group, const FiveNumberSummary& s) {
    table.add_row({group, format_fixed(s.min, 3), format_fixed(s.q1, 3), format_fixed(s.median, 3),
                   format_fixed(s.q3, 3), format_fixed(s.max, 3)});
  };
  add("Treatment", overlap.treated_summary);
  add("Control", overlap.control_summary);
  out << table.str();
  return out.str();
}

}  // namespace psmatch
