#include "psmatch/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "psmatch/errors.hpp"

namespace psmatch {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (start <= line.size()) {
    std::size_t end = line.find(',', start);
    if (end == std::string::npos) end = line.size();
    std::string field = line.substr(start, end - start);
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    std::size_t lead = 0;
    while (lead < field.size() && field[lead] == ' ') ++lead;
    fields.push_back(field.substr(lead));
    if (end == line.size()) break;
    start = end + 1;
  }
  return fields;
}

double parse_double_field(const std::string& field, int line_no, const std::string& column) {
  double out = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw DataError("row " + std::to_string(line_no) + ": column '" + column +
                    "': cannot parse number from '" + field + "'");
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

WindowRole role_from_token(const std::string& token, bool first_control) {
  if (token == "treatment") return WindowRole::Treatment;
  if (token == "control") {
    return first_control ? WindowRole::InitialControl : WindowRole::AdditionalControl;
  }
  throw ConfigError("window role must be 'control' or 'treatment', got '" + token + "'");
}

}  // namespace

StudyConfig StudyConfig::parse(const KeyValueDoc& doc) {
  StudyConfig cfg;
  cfg.segment_id = doc.require("segment_id");
  cfg.covariate_names = split_list(doc.require("covariates"));
  cfg.outcome_column = doc.get("outcome").value_or("speed");
  cfg.hour_min = doc.get_int("hour_min", 6);
  cfg.hour_max = doc.get_int("hour_max", 21);
  cfg.week_days = doc.get_int("week_days", 7);

  bool saw_control = false;
  for (const std::string& line : doc.get_all("window")) {
    std::vector<std::string> parts = split_list(line, ' ');
    if (parts.size() != 4) {
      throw ConfigError("window '" + line + "': expected '<label> <control|treatment> <start> <end>'");
    }
    WeekWindow w;
    w.label = parts[0];
    const bool is_control = parts[1] == "control";
    w.role = role_from_token(parts[1], is_control && !saw_control);
    if (is_control) saw_control = true;
    auto start = parse_date(parts[2]);
    auto end = parse_date(parts[3]);
    if (!start || !end) {
      throw ConfigError("window '" + w.label + "': dates must be ISO-8601 YYYY-MM-DD");
    }
    w.start = *start;
    w.end = *end;
    cfg.windows.push_back(std::move(w));
  }
  cfg.validate();
  return cfg;
}

StudyConfig StudyConfig::from_file(const std::string& path) {
  return parse(KeyValueDoc::parse_file(path));
}

void StudyConfig::validate() const {
  if (segment_id.empty()) throw ConfigError("segment_id must not be empty");
  if (covariate_names.empty()) throw ConfigError("at least one covariate column required");
  {
    std::unordered_set<std::string> seen;
    for (const auto& name : covariate_names) {
      if (!seen.insert(name).second) throw ConfigError("duplicate covariate column '" + name + "'");
    }
  }
  if (hour_min < 0 || hour_max > 23 || hour_min > hour_max) {
    throw ConfigError("hour window must satisfy 0 <= hour_min <= hour_max <= 23");
  }
  if (week_days < 1) throw ConfigError("week_days must be >= 1");

  bool has_treatment = false, has_control = false;
  std::unordered_set<std::string> labels;
  for (const WeekWindow& w : windows) {
    if (!labels.insert(w.label).second) throw ConfigError("duplicate window label '" + w.label + "'");
    if (!(w.start <= w.end)) {
      throw ConfigError("window '" + w.label + "': start date after end date");
    }
    if (span_days(w.start, w.end) != week_days) {
      throw ConfigError("window '" + w.label + "': spans " + std::to_string(span_days(w.start, w.end)) +
                        " days, expected " + std::to_string(week_days));
    }
    if (w.role == WindowRole::Treatment) has_treatment = true;
    else has_control = true;
  }
  if (!has_treatment) throw ConfigError("no treatment window declared");
  if (!has_control) throw ConfigError("no control window declared");
  for (std::size_t i = 0; i < windows.size(); ++i) {
    for (std::size_t j = i + 1; j < windows.size(); ++j) {
      if (windows[i].start <= windows[j].end && windows[j].start <= windows[i].end) {
        throw ConfigError("windows '" + windows[i].label + "' and '" + windows[j].label +
                          "' overlap in time");
      }
    }
  }
}

std::vector<std::string> StudyConfig::control_order() const {
  std::vector<std::string> order;
  for (const WeekWindow& w : windows) {
    if (w.role != WindowRole::Treatment) order.push_back(w.label);
  }
  return order;
}

std::string StudyConfig::to_document() const {
  std::ostringstream out;
  out << "segment_id = " << segment_id << "\n";
  out << "covariates = ";
  for (std::size_t i = 0; i < covariate_names.size(); ++i) {
    if (i) out << ", ";
    out << covariate_names[i];
  }
  out << "\n";
  out << "outcome = " << outcome_column << "\n";
  out << "hour_min = " << hour_min << "\n";
  out << "hour_max = " << hour_max << "\n";
  out << "week_days = " << week_days << "\n";
  for (const WeekWindow& w : windows) {
    out << "window = " << w.label << ' '
        << (w.role == WindowRole::Treatment ? "treatment" : "control") << ' '
        << w.start.to_string() << ' ' << w.end.to_string() << "\n";
  }
  return out.str();
}

std::size_t StudyTable::treated_count() const {
  return static_cast<std::size_t>(
      std::count_if(observations.begin(), observations.end(),
                    [](const Observation& o) { return o.group == Group::Treated; }));
}

std::size_t StudyTable::control_count() const { return observations.size() - treated_count(); }

std::vector<int> StudyTable::treated_indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    if (observations[i].group == Group::Treated) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> StudyTable::control_indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    if (observations[i].group == Group::Control) out.push_back(static_cast<int>(i));
  }
  return out;
}

void StudyTable::validate() const {
  if (treated_count() == 0 || control_count() == 0) {
    throw DataError("study table needs at least one treated and one control observation");
  }
  {
    std::unordered_set<std::string> seen;
    for (const auto& label : week_order) {
      if (!seen.insert(label).second) throw DataError("week_order repeats label '" + label + "'");
    }
  }
  for (const Observation& o : observations) {
    if (o.covariates.size() != covariate_names.size()) {
      throw DataError("observation covariate width " + std::to_string(o.covariates.size()) +
                      " does not match declared " + std::to_string(covariate_names.size()));
    }
    for (double v : o.covariates) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw DataError("covariates must be finite and >= 0");
    }
  }
}

LoadedStudy load_study(const std::string& csv_path, const StudyConfig& config) {
  config.validate();
  std::ifstream in(csv_path);
  if (!in) throw DataError("cannot open data file '" + csv_path + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("data file '" + csv_path + "' is empty");
  const std::vector<std::string> header = split_csv_line(line);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;

  auto require_column = [&](const std::string& name) {
    auto it = col.find(name);
    if (it == col.end()) throw DataError("missing column '" + name + "' in '" + csv_path + "'");
    return it->second;
  };
  const std::size_t date_col = require_column("date");
  const std::size_t hour_col = require_column("hour");
  const std::size_t outcome_col = require_column(config.outcome_column);
  std::vector<std::size_t> cov_cols;
  cov_cols.reserve(config.covariate_names.size());
  for (const auto& name : config.covariate_names) cov_cols.push_back(require_column(name));

  LoadedStudy out;
  out.table.segment_id = config.segment_id;
  out.table.covariate_names = config.covariate_names;
  out.table.week_order = config.control_order();

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++out.stats.csv_rows;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError("row " + std::to_string(line_no) + ": has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(header.size()));
    }

    auto date = parse_date(fields[date_col]);
    if (!date) {
      throw DataError("row " + std::to_string(line_no) + ": column 'date': cannot parse '" +
                      fields[date_col] + "'");
    }
    int hour = 0;
    {
      const std::string& f = fields[hour_col];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), hour);
      if (ec != std::errc{} || ptr != f.data() + f.size()) {
        throw DataError("row " + std::to_string(line_no) + ": column 'hour': cannot parse '" + f + "'");
      }
    }

    const WeekWindow* window = nullptr;
    for (const WeekWindow& w : config.windows) {
      if (w.contains(*date)) {
        window = &w;
        break;
      }
    }
    if (window == nullptr) {
      ++out.stats.dropped_out_of_window;
      continue;
    }
    if (hour < config.hour_min || hour > config.hour_max) {
      ++out.stats.dropped_out_of_hours;
      continue;
    }

    Observation obs;
    obs.week_id = window->label;
    obs.date = *date;
    obs.hour = hour;
    obs.group = window->role == WindowRole::Treatment ? Group::Treated : Group::Control;
    obs.covariates.reserve(cov_cols.size());
    for (std::size_t c = 0; c < cov_cols.size(); ++c) {
      const double v = parse_double_field(fields[cov_cols[c]], line_no, config.covariate_names[c]);
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw DataError("row " + std::to_string(line_no) + ": column '" + config.covariate_names[c] +
                        "': counts must be finite and >= 0");
      }
      obs.covariates.push_back(v);
    }
    if (!fields[outcome_col].empty()) {
      obs.outcome = parse_double_field(fields[outcome_col], line_no, config.outcome_column);
    }
    out.table.observations.push_back(std::move(obs));
  }

  if (out.table.treated_count() == 0) throw DataError("no treated observations loaded from '" + csv_path + "'");
  if (out.table.control_count() == 0) throw DataError("no control observations loaded from '" + csv_path + "'");
  out.table.validate();
  return out;
}

void write_study_csv(const std::string& csv_path, const StudyTable& table,
                     const std::string& outcome_column) {
  std::ofstream out(csv_path);
  if (!out) throw DataError("cannot write data file '" + csv_path + "'");
  out << "date,hour";
  for (const auto& name : table.covariate_names) out << ',' << name;
  out << ',' << outcome_column << "\n";
  for (const Observation& obs : table.observations) {
    out << obs.date.to_string() << ',' << obs.hour;
    for (double v : obs.covariates) out << ',' << format_double(v);
    out << ',';
    if (obs.outcome) out << format_double(*obs.outcome);
    out << "\n";
  }
}

StudyTable control_subset(const StudyTable& table, int m) {
  if (m < 1 || static_cast<std::size_t>(m) > table.week_order.size()) {
    throw DataError("control_subset: m = " + std::to_string(m) + " out of range [1, " +
                    std::to_string(table.week_order.size()) + "]");
  }
  std::unordered_set<std::string> keep(table.week_order.begin(),
                                       table.week_order.begin() + m);
  StudyTable out;
  out.segment_id = table.segment_id;
  out.covariate_names = table.covariate_names;
  out.week_order.assign(table.week_order.begin(), table.week_order.begin() + m);
  for (const Observation& obs : table.observations) {
    if (obs.group == Group::Treated || keep.count(obs.week_id)) out.observations.push_back(obs);
  }
  return out;
}

CovariateMatrix covariate_matrix(const StudyTable& table) {
  if (table.observations.empty()) throw DataError("covariate_matrix: empty table");
  CovariateMatrix out;
  const std::size_t n = table.observations.size();
  const std::size_t d = table.covariate_names.size();
  out.x = Matrix(n, d);
  out.labels.reserve(n);
  out.observation_index.reserve(n);

  std::size_t row = 0;
  auto emit = [&](Group group, int label) {
    for (std::size_t i = 0; i < n; ++i) {
      const Observation& obs = table.observations[i];
      if (obs.group != group) continue;
      for (std::size_t j = 0; j < d; ++j) out.x(row, j) = obs.covariates[j];
      out.labels.push_back(label);
      out.observation_index.push_back(static_cast<int>(i));
      ++row;
    }
  };
  emit(Group::Treated, 1);
  emit(Group::Control, 0);
  return out;
}

}  // namespace psmatch
