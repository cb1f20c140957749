#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "psmatch/date.hpp"
#include "psmatch/keyvalue.hpp"
#include "psmatch/matrix.hpp"

namespace psmatch {

enum class Group { Treated, Control };

enum class WindowRole { InitialControl, AdditionalControl, Treatment };

/// One hour of one corridor direction: covariates are through-movement
/// counts (veh/h), the outcome is segment speed (mph, possibly absent).
struct Observation {
  std::string week_id;
  Date date;
  int hour = 0;
  std::vector<double> covariates;
  std::optional<double> outcome;
  Group group = Group::Control;
};

struct WeekWindow {
  std::string label;
  Date start;
  Date end;
  WindowRole role = WindowRole::AdditionalControl;

  bool contains(const Date& d) const { return start <= d && d <= end; }
};

/// Declares where a study's columns and week windows live.
///
/// File format (`key = value`):
///   segment_id = WB1
///   covariates = WBT5, WBT6, WBT7
///   outcome = speed
///   hour_min = 6
///   hour_max = 21
///   week_days = 7
///   window = C1 control 2019-12-24 2019-12-30
///   window = T1 treatment 2020-12-20 2020-12-26
///
/// The first declared control window is the initial control week; later
/// control windows extend the pool in declaration order.
struct StudyConfig {
  std::string segment_id;
  std::vector<std::string> covariate_names;
  std::string outcome_column = "speed";
  int hour_min = 6;
  int hour_max = 21;
  int week_days = 7;
  std::vector<WeekWindow> windows;

  static StudyConfig parse(const KeyValueDoc& doc);
  static StudyConfig from_file(const std::string& path);

  void validate() const;
  std::vector<std::string> control_order() const;
  std::string to_document() const;
};

struct StudyTable {
  std::string segment_id;
  std::vector<std::string> covariate_names;
  std::vector<Observation> observations;
  /// Control window labels in expansion order; the initial control week
  /// comes first.
  std::vector<std::string> week_order;

  std::size_t treated_count() const;
  std::size_t control_count() const;
  std::vector<int> treated_indices() const;
  std::vector<int> control_indices() const;
  void validate() const;
};

struct LoadStats {
  std::size_t csv_rows = 0;
  std::size_t dropped_out_of_window = 0;
  std::size_t dropped_out_of_hours = 0;

  std::size_t dropped() const { return dropped_out_of_window + dropped_out_of_hours; }
};

struct LoadedStudy {
  StudyTable table;
  LoadStats stats;
};

/// Loads study data from CSV: columns `date` (ISO-8601), `hour` (integer),
/// one column per declared covariate, and the outcome column (blank allowed).
/// Rows outside every window or outside the hour window are dropped and
/// counted. Throws DataError for schema/parse problems (naming the column or
/// row) and when either group ends up empty.
LoadedStudy load_study(const std::string& csv_path, const StudyConfig& config);

/// Writes a table back to CSV in load order; together with load_study this
/// round-trips exactly.
void write_study_csv(const std::string& csv_path, const StudyTable& table,
                     const std::string& outcome_column = "speed");

/// Restricts the control pool to the first m windows of week_order; treated
/// observations are unchanged. Throws DataError when m is out of range.
StudyTable control_subset(const StudyTable& table, int m);

struct CovariateMatrix {
  Matrix x;
  std::vector<int> labels;             // 1 = treated, 0 = control
  std::vector<int> observation_index;  // matrix row -> table observation
};

/// Covariate matrix in stable order: treated block first, then controls,
/// each in table order.
CovariateMatrix covariate_matrix(const StudyTable& table);

}  // namespace psmatch
