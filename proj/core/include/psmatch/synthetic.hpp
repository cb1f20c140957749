#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "psmatch/dataset.hpp"
#include "psmatch/keyvalue.hpp"

namespace psmatch {

/// Parameters of the synthetic before/after study generator. Hourly volumes
/// are lognormal around a deterministic profile; each control week applies a
/// level multiplier (`control_shifts`) and a peak/off-peak amplitude
/// (`control_amps`) that reshapes the distribution without moving its mean.
/// The outcome is a congestion-linear speed plus the injected effect.
///
/// File format mirrors the field names, e.g.:
///   covariates = 5
///   control_weeks = 16
///   delta = 2.0
///   control_shifts = 1.25, 1.25, 1.0
struct ScenarioSpec {
  std::string segment_id = "SYN1";
  int covariate_count = 5;
  int control_weeks = 10;
  double base_volume = 700.0;   // veh/h
  double volume_sigma = 0.12;   // lognormal sigma of hourly volumes
  double delta = 0.0;           // true treatment effect on speed, mph
  double noise = 1.5;           // outcome noise sd, mph
  double base_speed = 45.0;     // mph at zero volume
  double congestion_slope = 8.0;  // mph lost per 1000 veh/h of mean volume
  std::vector<double> control_shifts;  // per control week, recycled; default 1.0
  std::vector<double> control_amps;    // per control week, recycled; default 0.0
  double treatment_amp = 0.0;
  double diurnal_amp = 0.05;
  int hour_min = 6;
  int hour_max = 21;
  Date treatment_start{2020, 12, 20};

  static ScenarioSpec parse(const KeyValueDoc& doc);
  static ScenarioSpec from_file(const std::string& path);
  void validate() const;

  /// Week windows implied by the scenario: control weeks laid out
  /// consecutively before the treatment week, oldest first.
  StudyConfig study_config() const;

  double shift_for_week(int week) const;  // week in [0, control_weeks)
  double amp_for_week(int week) const;
};

struct GroundTruth {
  double delta = 0.0;
  std::vector<double> week_shifts;
  std::vector<double> week_amps;
  double treatment_amp = 0.0;
  std::uint64_t seed = 0;
  /// Expected unmatched difference-of-means estimate minus delta, computed
  /// from the deterministic part of the generator.
  double expected_naive_bias = 0.0;
};

struct SyntheticStudy {
  StudyTable table;
  StudyConfig config;
  GroundTruth truth;
};

/// Deterministic per (spec, seed). Covariate counts are rounded to whole
/// vehicles; outcomes keep full precision.
SyntheticStudy generate_synthetic(const ScenarioSpec& spec, std::uint64_t seed);

}  // namespace psmatch
