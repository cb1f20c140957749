#include "psmatch/synthetic.hpp"

#include <cmath>
#include <random>

#include "psmatch/errors.hpp"

namespace psmatch {

namespace {

// Per-covariate level spread so intersections carry different volumes.
constexpr double kCovariateSpread[] = {1.0, 0.8, 1.2, 0.9, 1.1};

double covariate_base(const ScenarioSpec& spec, int j) {
  return spec.base_volume * kCovariateSpread[static_cast<std::size_t>(j) % 5];
}

// Morning/evening peak hours; exactly half of the default 6-21 window, so
// the +/-amp reshaping leaves the hourly mean unchanged.
bool is_peak_hour(int hour) {
  return (hour >= 7 && hour <= 10) || (hour >= 16 && hour <= 19);
}

double diurnal_factor(const ScenarioSpec& spec, int hour) {
  const double span = static_cast<double>(spec.hour_max - spec.hour_min + 1);
  const double phase = 2.0 * std::acos(-1.0) * static_cast<double>(hour - spec.hour_min) / span;
  return 1.0 + spec.diurnal_amp * std::sin(phase);
}

double deterministic_volume(const ScenarioSpec& spec, int j, int hour, double shift, double amp) {
  const double peak = is_peak_hour(hour) ? 1.0 + amp : 1.0 - amp;
  return covariate_base(spec, j) * diurnal_factor(spec, hour) * shift * peak;
}

// Mean volume across covariates and hours for one window's parameters.
double expected_mean_volume(const ScenarioSpec& spec, double shift, double amp) {
  double sum = 0.0;
  int count = 0;
  for (int h = spec.hour_min; h <= spec.hour_max; ++h) {
    for (int j = 0; j < spec.covariate_count; ++j) {
      sum += deterministic_volume(spec, j, h, shift, amp);
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

}  // namespace

ScenarioSpec ScenarioSpec::parse(const KeyValueDoc& doc) {
  ScenarioSpec spec;
  spec.segment_id = doc.get("segment_id").value_or(spec.segment_id);
  spec.covariate_count = doc.get_int("covariates", spec.covariate_count);
  spec.control_weeks = doc.get_int("control_weeks", spec.control_weeks);
  spec.base_volume = doc.get_double("base_volume", spec.base_volume);
  spec.volume_sigma = doc.get_double("volume_sigma", spec.volume_sigma);
  spec.delta = doc.get_double("delta", spec.delta);
  spec.noise = doc.get_double("noise", spec.noise);
  spec.base_speed = doc.get_double("base_speed", spec.base_speed);
  spec.congestion_slope = doc.get_double("congestion_slope", spec.congestion_slope);
  spec.treatment_amp = doc.get_double("treatment_amp", spec.treatment_amp);
  spec.diurnal_amp = doc.get_double("diurnal_amp", spec.diurnal_amp);
  spec.hour_min = doc.get_int("hour_min", spec.hour_min);
  spec.hour_max = doc.get_int("hour_max", spec.hour_max);
  if (auto v = doc.get("treatment_start")) {
    auto date = parse_date(*v);
    if (!date) throw ConfigError("scenario: treatment_start must be ISO-8601 YYYY-MM-DD");
    spec.treatment_start = *date;
  }
  auto parse_doubles = [&](const char* key, std::vector<double>& out) {
    if (auto v = doc.get(key)) {
      out.clear();
      for (const std::string& tok : split_list(*v)) {
        try {
          out.push_back(std::stod(tok));
        } catch (const std::exception&) {
          throw ConfigError(std::string("scenario: key '") + key + "': bad number '" + tok + "'");
        }
      }
    }
  };
  parse_doubles("control_shifts", spec.control_shifts);
  parse_doubles("control_amps", spec.control_amps);
  spec.validate();
  return spec;
}

ScenarioSpec ScenarioSpec::from_file(const std::string& path) {
  return parse(KeyValueDoc::parse_file(path));
}

void ScenarioSpec::validate() const {
  if (segment_id.empty()) throw ConfigError("scenario: segment_id must not be empty");
  if (covariate_count < 1) throw ConfigError("scenario: covariates must be >= 1");
  if (control_weeks < 1) throw ConfigError("scenario: control_weeks must be >= 1");
  if (!(base_volume > 0.0)) throw ConfigError("scenario: base_volume must be > 0");
  if (volume_sigma < 0.0) throw ConfigError("scenario: volume_sigma must be >= 0");
  if (noise < 0.0) throw ConfigError("scenario: noise must be >= 0");
  if (hour_min < 0 || hour_max > 23 || hour_min > hour_max) {
    throw ConfigError("scenario: hour window must satisfy 0 <= hour_min <= hour_max <= 23");
  }
  for (double s : control_shifts) {
    if (!(s > 0.0)) throw ConfigError("scenario: control_shifts must be > 0");
  }
  auto check_amp = [](double a) {
    if (a < 0.0 || a >= 1.0) throw ConfigError("scenario: amplitudes must be in [0, 1)");
  };
  for (double a : control_amps) check_amp(a);
  check_amp(treatment_amp);
}

double ScenarioSpec::shift_for_week(int week) const {
  if (control_shifts.empty()) return 1.0;
  return control_shifts[static_cast<std::size_t>(week) % control_shifts.size()];
}

double ScenarioSpec::amp_for_week(int week) const {
  if (control_amps.empty()) return 0.0;
  return control_amps[static_cast<std::size_t>(week) % control_amps.size()];
}

StudyConfig ScenarioSpec::study_config() const {
  StudyConfig cfg;
  cfg.segment_id = segment_id;
  for (int j = 0; j < covariate_count; ++j) cfg.covariate_names.push_back("TM" + std::to_string(j + 1));
  cfg.outcome_column = "speed";
  cfg.hour_min = hour_min;
  cfg.hour_max = hour_max;
  cfg.week_days = 7;
  for (int w = 0; w < control_weeks; ++w) {
    WeekWindow window;
    window.label = w == 0 ? "C1" : "AC" + std::to_string(w);
    window.start = treatment_start.add_days(-7 * static_cast<std::int64_t>(control_weeks - w));
    window.end = window.start.add_days(6);
    window.role = w == 0 ? WindowRole::InitialControl : WindowRole::AdditionalControl;
    cfg.windows.push_back(std::move(window));
  }
  WeekWindow treatment;
  treatment.label = "T1";
  treatment.start = treatment_start;
  treatment.end = treatment_start.add_days(6);
  treatment.role = WindowRole::Treatment;
  cfg.windows.push_back(std::move(treatment));
  cfg.validate();
  return cfg;
}

SyntheticStudy generate_synthetic(const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  SyntheticStudy out;
  out.config = spec.study_config();
  out.table.segment_id = spec.segment_id;
  out.table.covariate_names = out.config.covariate_names;
  out.table.week_order = out.config.control_order();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  // Mean-corrected lognormal so E[volume] equals the deterministic profile.
  const double sigma = spec.volume_sigma;
  const double mean_correction = -0.5 * sigma * sigma;

  for (const WeekWindow& window : out.config.windows) {
    const bool treated = window.role == WindowRole::Treatment;
    int week_index = 0;
    if (!treated) {
      for (std::size_t w = 0; w < out.table.week_order.size(); ++w) {
        if (out.table.week_order[w] == window.label) week_index = static_cast<int>(w);
      }
    }
    const double shift = treated ? 1.0 : spec.shift_for_week(week_index);
    const double amp = treated ? spec.treatment_amp : spec.amp_for_week(week_index);

    for (int day = 0; day < 7; ++day) {
      const Date date = window.start.add_days(day);
      for (int hour = spec.hour_min; hour <= spec.hour_max; ++hour) {
        Observation obs;
        obs.week_id = window.label;
        obs.date = date;
        obs.hour = hour;
        obs.group = treated ? Group::Treated : Group::Control;
        obs.covariates.reserve(static_cast<std::size_t>(spec.covariate_count));
        double volume_sum = 0.0;
        for (int j = 0; j < spec.covariate_count; ++j) {
          const double base = deterministic_volume(spec, j, hour, shift, amp);
          const double v = base * std::exp(sigma * gauss(rng) + mean_correction);
          const double count = std::max(0.0, std::round(v));
          obs.covariates.push_back(count);
          volume_sum += count;
        }
        const double mean_volume = volume_sum / static_cast<double>(spec.covariate_count);
        double speed = spec.base_speed - spec.congestion_slope * mean_volume / 1000.0 +
                       spec.noise * gauss(rng);
        if (treated) speed += spec.delta;
        obs.outcome = speed;
        out.table.observations.push_back(std::move(obs));
      }
    }
  }

  out.truth.delta = spec.delta;
  out.truth.treatment_amp = spec.treatment_amp;
  out.truth.seed = seed;
  for (int w = 0; w < spec.control_weeks; ++w) {
    out.truth.week_shifts.push_back(spec.shift_for_week(w));
    out.truth.week_amps.push_back(spec.amp_for_week(w));
  }
  // Naive difference-of-means = delta - slope * (mean treated volume - mean
  // pooled control volume) / 1000 in expectation; report the bias term.
  double control_mean = 0.0;
  for (int w = 0; w < spec.control_weeks; ++w) {
    control_mean += expected_mean_volume(spec, spec.shift_for_week(w), spec.amp_for_week(w));
  }
  control_mean /= static_cast<double>(spec.control_weeks);
  const double treated_mean = expected_mean_volume(spec, 1.0, spec.treatment_amp);
  out.truth.expected_naive_bias = -spec.congestion_slope * (treated_mean - control_mean) / 1000.0;

  out.table.validate();
  return out;
}

}  // namespace psmatch
