#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "psmatch/dataset.hpp"

namespace testutil {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("psmatch_test_" + std::to_string(counter.fetch_add(1)) + "_" +
             std::to_string(std::hash<const void*>{}(this) & 0xffff));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Bare-bones table with one covariate column per value entry; dates/hours
// are synthesized, weeks are "T1"/"C1".
inline psmatch::StudyTable make_table(const std::vector<std::vector<double>>& treated_covs,
                                      const std::vector<std::vector<double>>& control_covs,
                                      const std::vector<std::optional<double>>& treated_outcomes = {},
                                      const std::vector<std::optional<double>>& control_outcomes = {}) {
  psmatch::StudyTable table;
  table.segment_id = "TEST";
  const std::size_t width = treated_covs.empty() ? control_covs.front().size()
                                                 : treated_covs.front().size();
  for (std::size_t j = 0; j < width; ++j) table.covariate_names.push_back("X" + std::to_string(j + 1));
  table.week_order = {"C1"};

  auto add = [&table](const std::vector<std::vector<double>>& covs,
                      const std::vector<std::optional<double>>& outcomes, psmatch::Group group,
                      const std::string& week, psmatch::Date base) {
    for (std::size_t i = 0; i < covs.size(); ++i) {
      psmatch::Observation obs;
      obs.week_id = week;
      obs.date = base.add_days(static_cast<std::int64_t>(i / 16));
      obs.hour = 6 + static_cast<int>(i % 16);
      obs.covariates = covs[i];
      obs.group = group;
      if (i < outcomes.size()) obs.outcome = outcomes[i];
      table.observations.push_back(std::move(obs));
    }
  };
  add(treated_covs, treated_outcomes, psmatch::Group::Treated, "T1", psmatch::Date{2020, 12, 20});
  add(control_covs, control_outcomes, psmatch::Group::Control, "C1", psmatch::Date{2019, 12, 24});
  return table;
}

inline std::vector<std::vector<double>> column(const std::vector<double>& values) {
  std::vector<std::vector<double>> out;
  for (double v : values) out.push_back({v});
  return out;
}

}  // namespace testutil
