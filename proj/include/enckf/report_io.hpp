#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "enckf/harness.hpp"

namespace enckf {

/// Malformed or missing report files; the message carries file:line.
class ReportFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File name of the per-epoch CSV for one series, e.g. "ungm_enckf_m13.csv".
std::string series_file_name(ScenarioName scenario, FilterMode mode, int ensemble_size);

/// Per-epoch table with header `epoch,component,rmse` (both indices 1-based).
std::string series_csv(const RmseSeries& series);

/// Header `mode,m,mean_rmse,win_fraction,repair_count`. win_fraction is the
/// share of cells where this mode beats the other mode at the same m; empty
/// when the other mode is absent.
std::string summary_csv(const RmseReport& report);

nlohmann::json report_metadata(const RmseReport& report);

/// Scenario constants for audit (what `describe` prints).
nlohmann::json describe_scenario(ScenarioName name);

/// Writes every series CSV, summary.csv and metadata.json. Files are first
/// written as `<name>.partial` and renamed once complete.
void write_report(const RmseReport& report, const std::filesystem::path& dir);

/// Marker left behind when a campaign fails before completion.
void write_failure_marker(const std::filesystem::path& dir, const nlohmann::json& config,
                          const std::string& error);

/// Rebuilds the RMSE tables from a directory written by write_report.
RmseReport read_report(const std::filesystem::path& dir);

}  // namespace enckf
