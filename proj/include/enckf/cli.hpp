#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "enckf/harness.hpp"

namespace enckf {

/// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // runtime / campaign failure
inline constexpr int kExitUsage = 2;    // usage or configuration error

/// Effective configuration of `run`: campaign shape plus plumbing.
struct CliConfig {
  ScenarioSpec spec;
  CampaignOptions options;
  std::filesystem::path out_dir = "enckf_out";

  nlohmann::json to_json() const;
};

/// Layered settings as read from a config file or flags; unset fields fall
/// through to the next layer.
struct CliSettings {
  std::optional<std::string> scenario;
  std::optional<int> runs;
  std::optional<int> steps;
  std::optional<std::vector<int>> ensemble_sizes;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<std::string>> modes;
  std::optional<std::string> out_dir;
  std::optional<int> workers;
  std::optional<bool> recenter;
  std::optional<std::string> resample;
  std::optional<bool> enkf_zero_param_gain;
  std::map<std::string, double> overrides;
};

/// Parses a JSON config file. Unknown keys are rejected. Throws ModelError.
CliSettings load_config_file(const std::filesystem::path& path);

/// Resolves the effective config: flags > file > ENCKF_SEED (seed only) >
/// scenario defaults. `env_seed` is the raw ENCKF_SEED value, if any.
CliConfig resolve_config(const CliSettings& flags, const CliSettings& file,
                         const std::optional<std::string>& env_seed);

/// Entry point shared by the executable and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace enckf
