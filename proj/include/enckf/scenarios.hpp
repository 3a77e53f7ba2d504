#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "enckf/filters.hpp"
#include "enckf/oracle.hpp"
#include "enckf/sysmodel.hpp"

namespace enckf {

enum class ScenarioName { spacecraft, ungm };

std::string to_string(ScenarioName name);
const std::vector<std::string>& scenario_names();

class UnknownScenario : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws UnknownScenario listing the valid names.
ScenarioName parse_scenario_name(std::string_view text);

/// Keys accepted in ScenarioSpec::overrides. All values are scalars (the
/// noise terms of both scenarios are scalar).
///   process_var        variance of the scalar process noise w
///   meas_var           variance of v
///   param_var          Q_b used by the consider filter (and by the truth
///                      draw unless truth_param_var is given)
///   param_ref          b_ref used by the consider filter
///   truth_param_mean   mean of the per-run true b
///   truth_param_var    variance of the per-run true b
///   p0_var             initial state variance (isotropic)
///   baseline_param     b reference used by the EnKF baseline
///   baseline_param_var b variance used by the EnKF baseline (0: b known)
const std::vector<std::string>& override_keys();

struct ScenarioSpec {
  ScenarioName name = ScenarioName::spacecraft;
  int steps = 40;
  int mc_runs = 100;
  std::vector<int> ensemble_sizes{13, 21};
  std::uint64_t seed = 0;
  std::map<std::string, double> overrides;

  void validate() const;
  /// Reference campaign shape (K, N, ensemble sizes) for this scenario.
  static ScenarioSpec defaults(ScenarioName name);
};

/// Everything needed to simulate truth and initialise both filters.
struct Scenario {
  ScenarioName name = ScenarioName::spacecraft;
  /// Carries the consider statistics (param_reference, param_cov).
  SystemModel model;
  Vector x0_truth;
  Vector x0_mean;
  Matrix p0;
  Vector truth_param_mean;
  Matrix truth_param_cov;
  /// Parameter statistics handed to the EnKF baseline.
  Vector baseline_param;
  Matrix baseline_param_cov;
  /// Set for linear scenarios; feeds the closed-form oracles.
  std::optional<oracle::LinearModel> linear;

  /// Model handed to a filter of the given mode: the consider filter gets
  /// (b_ref, Q_b), the EnKF baseline gets (baseline_param, baseline_param_cov).
  SystemModel filter_model(FilterMode mode) const;
};

/// x_{k+1} = [[0, 1], [-0.85, 1.70]] x_k + [0.0129, -1.2504]^T b + [0, 1]^T w,
/// z = x_2 + v, Q = 0.05^2, R = 0.5^2, b_ref = 0, Q_b = 0.5^2.
SystemModel build_spacecraft();

/// x_k = 0.5 x + 2.5 x / (1 + x^2) + 8 cos(1.2 (k - 1)) + w, z = x^2 / 20 + b + v,
/// Q = 1, R = 1, b_ref = 5, Q_b = 10^2.
SystemModel build_ungm();

/// Scenario constants with spec.overrides applied.
Scenario build_scenario(const ScenarioSpec& spec);

/// One truth trajectory, fully determined by (spec.seed, run).
TruthTrajectory generate_truth(const Scenario& scenario, const ScenarioSpec& spec, int run);

}  // namespace enckf
