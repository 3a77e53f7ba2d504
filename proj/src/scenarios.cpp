#include "enckf/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "enckf/numkit.hpp"

namespace enckf {

namespace {

// Spacecraft attitude tracking (drift signal with an unknown gyro bias).
const Matrix& spacecraft_a() {
  static const Matrix a = (Matrix(2, 2) << 0.0, 1.0, -0.85, 1.70).finished();
  return a;
}
const Matrix& spacecraft_b() {
  static const Matrix b = (Matrix(2, 1) << 0.0129, -1.2504).finished();
  return b;
}
const Matrix& spacecraft_g() {
  static const Matrix g = (Matrix(2, 1) << 0.0, 1.0).finished();
  return g;
}
const Matrix& spacecraft_h() {
  static const Matrix h = (Matrix(1, 2) << 0.0, 1.0).finished();
  return h;
}

constexpr double kSpacecraftProcessVar = 0.0025;  // 0.05^2
constexpr double kSpacecraftMeasVar = 0.25;       // 0.5^2
constexpr double kSpacecraftParamVar = 0.25;      // 0.5^2
constexpr double kSpacecraftP0 = 0.025;

constexpr double kUngmProcessVar = 1.0;
constexpr double kUngmMeasVar = 1.0;
constexpr double kUngmParamMean = 5.0;
constexpr double kUngmParamVar = 100.0;  // 10^2
constexpr double kUngmP0 = 10.0;

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }
Vector scalar_vec(double v) { return Vector::Constant(1, v); }

double override_or(const ScenarioSpec& spec, const std::string& key, double fallback) {
  const auto it = spec.overrides.find(key);
  return it == spec.overrides.end() ? fallback : it->second;
}

}  // namespace

std::string to_string(ScenarioName name) {
  return name == ScenarioName::spacecraft ? "spacecraft" : "ungm";
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"spacecraft", "ungm"};
  return names;
}

ScenarioName parse_scenario_name(std::string_view text) {
  if (text == "spacecraft") return ScenarioName::spacecraft;
  if (text == "ungm") return ScenarioName::ungm;
  throw UnknownScenario("unknown scenario '" + std::string(text) +
                        "'; known scenarios: spacecraft, ungm");
}

const std::vector<std::string>& override_keys() {
  static const std::vector<std::string> keys{
      "baseline_param", "baseline_param_var", "meas_var",         "p0_var",
      "param_ref",      "param_var",          "process_var",      "truth_param_mean",
      "truth_param_var"};
  return keys;
}

void ScenarioSpec::validate() const {
  if (steps < 1) throw ModelError("steps must be at least 1");
  if (mc_runs < 1) throw ModelError("mc_runs must be at least 1");
  if (ensemble_sizes.empty()) throw ModelError("at least one ensemble size is required");
  for (int m : ensemble_sizes) {
    if (m < 2) throw ModelError("every ensemble size must be at least 2");
  }
  const auto& keys = override_keys();
  for (const auto& [key, value] : overrides) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ModelError("unknown override '" + key + "'");
    }
    if (!std::isfinite(value)) throw ModelError("override '" + key + "' is not finite");
    if (key.ends_with("_var") && value < 0.0) {
      throw ModelError("override '" + key + "' must be non-negative");
    }
  }
}

ScenarioSpec ScenarioSpec::defaults(ScenarioName name) {
  ScenarioSpec spec;
  spec.name = name;
  if (name == ScenarioName::spacecraft) {
    spec.steps = 40;
    spec.mc_runs = 100;
    spec.ensemble_sizes = {13, 21};
  } else {
    spec.steps = 200;
    spec.mc_runs = 50;
    spec.ensemble_sizes = {13, 51};
  }
  return spec;
}

SystemModel build_spacecraft() {
  SystemModel model;
  model.state_dim = 2;
  model.meas_dim = 1;
  model.param_dim = 1;
  model.transition = [](const Vector& x, const Vector& b, int) -> Vector {
    return spacecraft_a() * x + spacecraft_b() * b;
  };
  model.measurement = [](const Vector& x, const Vector&) -> Vector {
    return spacecraft_h() * x;
  };
  model.process_noise_cov = spacecraft_g() * kSpacecraftProcessVar * spacecraft_g().transpose();
  model.meas_noise_cov = scalar(kSpacecraftMeasVar);
  model.param_reference = scalar_vec(0.0);
  model.param_cov = scalar(kSpacecraftParamVar);
  return model;
}

SystemModel build_ungm() {
  SystemModel model;
  model.state_dim = 1;
  model.meas_dim = 1;
  model.param_dim = 1;
  // The bias enters the measurement only.
  model.transition = [](const Vector& x, const Vector&, int k) -> Vector {
    const double s = x(0);
    return scalar_vec(0.5 * s + 2.5 * s / (1.0 + s * s) + 8.0 * std::cos(1.2 * (k - 1)));
  };
  model.measurement = [](const Vector& x, const Vector& b) -> Vector {
    return scalar_vec(x(0) * x(0) / 20.0 + b(0));
  };
  model.process_noise_cov = scalar(kUngmProcessVar);
  model.meas_noise_cov = scalar(kUngmMeasVar);
  model.param_reference = scalar_vec(kUngmParamMean);
  model.param_cov = scalar(kUngmParamVar);
  return model;
}

Scenario build_scenario(const ScenarioSpec& spec) {
  spec.validate();
  Scenario sc;
  sc.name = spec.name;
  const bool craft = spec.name == ScenarioName::spacecraft;
  sc.model = craft ? build_spacecraft() : build_ungm();

  const double process_var =
      override_or(spec, "process_var", craft ? kSpacecraftProcessVar : kUngmProcessVar);
  const double meas_var = override_or(spec, "meas_var", craft ? kSpacecraftMeasVar : kUngmMeasVar);
  const double param_var =
      override_or(spec, "param_var", craft ? kSpacecraftParamVar : kUngmParamVar);
  const double param_ref = override_or(spec, "param_ref", craft ? 0.0 : kUngmParamMean);
  const double p0_var = override_or(spec, "p0_var", craft ? kSpacecraftP0 : kUngmP0);

  if (craft) {
    sc.model.process_noise_cov = spacecraft_g() * process_var * spacecraft_g().transpose();
    sc.x0_truth = (Vector(2) << 2.0, 1.0).finished();
  } else {
    sc.model.process_noise_cov = scalar(process_var);
    sc.x0_truth = scalar_vec(0.0);
  }
  sc.model.meas_noise_cov = scalar(meas_var);
  sc.model.param_reference = scalar_vec(param_ref);
  sc.model.param_cov = scalar(param_var);
  sc.model.validate();

  sc.x0_mean = sc.x0_truth;
  sc.p0 = p0_var * Matrix::Identity(sc.model.state_dim, sc.model.state_dim);
  sc.truth_param_mean = scalar_vec(override_or(spec, "truth_param_mean", param_ref));
  sc.truth_param_cov = scalar(override_or(spec, "truth_param_var", param_var));
  sc.baseline_param = scalar_vec(override_or(spec, "baseline_param", param_ref));
  sc.baseline_param_cov = scalar(override_or(spec, "baseline_param_var", 0.0));

  if (craft) {
    oracle::LinearModel lin;
    lin.a = spacecraft_a();
    lin.b = spacecraft_b();
    lin.g = spacecraft_g();
    lin.h = spacecraft_h();
    lin.d = Matrix::Zero(1, 1);
    lin.q = scalar(process_var);
    lin.r = scalar(meas_var);
    lin.q_b = scalar(param_var);
    lin.b_ref = scalar_vec(param_ref);
    sc.linear = lin;
  }
  return sc;
}

SystemModel Scenario::filter_model(FilterMode mode) const {
  SystemModel m = model;
  if (mode == FilterMode::enkf) {
    m.param_reference = baseline_param;
    m.param_cov = baseline_param_cov;
  }
  return m;
}

TruthTrajectory generate_truth(const Scenario& scenario, const ScenarioSpec& spec, int run) {
  spec.validate();
  const SystemModel& model = scenario.model;
  const auto r = static_cast<std::uint64_t>(run);
  SeededRng param_rng(spec.seed, stream_id(r, 0, StreamPurpose::truth_param));
  SeededRng process_rng(spec.seed, stream_id(r, 0, StreamPurpose::truth_process));
  SeededRng meas_rng(spec.seed, stream_id(r, 0, StreamPurpose::truth_measurement));

  const LowerTriangular s_param = cholesky_lower(scenario.truth_param_cov);
  const LowerTriangular s_q = cholesky_lower(model.process_noise_cov);
  const LowerTriangular s_r = cholesky_lower(model.meas_noise_cov);
  const int n = model.state_dim;
  const int p = model.meas_dim;
  const int l = model.param_dim;

  TruthTrajectory truth;
  truth.true_param =
      scenario.truth_param_mean + s_param.matrix() * param_rng.standard_normal_matrix(l, 1);
  truth.states.reserve(spec.steps + 1);
  truth.measurements.reserve(spec.steps);
  truth.states.push_back(scenario.x0_truth);
  for (int k = 1; k <= spec.steps; ++k) {
    const Vector w = s_q.matrix() * process_rng.standard_normal_matrix(n, 1);
    const Vector x = propagate_truth(model, truth.states.back(), truth.true_param, k, w);
    const Vector v = s_r.matrix() * meas_rng.standard_normal_matrix(p, 1);
    const Vector z = measure_truth(model, x, truth.true_param, v);
    if (!x.allFinite() || !z.allFinite()) {
      std::ostringstream os;
      os << "generate_truth: non-finite trajectory in run " << run << " at epoch " << k;
      throw NumericalError(os.str());
    }
    truth.states.push_back(x);
    truth.measurements.push_back(z);
  }
  return truth;
}

}  // namespace enckf
