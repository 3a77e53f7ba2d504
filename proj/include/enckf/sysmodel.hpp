#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace enckf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when an argument's dimensions disagree with the model it is used with.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a model, covariance or configuration violates its invariants.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a state, measurement or covariance becomes non-finite or
/// numerically unusable during a run.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using TransitionFn = std::function<Vector(const Vector& state, const Vector& params, int step)>;
using MeasurementFn = std::function<Vector(const Vector& state, const Vector& params)>;

/// Discrete-time nonlinear system with additive Gaussian noise and a constant
/// uncertain parameter vector b:
///
///   x_k = f(x_{k-1}, b, k) + w_{k-1},   w ~ N(0, Q)
///   z_k = h(x_k, b) + v_k,              v ~ N(0, R)
///
/// b has reference value `param_reference` and covariance `param_cov`. The
/// model never draws noise itself; callers inject it. The functions must be
/// pure so that one model can be shared by concurrent Monte Carlo workers.
struct SystemModel {
  int state_dim = 0;
  int meas_dim = 0;
  int param_dim = 0;
  TransitionFn transition;
  MeasurementFn measurement;
  Matrix process_noise_cov;
  Matrix meas_noise_cov;
  Vector param_reference;
  Matrix param_cov;

  /// Throws ModelError if dimensions or covariance invariants are violated.
  void validate() const;
};

/// Ground truth for one Monte Carlo run: states for k = 0..K and
/// measurements for k = 1..K (measurements[k-1] belongs to states[k]).
struct TruthTrajectory {
  std::vector<Vector> states;
  std::vector<Vector> measurements;
  Vector true_param;

  int steps() const { return static_cast<int>(measurements.size()); }
};

/// x_k = f(x_prev, b, k) + w.
Vector propagate_truth(const SystemModel& model, const Vector& x_prev, const Vector& b, int k,
                       const Vector& w);

/// z = h(x, b) + v.
Vector measure_truth(const SystemModel& model, const Vector& x, const Vector& b, const Vector& v);

// Helpers shared by the numerical modules.
bool is_symmetric(const Matrix& a, double rel_tol);
void require_dim(const Vector& v, int expected, const std::string& what);
void require_dim(const Matrix& m, int rows, int cols, const std::string& what);

}  // namespace enckf
