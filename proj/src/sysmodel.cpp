#include "enckf/sysmodel.hpp"

#include <cmath>
#include <sstream>

namespace enckf {

bool is_symmetric(const Matrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  if (a.size() == 0) return true;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

void require_dim(const Vector& v, int expected, const std::string& what) {
  if (v.size() != expected) {
    std::ostringstream os;
    os << what << ": expected length " << expected << ", got " << v.size();
    throw DimensionError(os.str());
  }
}

void require_dim(const Matrix& m, int rows, int cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << what << ": expected " << rows << "x" << cols << ", got " << m.rows() << "x" << m.cols();
    throw DimensionError(os.str());
  }
}

namespace {

void require_psd(const Matrix& a, const std::string& what) {
  if (!is_symmetric(a, 1e-12)) throw ModelError(what + " is not symmetric");
  if (a.size() == 0) return;
  const double trace = a.trace();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10 * std::abs(trace)) {
    throw ModelError(what + " is not positive semidefinite");
  }
}

}  // namespace

void SystemModel::validate() const {
  if (state_dim <= 0) throw ModelError("state_dim must be positive");
  if (meas_dim <= 0) throw ModelError("meas_dim must be positive");
  if (param_dim < 0) throw ModelError("param_dim must be non-negative");
  if (!transition) throw ModelError("transition function is empty");
  if (!measurement) throw ModelError("measurement function is empty");
  require_dim(process_noise_cov, state_dim, state_dim, "process_noise_cov");
  require_dim(meas_noise_cov, meas_dim, meas_dim, "meas_noise_cov");
  require_dim(param_reference, param_dim, "param_reference");
  require_dim(param_cov, param_dim, param_dim, "param_cov");
  require_psd(process_noise_cov, "process_noise_cov");
  require_psd(param_cov, "param_cov");
  if (!is_symmetric(meas_noise_cov, 1e-12)) throw ModelError("meas_noise_cov is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(meas_noise_cov, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw ModelError("meas_noise_cov is not positive definite");
  }
}

Vector propagate_truth(const SystemModel& model, const Vector& x_prev, const Vector& b, int k,
                       const Vector& w) {
  require_dim(x_prev, model.state_dim, "propagate_truth x_prev");
  require_dim(b, model.param_dim, "propagate_truth b");
  require_dim(w, model.state_dim, "propagate_truth w");
  Vector x = model.transition(x_prev, b, k);
  require_dim(x, model.state_dim, "transition output");
  return x + w;
}

Vector measure_truth(const SystemModel& model, const Vector& x, const Vector& b, const Vector& v) {
  require_dim(x, model.state_dim, "measure_truth x");
  require_dim(b, model.param_dim, "measure_truth b");
  require_dim(v, model.meas_dim, "measure_truth v");
  Vector z = model.measurement(x, b);
  require_dim(z, model.meas_dim, "measurement output");
  return z + v;
}

}  // namespace enckf
