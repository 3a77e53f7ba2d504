#include "enckf/oracle.hpp"

#include "enckf/numkit.hpp"

namespace enckf::oracle {

void LinearModel::validate() const {
  const int n = state_dim();
  const int l = param_dim();
  const int p = meas_dim();
  require_dim(a, n, n, "A");
  require_dim(b, n, l, "B");
  if (g.rows() != n) throw DimensionError("G: row count must equal state dimension");
  require_dim(q, static_cast<int>(g.cols()), static_cast<int>(g.cols()), "Q");
  require_dim(h, p, n, "H");
  require_dim(d, p, l, "D");
  require_dim(r, p, p, "R");
  require_dim(q_b, l, l, "Q_b");
  require_dim(b_ref, l, "b_ref");
}

namespace {

Matrix solve_gain(const Matrix& cross, const Matrix& p_zz) {
  Eigen::LLT<Matrix> llt(p_zz);
  if (llt.info() != Eigen::Success) throw NumericalError("oracle: innovation covariance singular");
  return llt.solve(cross.transpose()).transpose();
}

}  // namespace

KalmanState kalman_step(const LinearModel& model, const KalmanState& state, const Vector& z) {
  model.validate();
  const int n = model.state_dim();
  require_dim(state.mean, n, "kalman_step mean");
  require_dim(z, model.meas_dim(), "kalman_step z");

  const Vector x_pred = model.a * state.mean + model.b * model.b_ref;
  const Matrix p_pred = symmetrize(model.a * state.cov * model.a.transpose() +
                                   model.g * model.q * model.g.transpose());

  const Matrix p_zz = symmetrize(model.h * p_pred * model.h.transpose() + model.r);
  const Matrix k = solve_gain(p_pred * model.h.transpose(), p_zz);
  const Vector innovation = z - model.h * x_pred - model.d * model.b_ref;

  const Matrix i_kh = Matrix::Identity(n, n) - k * model.h;
  KalmanState out;
  out.mean = x_pred + k * innovation;
  out.cov = symmetrize(i_kh * p_pred * i_kh.transpose() + k * model.r * k.transpose());
  return out;
}

ConsiderState schmidt_kalman_step(const LinearModel& model, const ConsiderState& state,
                                  const Vector& z) {
  model.validate();
  const int n = model.state_dim();
  require_dim(state.mean, n, "schmidt_kalman_step mean");
  require_dim(state.p_xb, n, model.param_dim(), "schmidt_kalman_step P_xb");
  require_dim(z, model.meas_dim(), "schmidt_kalman_step z");
  const Matrix& a = model.a;
  const Matrix& b = model.b;
  const Matrix& h = model.h;
  const Matrix& d = model.d;

  const Vector x_pred = a * state.mean + b * model.b_ref;
  const Matrix p_xx = symmetrize(a * state.p_xx * a.transpose() + a * state.p_xb * b.transpose() +
                                 b * state.p_xb.transpose() * a.transpose() +
                                 b * model.q_b * b.transpose() +
                                 model.g * model.q * model.g.transpose());
  const Matrix p_xb = a * state.p_xb + b * model.q_b;

  const Matrix p_zz =
      symmetrize(h * p_xx * h.transpose() + h * p_xb * d.transpose() +
                 d * p_xb.transpose() * h.transpose() + d * model.q_b * d.transpose() + model.r);
  const Matrix p_xz = p_xx * h.transpose() + p_xb * d.transpose();
  const Matrix p_bz = p_xb.transpose() * h.transpose() + model.q_b * d.transpose();
  const Matrix k = solve_gain(p_xz, p_zz);
  const Vector innovation = z - h * x_pred - d * model.b_ref;

  ConsiderState out;
  out.mean = x_pred + k * innovation;
  out.p_xx = symmetrize(p_xx - k * p_zz * k.transpose());
  out.p_xb = p_xb - k * p_bz.transpose();
  return out;
}

}  // namespace enckf::oracle
