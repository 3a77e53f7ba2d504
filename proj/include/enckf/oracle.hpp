#pragma once

#include "enckf/sysmodel.hpp"

namespace enckf::oracle {

/// Linear-Gaussian model used by the closed-form reference filters:
///
///   x_k = A x_{k-1} + B b + G w,   w ~ N(0, Q)
///   z_k = H x_k + D b + v,         v ~ N(0, R)
struct LinearModel {
  Matrix a;
  Matrix b;
  Matrix g;
  Matrix h;
  Matrix d;
  Matrix q;
  Matrix r;
  Matrix q_b;
  Vector b_ref;

  int state_dim() const { return static_cast<int>(a.rows()); }
  int param_dim() const { return static_cast<int>(b.cols()); }
  int meas_dim() const { return static_cast<int>(h.rows()); }
  void validate() const;
};

struct KalmanState {
  Vector mean;
  Matrix cov;
};

/// Textbook Kalman filter with b treated as the known input b_ref.
/// Predict then update against z; Joseph-form covariance update.
KalmanState kalman_step(const LinearModel& model, const KalmanState& state, const Vector& z);

struct ConsiderState {
  Vector mean;
  Matrix p_xx;
  Matrix p_xb;
};

/// Schmidt-Kalman (consider) filter: b stays at b_ref with covariance Q_b,
/// its cross-covariance with x is propagated, and the parameter gain is zero.
ConsiderState schmidt_kalman_step(const LinearModel& model, const ConsiderState& state,
                                  const Vector& z);

}  // namespace enckf::oracle
