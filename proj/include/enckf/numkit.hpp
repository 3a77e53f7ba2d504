#pragma once

#include "enckf/rng.hpp"
#include "enckf/sysmodel.hpp"

namespace enckf {

/// Square matrix with exact zeros above the diagonal and a non-negative
/// diagonal. Construction checks both.
class LowerTriangular {
 public:
  LowerTriangular() = default;
  explicit LowerTriangular(Matrix entries);

  const Matrix& matrix() const { return entries_; }
  int dim() const { return static_cast<int>(entries_.rows()); }
  /// L * L^T.
  Matrix product() const { return entries_ * entries_.transpose(); }

 private:
  Matrix entries_;
};

/// Counts covariance repairs performed along a computation. A repair is an
/// eigenvalue clamp triggered by a strictly negative eigenvalue.
struct RepairLog {
  long count = 0;
  double most_negative_eigenvalue = 0.0;

  void record(double eigenvalue) {
    ++count;
    most_negative_eigenvalue = std::min(most_negative_eigenvalue, eigenvalue);
  }
};

/// Clamp negative eigenvalues to zero, then add 1e-12 * max(trace(A), 1) to
/// the diagonal. A PSD input comes back as A + jitter * I.
Matrix psd_repair(const Matrix& a);

/// Jitter added by psd_repair for this matrix.
double repair_jitter(const Matrix& a);

/// Lower-triangular L with L L^T = A. Eigenvalues in [-1e-10 trace, 0) are
/// repaired first (and logged); anything more negative, or an asymmetric
/// input, throws ModelError. Singular PSD inputs are factored without jitter.
LowerTriangular cholesky_lower(const Matrix& a, RepairLog* log = nullptr);

/// Solve L Y = B by forward substitution. Rows belonging to zero pivots are
/// set to zero, i.e. the minimum-norm solution on the range of L.
Matrix forward_substitute(const LowerTriangular& l, const Matrix& rhs);

/// `count` draws mean + sqrt_cov * u with u ~ N(0, I), one member per column.
Matrix sample_mvn(const Vector& mean, const LowerTriangular& sqrt_cov, SeededRng& rng, int count);

/// Block lower-triangular factor of the augmented covariance
///
///   [ P_xx    P_xb ]   [ S_xx   0    ] [ S_xx   0    ]^T
///   [ P_xb^T  Q_b  ] = [ L_bx   S_bb ] [ L_bx   S_bb ]
///
/// with S_xx = chol(P_xx), L_bx = P_xb^T S_xx^{-T} and
/// S_bb = chol(Q_b - P_xb^T P_xx^{-1} P_xb). The Schur complement is
/// clamped to PSD when a finite ensemble pushes it negative.
LowerTriangular augmented_sqrt(const Matrix& p_xx, const Matrix& p_xb, const Matrix& q_b,
                               RepairLog* log = nullptr);

/// (A + A^T) / 2.
inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

/// Smallest eigenvalue of a symmetric matrix (0 for empty input).
double min_eigenvalue(const Matrix& a);

}  // namespace enckf
