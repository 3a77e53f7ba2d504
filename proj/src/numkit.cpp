#include "enckf/numkit.hpp"

#include <cmath>
#include <sstream>

namespace enckf {

LowerTriangular::LowerTriangular(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) throw DimensionError("LowerTriangular: matrix not square");
  for (Eigen::Index j = 0; j < entries_.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      if (entries_(i, j) != 0.0) throw ModelError("LowerTriangular: nonzero entry above diagonal");
    }
    if (!(entries_(j, j) >= 0.0)) throw ModelError("LowerTriangular: negative or NaN diagonal");
  }
}

double min_eigenvalue(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

double repair_jitter(const Matrix& a) { return 1e-12 * std::max(a.trace(), 1.0); }

Matrix psd_repair(const Matrix& a) {
  if (!is_symmetric(a, 1e-10)) throw ModelError("psd_repair: input is not symmetric");
  const double jitter = repair_jitter(a);
  const Eigen::Index d = a.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  Matrix out = a;
  if (d > 0 && eig.eigenvalues().minCoeff() < 0.0) {
    const Vector clamped = eig.eigenvalues().cwiseMax(0.0);
    out = symmetrize(eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose());
  }
  out.diagonal().array() += jitter;
  return out;
}

namespace {

// Lower-triangular factor of a PSD matrix that plain LLT refuses (singular
// or numerically semidefinite): with A = V diag(lambda) V^T, B = sqrt(lambda) V^T
// satisfies B^T B = A, and QR of B gives A = R^T R.
Matrix semidefinite_factor(const Matrix& a) {
  const Eigen::Index d = a.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  const Vector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Matrix b = roots.asDiagonal() * eig.eigenvectors().transpose();
  Eigen::HouseholderQR<Matrix> qr(b);
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  Matrix l = r.transpose();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (l(j, j) < 0.0) l.col(j) = -l.col(j);
  }
  return l;
}

}  // namespace

LowerTriangular cholesky_lower(const Matrix& a, RepairLog* log) {
  if (a.rows() != a.cols()) throw DimensionError("cholesky_lower: matrix not square");
  if (!is_symmetric(a, 1e-10)) throw ModelError("cholesky_lower: matrix is not symmetric");
  if (a.size() == 0) return LowerTriangular(Matrix(0, 0));
  if (!a.allFinite()) throw NumericalError("cholesky_lower: non-finite entries");

  Matrix work = symmetrize(a);
  const double lambda_min = min_eigenvalue(work);
  if (lambda_min < -1e-10 * std::abs(work.trace()) || (lambda_min < 0.0 && work.trace() <= 0.0)) {
    std::ostringstream os;
    os << "cholesky_lower: matrix is not positive semidefinite (min eigenvalue " << lambda_min
       << ")";
    throw ModelError(os.str());
  }
  if (lambda_min < 0.0) {
    if (log) log->record(lambda_min);
    work = psd_repair(work);
  }

  Eigen::LLT<Matrix> llt(work);
  if (llt.info() == Eigen::Success) {
    Matrix l = llt.matrixL();
    if (l.allFinite() && (l.diagonal().array() > 0.0).all()) return LowerTriangular(std::move(l));
  }
  return LowerTriangular(semidefinite_factor(work));
}

Matrix forward_substitute(const LowerTriangular& l, const Matrix& rhs) {
  const Matrix& s = l.matrix();
  if (rhs.rows() != s.rows()) throw DimensionError("forward_substitute: row mismatch");
  const Eigen::Index d = s.rows();
  const double pivot_floor = d > 0 ? 1e-14 * std::max(1.0, s.diagonal().maxCoeff()) : 0.0;
  Matrix y = Matrix::Zero(d, rhs.cols());
  for (Eigen::Index i = 0; i < d; ++i) {
    if (s(i, i) <= pivot_floor) continue;
    Eigen::RowVectorXd r = rhs.row(i);
    for (Eigen::Index k = 0; k < i; ++k) r -= s(i, k) * y.row(k);
    y.row(i) = r / s(i, i);
  }
  return y;
}

Matrix sample_mvn(const Vector& mean, const LowerTriangular& sqrt_cov, SeededRng& rng, int count) {
  if (count < 2) throw ModelError("sample_mvn: need at least 2 members");
  if (mean.size() != sqrt_cov.dim()) throw DimensionError("sample_mvn: mean/sqrt_cov mismatch");
  const Matrix u = rng.standard_normal_matrix(static_cast<int>(mean.size()), count);
  Matrix members = sqrt_cov.matrix() * u;
  members.colwise() += mean;
  return members;
}

LowerTriangular augmented_sqrt(const Matrix& p_xx, const Matrix& p_xb, const Matrix& q_b,
                               RepairLog* log) {
  const int n = static_cast<int>(p_xx.rows());
  const int l = static_cast<int>(q_b.rows());
  require_dim(p_xx, n, n, "augmented_sqrt P_xx");
  require_dim(p_xb, n, l, "augmented_sqrt P_xb");
  require_dim(q_b, l, l, "augmented_sqrt Q_b");

  const LowerTriangular s_xx = cholesky_lower(p_xx, log);

  // Y = S_xx^{-1} P_xb. A zero pivot is only acceptable when P_xb has no
  // component along the collapsed direction.
  const Matrix y = forward_substitute(s_xx, p_xb);
  const double scale = 1.0 + (p_xb.size() ? p_xb.cwiseAbs().maxCoeff() : 0.0);
  if (n > 0 && l > 0 && ((s_xx.matrix() * y - p_xb).cwiseAbs().maxCoeff() > 1e-10 * scale)) {
    throw NumericalError("augmented_sqrt: state covariance collapsed");
  }

  Matrix schur = symmetrize(q_b - y.transpose() * y);
  if (l > 0) {
    const double lambda_min = min_eigenvalue(schur);
    if (lambda_min < 0.0) {
      if (log) log->record(lambda_min);
      schur = psd_repair(schur);
    }
  }
  const LowerTriangular s_bb = cholesky_lower(schur, log);

  Matrix s = Matrix::Zero(n + l, n + l);
  s.topLeftCorner(n, n) = s_xx.matrix();
  s.bottomLeftCorner(l, n) = y.transpose();
  s.bottomRightCorner(l, l) = s_bb.matrix();
  return LowerTriangular(std::move(s));
}

}  // namespace enckf
