#include "embgp/linalg.hpp"

#include <cmath>
#include <numbers>

#include "embgp/errors.hpp"

namespace embgp {

namespace {

bool try_llt(const MatrixXd& a, MatrixXd& lower) {
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  return lower.diagonal().allFinite() && (lower.diagonal().array() > 0.0).all();
}

}  // namespace

SpdFactor SpdFactor::factor(const MatrixXd& a) {
  SpdFactor f;
  if (a.rows() != a.cols()) fail(ErrorCode::DimensionError, "SpdFactor: matrix is not square");
  if (a.rows() == 0) return f;
  if (!try_llt(a, f.lower_)) {
    fail(ErrorCode::NumericalBreakdown, "Cholesky factorization failed (matrix not positive definite)");
  }
  return f;
}

SpdFactor SpdFactor::factor_with_jitter(const MatrixXd& a, double scale) {
  SpdFactor f;
  if (a.rows() != a.cols()) fail(ErrorCode::DimensionError, "SpdFactor: matrix is not square");
  if (a.rows() == 0) return f;
  for (double rel : {1e-10, 1e-8}) {
    MatrixXd shifted = a;
    shifted.diagonal().array() += rel * scale;
    if (try_llt(shifted, f.lower_)) {
      f.jitter_ = rel * scale;
      return f;
    }
  }
  fail(ErrorCode::NumericalBreakdown,
       "Cholesky factorization failed after jitter 1e-8 * signal variance");
}

VectorXd SpdFactor::solve(const VectorXd& b) const {
  if (b.size() != size()) fail(ErrorCode::DimensionError, "SpdFactor::solve: size mismatch");
  VectorXd z = lower_.triangularView<Eigen::Lower>().solve(b);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(z);
}

MatrixXd SpdFactor::solve(const MatrixXd& b) const {
  if (b.rows() != size()) fail(ErrorCode::DimensionError, "SpdFactor::solve: size mismatch");
  MatrixXd z = lower_.triangularView<Eigen::Lower>().solve(b);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(z);
}

MatrixXd SpdFactor::solve_lower(const MatrixXd& b) const {
  return lower_.triangularView<Eigen::Lower>().solve(b);
}

double SpdFactor::log_det() const { return 2.0 * lower_.diagonal().array().log().sum(); }

SymmetricEigen symmetric_eigen_descending(const MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(a));
  if (es.info() != Eigen::Success) fail(ErrorCode::NumericalBreakdown, "symmetric eigensolver failed");
  SymmetricEigen out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  return out;
}

MatrixXd symmetrize(const MatrixXd& a) { return 0.5 * (a + a.transpose()); }

double GaussianDensity::log_pdf(const VectorXd& x) const {
  SpdFactor f = SpdFactor::factor(covariance);
  VectorXd r = x - mean;
  VectorXd z = f.solve_lower(r);
  return -0.5 * z.squaredNorm() - 0.5 * f.log_det() -
         0.5 * static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi);
}

MatrixXd GaussianDensity::sample(std::mt19937_64& rng, Eigen::Index n) const {
  SymmetricEigen es = symmetric_eigen_descending(covariance);
  MatrixXd root = es.vectors * es.values.cwiseMax(0.0).cwiseSqrt().asDiagonal();
  std::normal_distribution<double> normal;
  MatrixXd z(n, dim());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < dim(); ++j) z(i, j) = normal(rng);
  MatrixXd draws = z * root.transpose();
  draws.rowwise() += mean.transpose();
  return draws;
}

GaussianDensity GaussianDensity::from_precision(const MatrixXd& precision, const VectorXd& linear_term) {
  SpdFactor f = SpdFactor::factor(symmetrize(precision));
  GaussianDensity g;
  g.mean = f.solve(linear_term);
  g.covariance = symmetrize(f.solve(MatrixXd(MatrixXd::Identity(precision.rows(), precision.cols()))));
  g.precision = symmetrize(precision);
  return g;
}

GaussianDensity GaussianDensity::diagonal(const VectorXd& mean, const VectorXd& variances) {
  GaussianDensity g;
  g.mean = mean;
  g.covariance = variances.asDiagonal();
  g.precision = MatrixXd(variances.cwiseInverse().asDiagonal());
  return g;
}

GaussianDensity join_independent(const GaussianDensity& a, const GaussianDensity& b) {
  const Eigen::Index na = a.dim();
  const Eigen::Index nb = b.dim();
  GaussianDensity g;
  g.mean.resize(na + nb);
  g.mean << a.mean, b.mean;
  g.covariance = MatrixXd::Zero(na + nb, na + nb);
  g.covariance.topLeftCorner(na, na) = a.covariance;
  g.covariance.bottomRightCorner(nb, nb) = b.covariance;
  if (a.precision && b.precision) {
    MatrixXd p = MatrixXd::Zero(na + nb, na + nb);
    p.topLeftCorner(na, na) = *a.precision;
    p.bottomRightCorner(nb, nb) = *b.precision;
    g.precision = p;
  }
  return g;
}

}  // namespace embgp
