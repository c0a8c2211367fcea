#pragma once

#include <Eigen/Dense>
#include <optional>
#include <random>

namespace embgp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Cholesky factorization shared by all Gaussian algebra in the library.
// Solves and log-determinants go through here; nothing forms an inverse by
// calling inverse() directly.
class SpdFactor {
 public:
  // Factor A as is; NumericalBreakdown if A is not numerically PD.
  static SpdFactor factor(const MatrixXd& a);

  // Gram-matrix policy: add 1e-10*scale to the diagonal, retry once with
  // 1e-8*scale, then give up with NumericalBreakdown.
  static SpdFactor factor_with_jitter(const MatrixXd& a, double scale);

  Eigen::Index size() const { return lower_.rows(); }
  VectorXd solve(const VectorXd& b) const;
  MatrixXd solve(const MatrixXd& b) const;
  // L^{-1} b
  MatrixXd solve_lower(const MatrixXd& b) const;
  double log_det() const;
  const MatrixXd& lower() const { return lower_; }
  double jitter() const { return jitter_; }

 private:
  MatrixXd lower_;
  double jitter_ = 0.0;
};

struct SymmetricEigen {
  VectorXd values;   // non-increasing
  MatrixXd vectors;  // columns match values
};

SymmetricEigen symmetric_eigen_descending(const MatrixXd& a);

struct GaussianDensity {
  VectorXd mean;
  MatrixXd covariance;
  std::optional<MatrixXd> precision;

  Eigen::Index dim() const { return mean.size(); }
  VectorXd std_devs() const { return covariance.diagonal().cwiseMax(0.0).cwiseSqrt(); }
  double log_pdf(const VectorXd& x) const;

  // Rows are draws.  Uses an eigen-decomposition so singular covariances work.
  MatrixXd sample(std::mt19937_64& rng, Eigen::Index n) const;

  static GaussianDensity from_precision(const MatrixXd& precision, const VectorXd& linear_term);
  static GaussianDensity diagonal(const VectorXd& mean, const VectorXd& variances);
};

// Block-diagonal join of independent Gaussians.
GaussianDensity join_independent(const GaussianDensity& a, const GaussianDensity& b);

MatrixXd symmetrize(const MatrixXd& a);

}  // namespace embgp
