#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "embgp/calibrate.hpp"
#include "embgp/forward.hpp"
#include "embgp/gp.hpp"
#include "embgp/mcmc.hpp"

namespace embgp {

// Rank-r likelihood-informed basis.  With prior covariance L L^T and
// eigenvectors V of the ppGNH: U = L V, W = L^{-T} V, split into the leading r
// columns (LIS) and the rest (complement).
struct LisBasis {
  int r = 0;
  double cutoff = 0.0;
  VectorXd eigenvalues;  // all of them, non-increasing
  MatrixXd u_r, w_r, u_perp, w_perp;
  MatrixXd prior_factor;
  VectorXd prior_mean;

  Eigen::Index dim() const { return prior_mean.size(); }
  MatrixXd projector() const { return u_r * w_r.transpose(); }
  MatrixXd complement_projector() const { return u_perp * w_perp.transpose(); }
  VectorXd reduce(const VectorXd& theta) const { return w_r.transpose() * theta; }
  VectorXd reduced_prior_mean() const { return w_r.transpose() * prior_mean; }
  VectorXd complement_prior_mean() const { return w_perp.transpose() * prior_mean; }
  // theta with the complement coordinates at their prior mean.
  VectorXd lift(const VectorXd& theta_r) const;
  VectorXd combine(const VectorXd& theta_r, const VectorXd& theta_perp) const;
  // Hash of the prior factor and mean, stored with persisted bases.
  std::uint64_t prior_hash() const;
};

// Running mean of L^T H L over posterior samples.
class PpgnhAccumulator {
 public:
  explicit PpgnhAccumulator(MatrixXd prior_factor) : factor_(std::move(prior_factor)) {}

  void add(const MatrixXd& hessian);
  long count() const { return count_; }
  MatrixXd mean() const;
  const MatrixXd& sum() const { return sum_; }

 private:
  MatrixXd factor_;
  MatrixXd sum_;
  long count_ = 0;
};

// J^T J / sigma_d^2 at theta; EvaluationFailure if the model cannot be evaluated.
MatrixXd local_gnh(const ForwardMap& map, const Dataset& data, const VectorXd& theta);

// EmptyLis when no eigenvalue reaches the cutoff.
LisBasis lis_from_ppgnh(const MatrixXd& s, const MatrixXd& prior_factor, const VectorXd& prior_mean, double cutoff);

double projector_distance(const LisBasis& a, const LisBasis& b);

// Log density of the posterior restricted to the LIS, in theta_r coordinates.
class ReducedPosterior {
 public:
  ReducedPosterior(LisBasis lis, const EmbeddedPosterior& base);

  double operator()(const VectorXd& theta_r) const;
  const LisBasis& lis() const { return lis_; }

 private:
  LisBasis lis_;
  const EmbeddedPosterior& base_;
  VectorXd reduced_mean_;
};

double reduced_log_posterior(const LisBasis& lis, const EmbeddedPosterior& base, const VectorXd& theta_r);

struct LisSettings {
  double cutoff = 0.1;
  int max_hessians = 100;
  int min_hessians = 10;  // before the first recomputation, nonlinear maps only
  double tolerance = 1e-3;
  int consecutive = 3;
  int pilot_steps = 300;
  int max_stride = 2000;
  double stride_factor = 5.0;
  std::uint64_t seed = 1;
};

struct AdaptiveLisResult {
  LisBasis basis;
  VectorXd map_point;
  int hessians = 0;
  std::vector<double> distances;
  bool converged = false;
};

AdaptiveLisResult adaptive_global_lis(const EmbeddedPosterior& post, const VectorXd& start,
                                      const LisSettings& settings);

// For each reduced sample draw n_cs complement coordinates from the prior;
// rows of the result are full-space samples.
MatrixXd recombine_samples(const LisBasis& lis, const MatrixXd& reduced_samples, int n_cs, std::uint64_t seed);

}  // namespace embgp
