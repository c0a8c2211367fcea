#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "embgp/forward.hpp"
#include "embgp/gp.hpp"
#include "embgp/linalg.hpp"
#include "embgp/ogp.hpp"
#include "embgp/optimize.hpp"

namespace embgp {

struct PriorSpec {
  GaussianDensity lambda_prior;
  GaussianDensity weight_prior;

  GaussianDensity joint() const { return join_independent(lambda_prior, weight_prior); }
  Eigen::Index dim() const { return lambda_prior.dim() + weight_prior.dim(); }
  void validate() const;

  // w ~ N(0, diag(eigenvalues)).
  static PriorSpec with_basis(GaussianDensity lambda_prior, const VectorXd& eigenvalues);
};

struct PosteriorSpec {
  std::shared_ptr<const ForwardMap> map;
  Dataset data;
  PriorSpec prior;
  std::shared_ptr<const RogpConstraints> regularizer;
  std::optional<VectorXd> alpha;

  void validate() const;
};

struct LsResult {
  VectorXd lambda;
  double residual_norm = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Damped Gauss-Newton / Levenberg-Marquardt fit of the plain model.  A run
// that fails to converge raises NonConvergence carrying the best iterate in
// its message; use least_squares_lambda_result to get the flagged result.
VectorXd least_squares_lambda(const ForwardMap& map, const Dataset& data, const VectorXd& lambda_init);
LsResult least_squares_lambda_result(const ForwardMap& map, const Dataset& data, const VectorXd& lambda_init);

// KOH log posterior in function-space form, with the plain fit model as mean.
double koh_log_posterior(const VectorXd& lambda, const ForwardMap& plain_map, const Dataset& data,
                         const CovarianceFunction& k, const GaussianDensity& lambda_prior);
// Exact Gaussian lambda posterior of KOH when the plain model is affine in lambda.
GaussianDensity koh_linear_posterior(const ForwardMap& plain_map, const Dataset& data, const CovarianceFunction& k,
                                     const GaussianDensity& lambda_prior);

// Mixture over lambda samples of the FS conditional of the bias at xstar.
struct GaussianMixture {
  std::vector<VectorXd> means;
  MatrixXd covariance;  // shared by every component

  VectorXd mean() const;
  // Law of total variance.
  VectorXd variance() const;
};

GaussianMixture koh_bias_posterior(const MatrixXd& lambda_samples, const ForwardMap& plain_map, const Dataset& data,
                                   const CovarianceFunction& k, const VectorXd& xstar);

// Log density of the embedded joint posterior, with optional ROGP penalties.
// Model overflow yields -inf and is counted.
class EmbeddedPosterior {
 public:
  explicit EmbeddedPosterior(PosteriorSpec spec);

  double operator()(const VectorXd& theta) const { return log_density(theta); }
  double log_density(const VectorXd& theta) const;
  double log_prior(const VectorXd& theta) const;
  double log_likelihood(const VectorXd& theta) const;
  double penalty(const VectorXd& theta) const;

  // -log posterior = 0.5 |r(theta)|^2 + const for the stacked residual
  // [(y - g)/sigma_d; L^{-1}(theta - mu_p); sqrt(alpha_k) R_k].
  LeastSquaresProblem as_least_squares() const;
  double constant() const { return constant_; }

  const PosteriorSpec& spec() const { return spec_; }
  Eigen::Index dim() const { return spec_.map->dim(); }
  long overflow_count() const { return overflows_->load(); }
  const SpdFactor& prior_factor() const { return prior_factor_; }

 private:
  PosteriorSpec spec_;
  GaussianDensity joint_;
  SpdFactor prior_factor_;
  double constant_ = 0.0;
  std::shared_ptr<std::atomic<long>> overflows_;
};

double embedded_log_posterior(const PosteriorSpec& spec, const VectorXd& theta);

struct MapResult {
  VectorXd theta;
  double log_density = 0.0;
  bool converged = false;
};

// Maximizes the embedded posterior by LM on its residual form, from start.
MapResult find_map(const EmbeddedPosterior& post, const VectorXd& start);

// Gauss-Newton Laplace approximation at a mode: covariance (J^T J)^{-1} of the
// residual form.
GaussianDensity laplace_approximation(const EmbeddedPosterior& post, const VectorXd& mode);

// Exact posterior for maps affine in theta with a linear (or absent) regularizer.
GaussianDensity linear_gaussian_posterior(const PosteriorSpec& spec);

struct HyperCandidate {
  double signal_std = 0.0;
  double length_scale = 0.0;
  double log_density = 0.0;  // -inf when the candidate failed
};

struct HyperResult {
  double signal_std = 0.0;
  double length_scale = 0.0;
  std::vector<HyperCandidate> table;
};

// For each (sigma_f, l) on the grid: build the posterior, maximize over theta,
// keep the best.  NonConvergence if every candidate fails.
HyperResult map_hyperparameters(const std::function<PosteriorSpec(const KernelSpec&)>& build,
                                const std::vector<double>& signal_stds, const std::vector<double>& length_scales,
                                const std::function<VectorXd(const PosteriorSpec&)>& start);

}  // namespace embgp
