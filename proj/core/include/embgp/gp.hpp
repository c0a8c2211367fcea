#pragma once

#include <Eigen/Dense>

#include "embgp/kernels.hpp"
#include "embgp/linalg.hpp"

namespace embgp {

// Observations y at inputs X (one row per datum) with known iid noise.
struct Dataset {
  MatrixXd inputs;
  VectorXd outputs;
  double noise_std = 1.0;

  Eigen::Index size() const { return outputs.size(); }
  Eigen::Index input_dim() const { return inputs.cols(); }
  VectorXd x() const { return inputs.col(0); }
  void validate() const;

  static Dataset one_dimensional(const VectorXd& x, const VectorXd& y, double noise_std);
};

// Function-space conditioning of a zero-mean GP on data.
GaussianDensity fs_posterior_predictive(const CovarianceFunction& k, const Dataset& data, const VectorXd& xstar);
GaussianDensity fs_posterior_predictive(const KernelSpec& k, const Dataset& data, const VectorXd& xstar);

struct WeightSpaceGP {
  EigenBasis basis;
  GaussianDensity weight_prior;

  explicit WeightSpaceGP(EigenBasis b);
  Eigen::Index size() const { return basis.size(); }
};

// N(wbar, A^{-1}) with A = Phi^T Phi / sigma_d^2 + Sigma_p^{-1}.
GaussianDensity ws_weight_posterior(const WeightSpaceGP& gp, const Dataset& data);

// Law of delta_w(x*) = phi(x*)^T w for w ~ weight_law (1-dimensional).
GaussianDensity ws_pushforward(const WeightSpaceGP& gp, const GaussianDensity& weight_law, double xstar);

struct MeanStd {
  VectorXd mean;
  VectorXd std;
};

MeanStd ws_pushforward_band(const WeightSpaceGP& gp, const GaussianDensity& weight_law, const VectorXd& xs);
MeanStd marginal_band(const GaussianDensity& law);

}  // namespace embgp
