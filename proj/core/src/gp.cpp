#include "embgp/gp.hpp"

#include <cmath>

#include "embgp/errors.hpp"

namespace embgp {

void Dataset::validate() const {
  if (!(noise_std > 0.0) || !std::isfinite(noise_std)) fail(ErrorCode::DomainError, "noise_std must be positive");
  if (inputs.rows() != outputs.size()) fail(ErrorCode::DimensionError, "dataset inputs and outputs differ in length");
  if (!inputs.allFinite() || !outputs.allFinite()) fail(ErrorCode::DomainError, "dataset contains non-finite values");
}

Dataset Dataset::one_dimensional(const VectorXd& x, const VectorXd& y, double noise_std) {
  Dataset d{x, y, noise_std};
  d.validate();
  return d;
}

namespace {

MatrixXd cross_gram(const CovarianceFunction& k, const VectorXd& a, const VectorXd& b) {
  MatrixXd out(a.size(), b.size());
  const CovarianceFunction::RowFn row = k.row_function(b);
  for (Eigen::Index i = 0; i < a.size(); ++i) out.row(i) = row(a[i]).transpose();
  return out;
}

}  // namespace

GaussianDensity fs_posterior_predictive(const CovarianceFunction& k, const Dataset& data, const VectorXd& xstar) {
  data.validate();
  if (data.size() < 1) fail(ErrorCode::DimensionError, "fs_posterior_predictive needs at least one datum");
  const VectorXd x = data.x();
  MatrixXd gram = cross_gram(k, x, x);
  gram.diagonal().array() += data.noise_std * data.noise_std;
  const SpdFactor f = SpdFactor::factor_with_jitter(gram, k.variance_scale());
  const MatrixXd kxs = cross_gram(k, x, xstar);
  GaussianDensity out;
  out.mean = kxs.transpose() * f.solve(data.outputs);
  const MatrixXd v = f.solve_lower(kxs);
  out.covariance = symmetrize(cross_gram(k, xstar, xstar) - v.transpose() * v);
  return out;
}

GaussianDensity fs_posterior_predictive(const KernelSpec& k, const Dataset& data, const VectorXd& xstar) {
  return fs_posterior_predictive(SqExpCovariance(k), data, xstar);
}

WeightSpaceGP::WeightSpaceGP(EigenBasis b)
    : basis(std::move(b)),
      weight_prior(GaussianDensity::diagonal(VectorXd::Zero(basis.size()), basis.eigenvalues())) {}

GaussianDensity ws_weight_posterior(const WeightSpaceGP& gp, const Dataset& data) {
  data.validate();
  if (data.size() == 0) return gp.weight_prior;
  const MatrixXd phi = gp.basis.evaluate(data.x());
  const double inv_noise = 1.0 / (data.noise_std * data.noise_std);
  MatrixXd precision = inv_noise * phi.transpose() * phi;
  precision.diagonal() += gp.basis.eigenvalues().cwiseInverse();
  return GaussianDensity::from_precision(precision, inv_noise * phi.transpose() * data.outputs);
}

GaussianDensity ws_pushforward(const WeightSpaceGP& gp, const GaussianDensity& weight_law, double xstar) {
  if (weight_law.dim() != gp.size()) fail(ErrorCode::DimensionError, "weight law dimension differs from basis size");
  const VectorXd phi = gp.basis.evaluate(xstar);
  GaussianDensity out;
  out.mean = VectorXd::Constant(1, phi.dot(weight_law.mean));
  out.covariance = MatrixXd::Constant(1, 1, std::max(0.0, phi.dot(weight_law.covariance * phi)));
  return out;
}

MeanStd ws_pushforward_band(const WeightSpaceGP& gp, const GaussianDensity& weight_law, const VectorXd& xs) {
  if (weight_law.dim() != gp.size()) fail(ErrorCode::DimensionError, "weight law dimension differs from basis size");
  const MatrixXd phi = gp.basis.evaluate(xs);
  MeanStd out;
  out.mean = phi * weight_law.mean;
  out.std = (phi * weight_law.covariance).cwiseProduct(phi).rowwise().sum().cwiseMax(0.0).cwiseSqrt();
  return out;
}

MeanStd marginal_band(const GaussianDensity& law) { return {law.mean, law.std_devs()}; }

}  // namespace embgp
