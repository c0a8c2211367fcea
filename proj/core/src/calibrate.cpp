#include "embgp/calibrate.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "embgp/errors.hpp"

namespace embgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

MatrixXd gram_at(const CovarianceFunction& k, const VectorXd& a, const VectorXd& b) {
  MatrixXd out(a.size(), b.size());
  const CovarianceFunction::RowFn row = k.row_function(b);
  for (Eigen::Index i = 0; i < a.size(); ++i) out.row(i) = row(a[i]).transpose();
  return out;
}

SpdFactor data_covariance(const CovarianceFunction& k, const Dataset& data) {
  MatrixXd c = gram_at(k, data.x(), data.x());
  c.diagonal().array() += data.noise_std * data.noise_std;
  return SpdFactor::factor_with_jitter(c, k.variance_scale());
}

}  // namespace

void PriorSpec::validate() const {
  SpdFactor::factor(lambda_prior.covariance);
  if (weight_prior.dim() > 0) SpdFactor::factor(weight_prior.covariance);
}

PriorSpec PriorSpec::with_basis(GaussianDensity lambda_prior, const VectorXd& eigenvalues) {
  return {std::move(lambda_prior), GaussianDensity::diagonal(VectorXd::Zero(eigenvalues.size()), eigenvalues)};
}

void PosteriorSpec::validate() const {
  if (!map) fail(ErrorCode::DomainError, "posterior has no forward map");
  data.validate();
  if (map->outputs() != data.size()) fail(ErrorCode::DimensionError, "forward map outputs differ from data size");
  if (prior.lambda_prior.dim() != map->param_dim() || prior.weight_prior.dim() != map->weight_dim())
    fail(ErrorCode::DimensionError, "prior dimensions differ from the forward map");
  if (static_cast<bool>(regularizer) != alpha.has_value())
    fail(ErrorCode::DomainError, "penalties alpha must be given exactly when a regularizer is present");
  if (regularizer) {
    if (alpha->size() != regularizer->size()) fail(ErrorCode::DimensionError, "one penalty per constraint");
    if ((alpha->array() < 0.0).any()) fail(ErrorCode::DomainError, "penalties must be non-negative");
    if (regularizer->weight_dim() != map->weight_dim())
      fail(ErrorCode::DimensionError, "regularizer basis size differs from the forward map");
  }
}

LsResult least_squares_lambda_result(const ForwardMap& map, const Dataset& data, const VectorXd& lambda_init) {
  if (data.size() < map.param_dim()) fail(ErrorCode::DimensionError, "least squares needs N >= p");
  LeastSquaresProblem problem{[&](const VectorXd& l) { return VectorXd(map.plain_predict(l) - data.outputs); },
                              [&](const VectorXd& l) { return map.plain_jacobian(l); }};
  LmOptions options;
  const LmResult r = levenberg_marquardt(problem, lambda_init, options);
  return {r.x, std::sqrt(2.0 * r.cost), 2.0 * r.grad_norm, r.iterations, r.converged};
}

VectorXd least_squares_lambda(const ForwardMap& map, const Dataset& data, const VectorXd& lambda_init) {
  LsResult r = least_squares_lambda_result(map, data, lambda_init);
  if (!r.converged) {
    std::ostringstream os;
    os << "least squares did not converge after " << r.iterations << " iterations; best iterate [";
    for (Eigen::Index i = 0; i < r.lambda.size(); ++i) os << (i ? ", " : "") << r.lambda[i];
    os << "], gradient norm " << r.grad_norm;
    fail(ErrorCode::NonConvergence, os.str());
  }
  return r.lambda;
}

double koh_log_posterior(const VectorXd& lambda, const ForwardMap& plain_map, const Dataset& data,
                         const CovarianceFunction& k, const GaussianDensity& lambda_prior) {
  const SpdFactor f = data_covariance(k, data);
  const VectorXd resid = data.outputs - plain_map.plain_predict(lambda);
  const VectorXd z = f.solve_lower(resid);
  return lambda_prior.log_pdf(lambda) - 0.5 * f.log_det() - 0.5 * z.squaredNorm() -
         0.5 * static_cast<double>(data.size()) * kLog2Pi;
}

GaussianDensity koh_linear_posterior(const ForwardMap& plain_map, const Dataset& data, const CovarianceFunction& k,
                                     const GaussianDensity& lambda_prior) {
  const Eigen::Index p = plain_map.param_dim();
  const VectorXd zero = VectorXd::Zero(p);
  const MatrixXd g = plain_map.plain_jacobian(zero);
  const VectorXd offset = plain_map.plain_predict(zero);
  const SpdFactor f = data_covariance(k, data);
  const SpdFactor prior = SpdFactor::factor(lambda_prior.covariance);
  MatrixXd precision = g.transpose() * f.solve(g) + prior.solve(MatrixXd(MatrixXd::Identity(p, p)));
  VectorXd linear = g.transpose() * f.solve(VectorXd(data.outputs - offset)) + prior.solve(lambda_prior.mean);
  return GaussianDensity::from_precision(precision, linear);
}

VectorXd GaussianMixture::mean() const {
  VectorXd acc = VectorXd::Zero(covariance.rows());
  for (const VectorXd& m : means) acc += m;
  return acc / static_cast<double>(means.size());
}

VectorXd GaussianMixture::variance() const {
  const VectorXd mu = mean();
  VectorXd acc = VectorXd::Zero(covariance.rows());
  for (const VectorXd& m : means) acc += (m - mu).cwiseAbs2();
  return covariance.diagonal() + acc / static_cast<double>(means.size());
}

GaussianMixture koh_bias_posterior(const MatrixXd& lambda_samples, const ForwardMap& plain_map, const Dataset& data,
                                   const CovarianceFunction& k, const VectorXd& xstar) {
  if (lambda_samples.rows() == 0) fail(ErrorCode::DimensionError, "koh_bias_posterior needs lambda samples");
  const SpdFactor f = data_covariance(k, data);
  const MatrixXd cross = gram_at(k, data.x(), xstar);
  const MatrixXd v = f.solve_lower(cross);
  GaussianMixture out;
  out.covariance = symmetrize(gram_at(k, xstar, xstar) - v.transpose() * v);
  const MatrixXd gain = f.solve(cross).transpose();
  out.means.reserve(lambda_samples.rows());
  for (Eigen::Index s = 0; s < lambda_samples.rows(); ++s) {
    const VectorXd lambda = lambda_samples.row(s).transpose();
    out.means.push_back(gain * (data.outputs - plain_map.plain_predict(lambda)));
  }
  return out;
}

EmbeddedPosterior::EmbeddedPosterior(PosteriorSpec spec)
    : spec_(std::move(spec)), overflows_(std::make_shared<std::atomic<long>>(0)) {
  spec_.validate();
  joint_ = spec_.prior.joint();
  prior_factor_ = SpdFactor::factor(joint_.covariance);
  const double n = static_cast<double>(spec_.data.size());
  const double sd = spec_.data.noise_std;
  constant_ = -0.5 * n * (kLog2Pi + 2.0 * std::log(sd)) - 0.5 * prior_factor_.log_det() -
              0.5 * static_cast<double>(dim()) * kLog2Pi;
}

double EmbeddedPosterior::log_prior(const VectorXd& theta) const {
  const VectorXd z = prior_factor_.solve_lower(theta - joint_.mean);
  return -0.5 * z.squaredNorm() - 0.5 * prior_factor_.log_det() - 0.5 * static_cast<double>(dim()) * kLog2Pi;
}

double EmbeddedPosterior::log_likelihood(const VectorXd& theta) const {
  const VectorXd g = spec_.map->predict(theta);
  const double sd = spec_.data.noise_std;
  const double n = static_cast<double>(spec_.data.size());
  return -0.5 * n * (kLog2Pi + 2.0 * std::log(sd)) - 0.5 * (spec_.data.outputs - g).squaredNorm() / (sd * sd);
}

double EmbeddedPosterior::penalty(const VectorXd& theta) const {
  if (!spec_.regularizer) return 0.0;
  const VectorXd r = (*spec_.regularizer)(spec_.map->weights_of(theta));
  return 0.5 * spec_.alpha->dot(r.cwiseAbs2());
}

double EmbeddedPosterior::log_density(const VectorXd& theta) const {
  spec_.map->check_theta(theta);
  try {
    const double v = log_prior(theta) + log_likelihood(theta) - penalty(theta);
    if (std::isnan(v)) {
      overflows_->fetch_add(1);
      return -std::numeric_limits<double>::infinity();
    }
    return v;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ModelOverflow) throw;
    overflows_->fetch_add(1);
    return -std::numeric_limits<double>::infinity();
  }
}

LeastSquaresProblem EmbeddedPosterior::as_least_squares() const {
  const Eigen::Index n = spec_.data.size();
  const Eigen::Index d = dim();
  const Eigen::Index k = spec_.regularizer ? spec_.regularizer->size() : 0;
  LeastSquaresProblem p;
  p.residual = [this, n, d, k](const VectorXd& theta) {
    VectorXd r(n + d + k);
    r.head(n) = (spec_.data.outputs - spec_.map->predict(theta)) / spec_.data.noise_std;
    r.segment(n, d) = prior_factor_.solve_lower(theta - joint_.mean);
    if (k > 0)
      r.tail(k) = spec_.alpha->cwiseSqrt().cwiseProduct((*spec_.regularizer)(spec_.map->weights_of(theta)));
    return r;
  };
  p.jacobian = [this, n, d, k](const VectorXd& theta) {
    MatrixXd j = MatrixXd::Zero(n + d + k, d);
    j.topRows(n) = -spec_.map->jacobian(theta) / spec_.data.noise_std;
    j.middleRows(n, d) = prior_factor_.solve_lower(MatrixXd(MatrixXd::Identity(d, d)));
    if (k > 0) {
      const Eigen::Index m = spec_.map->weight_dim();
      j.bottomRightCorner(k, m) =
          spec_.alpha->cwiseSqrt().asDiagonal() * spec_.regularizer->jacobian(spec_.map->weights_of(theta));
    }
    return j;
  };
  return p;
}

double embedded_log_posterior(const PosteriorSpec& spec, const VectorXd& theta) {
  return EmbeddedPosterior(spec).log_density(theta);
}

namespace {

// Residual form in prior-whitened coordinates z = L^{-1}(theta - mu_p).  The
// prior rows become the identity, so prior eigenvalues near underflow (long
// analytic bases) no longer swamp the Jacobian.
LeastSquaresProblem whitened_least_squares(const PosteriorSpec& spec, const MatrixXd& l, const VectorXd& mu) {
  const Eigen::Index n = spec.data.size();
  const Eigen::Index d = mu.size();
  const Eigen::Index k = spec.regularizer ? spec.regularizer->size() : 0;
  LeastSquaresProblem p;
  p.residual = [&spec, &l, &mu, n, d, k](const VectorXd& z) {
    const VectorXd theta = mu + l * z;
    VectorXd r(n + d + k);
    r.head(n) = (spec.data.outputs - spec.map->predict(theta)) / spec.data.noise_std;
    r.segment(n, d) = z;
    if (k > 0) r.tail(k) = spec.alpha->cwiseSqrt().cwiseProduct((*spec.regularizer)(spec.map->weights_of(theta)));
    return r;
  };
  p.jacobian = [&spec, &l, &mu, n, d, k](const VectorXd& z) {
    const VectorXd theta = mu + l * z;
    MatrixXd j(n + d + k, d);
    j.topRows(n) = -(spec.map->jacobian(theta) * l) / spec.data.noise_std;
    j.middleRows(n, d).setIdentity();
    if (k > 0) {
      const Eigen::Index m = spec.map->weight_dim();
      j.bottomRows(k) = spec.alpha->cwiseSqrt().asDiagonal() * spec.regularizer->jacobian(spec.map->weights_of(theta)) *
                        l.bottomRows(m);
    }
    return j;
  };
  return p;
}

}  // namespace

MapResult find_map(const EmbeddedPosterior& post, const VectorXd& start) {
  LmOptions options;
  options.max_iterations = 500;
  const PosteriorSpec& spec = post.spec();
  const MatrixXd& l = post.prior_factor().lower();
  const VectorXd mu = spec.prior.joint().mean;
  VectorXd z = post.prior_factor().solve_lower(MatrixXd(start - mu)).col(0);
  if (spec.alpha && spec.alpha->maxCoeff() > 0.0) {
    // Stiff penalties: walk alpha up from nearly zero, warm-starting each stage.
    for (double scale = 1e-12; scale < 1.0; scale *= 100.0) {
      PosteriorSpec staged = spec;
      staged.alpha = *spec.alpha * scale;
      z = levenberg_marquardt(whitened_least_squares(staged, l, mu), z, options).x;
    }
  }
  const LmResult r = levenberg_marquardt(whitened_least_squares(spec, l, mu), z, options);
  const VectorXd theta = mu + l * r.x;
  return {theta, post.log_density(theta), r.converged};
}

GaussianDensity laplace_approximation(const EmbeddedPosterior& post, const VectorXd& mode) {
  // In prior-whitened coordinates the Gauss-Newton matrix is I + (data and
  // penalty terms), which stays well conditioned under stiff penalties.
  const MatrixXd& l = post.prior_factor().lower();
  const MatrixXd jw = post.as_least_squares().jacobian(mode) * l;
  const SymmetricEigen es = symmetric_eigen_descending(symmetrize(jw.transpose() * jw));
  const MatrixXd half = l * es.vectors * es.values.cwiseMax(1.0).cwiseSqrt().cwiseInverse().asDiagonal();
  GaussianDensity out;
  out.mean = mode;
  out.covariance = symmetrize(half * half.transpose());
  return out;
}

GaussianDensity linear_gaussian_posterior(const PosteriorSpec& spec) {
  spec.validate();
  const ForwardMap& map = *spec.map;
  if (!map.affine()) fail(ErrorCode::DomainError, "closed-form posterior needs a map affine in theta");
  if (spec.regularizer && !spec.regularizer->is_linear())
    fail(ErrorCode::DomainError, "closed-form posterior needs linear constraints");
  const Eigen::Index d = map.dim();
  const VectorXd zero = VectorXd::Zero(d);
  const MatrixXd j = map.jacobian(zero);
  const VectorXd offset = map.predict(zero);
  const GaussianDensity prior = spec.prior.joint();
  const SpdFactor pf = SpdFactor::factor(prior.covariance);
  const double inv_noise = 1.0 / (spec.data.noise_std * spec.data.noise_std);
  MatrixXd precision = inv_noise * j.transpose() * j + pf.solve(MatrixXd(MatrixXd::Identity(d, d)));
  VectorXd linear = inv_noise * j.transpose() * (spec.data.outputs - offset) + pf.solve(prior.mean);
  if (spec.regularizer) {
    const Eigen::Index m = map.weight_dim();
    const MatrixXd& c = spec.regularizer->linear_matrix();
    precision.bottomRightCorner(m, m) += c.transpose() * spec.alpha->asDiagonal() * c;
  }
  return GaussianDensity::from_precision(precision, linear);
}

HyperResult map_hyperparameters(const std::function<PosteriorSpec(const KernelSpec&)>& build,
                                const std::vector<double>& signal_stds, const std::vector<double>& length_scales,
                                const std::function<VectorXd(const PosteriorSpec&)>& start) {
  HyperResult out;
  double best = -std::numeric_limits<double>::infinity();
  for (double sf : signal_stds) {
    for (double ell : length_scales) {
      HyperCandidate c{sf, ell, -std::numeric_limits<double>::infinity()};
      try {
        const KernelSpec k{sf, ell};
        const EmbeddedPosterior post(build(k));
        const MapResult map = find_map(post, start(post.spec()));
        if (std::isfinite(map.log_density)) c.log_density = map.log_density;
      } catch (const Error&) {
        // Candidate stays at -inf.
      }
      out.table.push_back(c);
      if (c.log_density > best) {
        best = c.log_density;
        out.signal_std = sf;
        out.length_scale = ell;
      }
    }
  }
  if (!std::isfinite(best)) fail(ErrorCode::NonConvergence, "every hyperparameter candidate failed");
  return out;
}

}  // namespace embgp
