#include "embgp/lis.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "embgp/errors.hpp"
#include "embgp/linalg.hpp"

namespace embgp {

VectorXd LisBasis::lift(const VectorXd& theta_r) const {
  if (theta_r.size() != r) fail(ErrorCode::DimensionError, "reduced coordinates have the wrong length");
  return prior_mean + u_r * (theta_r - reduced_prior_mean());
}

VectorXd LisBasis::combine(const VectorXd& theta_r, const VectorXd& theta_perp) const {
  return u_r * theta_r + u_perp * theta_perp;
}

std::uint64_t LisBasis::prior_hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const double* p, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, p + i, sizeof bits);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xffu;
        h *= 1099511628211ULL;
      }
    }
  };
  mix(prior_factor.data(), prior_factor.size());
  mix(prior_mean.data(), prior_mean.size());
  return h;
}

void PpgnhAccumulator::add(const MatrixXd& hessian) {
  const MatrixXd term = factor_.transpose() * hessian * factor_;
  if (count_ == 0) sum_ = MatrixXd::Zero(term.rows(), term.cols());
  sum_ += symmetrize(term);
  ++count_;
}

MatrixXd PpgnhAccumulator::mean() const {
  if (count_ == 0) fail(ErrorCode::EmptyLis, "no Hessians accumulated");
  return sum_ / static_cast<double>(count_);
}

MatrixXd local_gnh(const ForwardMap& map, const Dataset& data, const VectorXd& theta) {
  if (data.size() == 0) return MatrixXd::Zero(map.dim(), map.dim());
  MatrixXd jac;
  try {
    jac = map.jacobian(theta);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ModelOverflow) throw;
    fail(ErrorCode::EvaluationFailure, std::string("Jacobian evaluation failed: ") + e.what());
  }
  if (!jac.allFinite()) fail(ErrorCode::EvaluationFailure, "Jacobian has non-finite entries");
  return symmetrize(jac.transpose() * jac) / (data.noise_std * data.noise_std);
}

LisBasis lis_from_ppgnh(const MatrixXd& s, const MatrixXd& prior_factor, const VectorXd& prior_mean, double cutoff) {
  const Eigen::Index d = s.rows();
  if (s.cols() != d || prior_factor.rows() != d || prior_mean.size() != d)
    fail(ErrorCode::DimensionError, "ppGNH, prior factor and mean sizes differ");
  const SymmetricEigen es = symmetric_eigen_descending(s);
  int r = 0;
  while (r < d && es.values[r] >= cutoff) ++r;
  if (r == 0) {
    std::ostringstream os;
    os << "no ppGNH eigenvalue reaches the cutoff " << cutoff << " (largest " << es.values[0] << ")";
    fail(ErrorCode::EmptyLis, os.str());
  }
  LisBasis b;
  b.r = r;
  b.cutoff = cutoff;
  b.eigenvalues = es.values;
  b.prior_factor = prior_factor;
  b.prior_mean = prior_mean;
  const MatrixXd u = prior_factor * es.vectors;
  const MatrixXd w = prior_factor.transpose().triangularView<Eigen::Upper>().solve(es.vectors);
  b.u_r = u.leftCols(r);
  b.w_r = w.leftCols(r);
  b.u_perp = u.rightCols(d - r);
  b.w_perp = w.rightCols(d - r);
  return b;
}

double projector_distance(const LisBasis& a, const LisBasis& b) { return (a.projector() - b.projector()).norm(); }

ReducedPosterior::ReducedPosterior(LisBasis lis, const EmbeddedPosterior& base)
    : lis_(std::move(lis)), base_(base), reduced_mean_(lis_.reduced_prior_mean()) {
  if (base.spec().regularizer)
    fail(ErrorCode::ConfigError, "likelihood-informed subspaces are not available with ROGP penalties");
  if (lis_.dim() != base.dim()) fail(ErrorCode::DimensionError, "LIS dimension differs from the posterior");
}

double ReducedPosterior::operator()(const VectorXd& theta_r) const {
  const VectorXd theta = lis_.lift(theta_r);
  double ll;
  try {
    ll = base_.log_likelihood(theta);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ModelOverflow) throw;
    return -std::numeric_limits<double>::infinity();
  }
  if (std::isnan(ll)) return -std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(lis_.r);
  return ll - 0.5 * (theta_r - reduced_mean_).squaredNorm() - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

double reduced_log_posterior(const LisBasis& lis, const EmbeddedPosterior& base, const VectorXd& theta_r) {
  return ReducedPosterior(lis, base)(theta_r);
}

AdaptiveLisResult adaptive_global_lis(const EmbeddedPosterior& post, const VectorXd& start,
                                      const LisSettings& settings) {
  if (settings.max_hessians < 1) fail(ErrorCode::ConfigError, "max_hessians must be >= 1");
  AdaptiveLisResult out;
  const MapResult map = find_map(post, start);
  if (!map.converged || !std::isfinite(map.log_density))
    fail(ErrorCode::NonConvergence, "MAP search for the LIS starting point did not converge");
  out.map_point = map.theta;

  const PosteriorSpec& spec = post.spec();
  const MatrixXd factor = post.prior_factor().lower();
  const VectorXd mean = spec.prior.joint().mean;
  PpgnhAccumulator acc(factor);
  acc.add(local_gnh(*spec.map, spec.data, map.theta));
  out.hessians = 1;
  out.basis = lis_from_ppgnh(acc.mean(), factor, mean, settings.cutoff);
  if (settings.max_hessians == 1) {
    out.converged = true;
    return out;
  }

  // The Gauss-Newton Hessian of an affine map is constant, so one confirming
  // update is enough there.
  const int min_hessians = spec.map->affine() ? 1 : settings.min_hessians;
  const int consecutive = spec.map->affine() ? 1 : settings.consecutive;
  std::mt19937_64 rng(settings.seed ^ 0x11500ULL);
  std::normal_distribution<double> normal;
  VectorXd current = map.theta;
  int quiet = 0;
  int round = 0;
  while (out.hessians < settings.max_hessians) {
    const LisBasis& basis = out.basis;
    const ReducedPosterior reduced(basis, post);
    SamplerSettings ss;
    ss.n_steps = settings.pilot_steps;
    ss.burn_in = settings.pilot_steps / 3;
    ss.seed = settings.seed + static_cast<std::uint64_t>(round) * 7919ULL;
    ChainSet pilot = sample(std::cref(reduced), VectorXd(basis.reduce(current)), ss);
    double iat = 1.0;
    try {
      iat = integrated_autocorrelation(pilot.coordinate(0));
      for (int j = 1; j < basis.r; ++j)
        iat = std::max(iat, integrated_autocorrelation(pilot.coordinate(j)));
    } catch (const Error&) {
      iat = settings.pilot_steps;
    }
    const int stride = std::min(settings.max_stride, static_cast<int>(std::ceil(settings.stride_factor * iat)));
    MatrixXd walkers = pilot.final_walkers();
    const int extra = stride - (settings.pilot_steps - ss.burn_in);
    if (extra > 0) {
      ss.n_steps = extra + 1;
      ss.burn_in = 0;
      ss.seed += 1;
      walkers = sample_walkers(std::cref(reduced), walkers, ss).final_walkers();
    }
    const VectorXd theta_r = walkers.row(0).transpose();
    VectorXd theta_perp = basis.complement_prior_mean();
    for (Eigen::Index i = 0; i < theta_perp.size(); ++i) theta_perp[i] += normal(rng);
    current = basis.combine(theta_r, theta_perp);
    try {
      acc.add(local_gnh(*spec.map, spec.data, current));
      ++out.hessians;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EvaluationFailure) throw;
      current = map.theta;
    }
    ++round;
    if (acc.count() < min_hessians) continue;
    LisBasis next = lis_from_ppgnh(acc.mean(), factor, mean, settings.cutoff);
    const double dist = projector_distance(out.basis, next);
    out.distances.push_back(dist);
    out.basis = std::move(next);
    quiet = dist < settings.tolerance ? quiet + 1 : 0;
    if (quiet >= consecutive) {
      out.converged = true;
      break;
    }
  }
  return out;
}

MatrixXd recombine_samples(const LisBasis& lis, const MatrixXd& reduced_samples, int n_cs, std::uint64_t seed) {
  if (n_cs < 1) fail(ErrorCode::DomainError, "n_cs must be >= 1");
  if (reduced_samples.cols() != lis.r) fail(ErrorCode::DimensionError, "reduced samples have the wrong width");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const VectorXd perp_mean = lis.complement_prior_mean();
  const Eigen::Index s = reduced_samples.rows();
  MatrixXd out(s * n_cs, lis.dim());
  VectorXd perp(perp_mean.size());
  for (Eigen::Index i = 0; i < s; ++i) {
    const VectorXd base = lis.u_r * reduced_samples.row(i).transpose();
    for (int c = 0; c < n_cs; ++c) {
      for (Eigen::Index j = 0; j < perp.size(); ++j) perp[j] = perp_mean[j] + normal(rng);
      out.row(i * n_cs + c) = (base + lis.u_perp * perp).transpose();
    }
  }
  return out;
}

}  // namespace embgp
