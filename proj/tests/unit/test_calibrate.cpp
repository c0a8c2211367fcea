#include <cmath>
#include <memory>
#include <random>

#include "doctest.h"
#include "embgp/adr.hpp"
#include "embgp/calibrate.hpp"
#include "embgp/errors.hpp"
#include "embgp/mcmc.hpp"
#include "embgp/models.hpp"
#include "oracles.hpp"

using namespace embgp;

namespace {

Dataset linear_data(std::uint64_t seed, Eigen::Index n = 20) {
  const auto pair = linear_pair();
  return generate_data(pair.truth, uniform_inputs(n, -1.0, 1.0, seed), 0.2, seed + 100);
}

GaussianDensity linear_lambda_prior() {
  return GaussianDensity::diagonal((VectorXd(2) << -2.0, 4.0).finished(), VectorXd::Ones(2));
}

MatrixXd linear_design(const VectorXd& x) {
  MatrixXd g(x.size(), 2);
  g.col(0).setOnes();
  g.col(1) = x;
  return g;
}

}  // namespace

TEST_CASE("least squares on realizable and noisy linear data") {
  const auto model = linear_pair().fit;
  const MatrixXd x = uniform_inputs(20, -1.0, 1.0, 3);
  Dataset exact = Dataset::one_dimensional(x.col(0), (2.0 + 3.0 * x.col(0).array()).matrix(), 0.2);
  const PointwiseForward plain(model, x.col(0));
  const VectorXd lam = least_squares_lambda(plain, exact, VectorXd::Zero(2));
  CHECK(std::abs(lam[0] - 2.0) < 1e-10);
  CHECK(std::abs(lam[1] - 3.0) < 1e-10);

  const auto d = linear_data(11);
  const PointwiseForward plain2(model, d.x());
  const MatrixXd g = linear_design(d.x());
  const VectorXd ne = (g.transpose() * g).ldlt().solve(g.transpose() * d.outputs);
  const auto res = least_squares_lambda_result(plain2, d, (VectorXd(2) << -2.0, 4.0).finished());
  CHECK(res.converged);
  CHECK((res.lambda - ne).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("least squares on the sin+exp model reaches a stationary point") {
  const auto pair = sinexp_pair(SinExpSite::S2);
  const auto d = generate_data(pair.truth, uniform_inputs(50, -2.0, 2.0, 1), 0.2, 2);
  const PointwiseForward plain(pair.fit, d.x());
  const auto res = least_squares_lambda_result(plain, d, (VectorXd(2) << -3.0, 0.0).finished());
  CHECK(res.converged);
  const VectorXd r = d.outputs - plain.plain_predict(res.lambda);
  const VectorXd grad = plain.plain_jacobian(res.lambda).transpose() * r;
  CHECK(grad.norm() < 1e-10 * (1.0 + 0.5 * r.squaredNorm()));
}

TEST_CASE("KOH with a vanishing kernel is Bayesian linear regression") {
  const auto d = linear_data(5);
  const PointwiseForward plain(linear_pair().fit, d.x());
  const SqExpCovariance k(KernelSpec{1e-9, 0.3});
  const auto prior = linear_lambda_prior();
  const auto koh = koh_linear_posterior(plain, d, k, prior);
  const MatrixXd g = linear_design(d.x());
  const MatrixXd prec = g.transpose() * g / 0.04 + MatrixXd::Identity(2, 2);
  const MatrixXd cov = prec.inverse();
  const VectorXd mean = cov * (g.transpose() * d.outputs / 0.04 + prior.mean);
  CHECK((koh.mean - mean).norm() < 1e-8);
  CHECK((koh.covariance - cov).norm() < 1e-8);
  // The unnormalized log density differs from the Gaussian by a constant.
  const VectorXd a = mean, b = mean + VectorXd::Constant(2, 0.3);
  const double dk = koh_log_posterior(a, plain, d, k, prior) - koh_log_posterior(b, plain, d, k, prior);
  CHECK(std::abs(dk - (koh.log_pdf(a) - koh.log_pdf(b))) < 1e-6);
}

TEST_CASE("KOH closed form against an MCMC run of its log density") {
  const auto d = linear_data(21);
  const PointwiseForward plain(linear_pair().fit, d.x());
  const SqExpCovariance k(KernelSpec{1.0, 0.3});
  const auto prior = linear_lambda_prior();
  const auto exact = koh_linear_posterior(plain, d, k, prior);
  SamplerSettings s;
  s.n_steps = 4000;
  s.burn_in = 1000;
  s.seed = 17;
  const auto chain = sample([&](const VectorXd& l) { return koh_log_posterior(l, plain, d, k, prior); },
                            exact.mean, s);
  const MatrixXd draws = chain.samples();
  const VectorXd mc = oracle::sample_mean(draws);
  for (int j = 0; j < 2; ++j) {
    const double se = std::sqrt(exact.covariance(j, j) / ess(chain, j));
    CHECK(std::abs(mc[j] - exact.mean[j]) < 3.0 * se);
  }
  const MatrixXd cov = oracle::sample_cov(draws);
  CHECK((cov - exact.covariance).norm() / exact.covariance.norm() < 0.1);
}

TEST_CASE("KOH bias posterior") {
  const auto model = linear_pair().fit;
  const VectorXd x = VectorXd::LinSpaced(10, -1.0, 1.0);
  const VectorXd lam = (VectorXd(2) << 0.5, 1.5).finished();
  const PointwiseForward plain(model, x);
  const SqExpCovariance k(KernelSpec{1.0, 0.3});
  const Dataset exact = Dataset::one_dimensional(x, plain.plain_predict(lam), 1e-3);
  const auto zero = koh_bias_posterior(lam.transpose(), plain, exact, k, x);
  CHECK(zero.mean().cwiseAbs().maxCoeff() < 1e-8);

  const auto d = linear_data(8, 10);
  const PointwiseForward plain2(model, d.x());
  const VectorXd xs = VectorXd::LinSpaced(7, -1.5, 1.5);
  const auto one = koh_bias_posterior(lam.transpose(), plain2, d, k, xs);
  const Dataset shifted = Dataset::one_dimensional(d.x(), d.outputs - plain2.plain_predict(lam), d.noise_std);
  const auto fs = fs_posterior_predictive(k, shifted, xs);
  CHECK((one.mean() - fs.mean).norm() < 1e-10);
  CHECK((one.covariance - fs.covariance).norm() < 1e-10);
}

TEST_CASE("embedded log posterior: zero embedding and closed-form Gaussian") {
  const auto d = linear_data(31);
  const auto basis = nystrom_basis(KernelSpec{1.0, 0.3}, WeightingMeasure::uniform(-1.0, 1.0), 8);
  auto map = std::make_shared<PointwiseForward>(linear_pair().fit, basis, d.x());
  PosteriorSpec spec{map, d, PriorSpec::with_basis(linear_lambda_prior(), basis.eigenvalues()), nullptr, {}};
  const EmbeddedPosterior post(spec);

  const VectorXd lam = (VectorXd(2) << 0.3, -0.4).finished();
  VectorXd theta = VectorXd::Zero(10);
  theta.head(2) = lam;
  const VectorXd r = d.outputs - linear_design(d.x()) * lam;
  const double loglik = -0.5 * d.size() * std::log(2 * M_PI * 0.04) - 0.5 * r.squaredNorm() / 0.04;
  CHECK(std::abs(post(theta) - (loglik + spec.prior.joint().log_pdf(theta))) < 1e-9);

  const auto exact = linear_gaussian_posterior(spec);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  const VectorXd ref = exact.mean;
  for (int i = 0; i < 100; ++i) {
    VectorXd t(10);
    for (int j = 0; j < 10; ++j) t[j] = exact.mean[j] + 0.5 * nd(rng);
    CHECK(std::abs((post(t) - post(ref)) - (exact.log_pdf(t) - exact.log_pdf(ref))) < 1e-8);
  }
  const auto map_point = find_map(post, VectorXd::Zero(10));
  CHECK(map_point.converged);
  CHECK((map_point.theta - exact.mean).norm() < 1e-8);
}

TEST_CASE("overflowing proposals become -inf and are counted") {
  const auto pair = sinexp_pair(SinExpSite::S2);
  const auto d = generate_data(pair.truth, uniform_inputs(10, -2.0, 2.0, 1), 0.2, 2);
  auto map = std::make_shared<PointwiseForward>(pair.fit, d.x());
  const EmbeddedPosterior post({map, d, PriorSpec{linear_lambda_prior(), GaussianDensity::diagonal(VectorXd(0), VectorXd(0))}, nullptr, {}});
  const VectorXd bad = (VectorXd(2) << 0.0, 500.0).finished();
  CHECK(std::isinf(post(bad)));
  CHECK(post(bad) < 0);
  CHECK(post.overflow_count() == 2);
}

TEST_CASE("ROGP penalty shrinks the constraint as alpha grows") {
  const auto d = linear_data(41);
  const auto basis = nystrom_basis(KernelSpec{1.0, 0.3}, WeightingMeasure::uniform(-1.0, 1.0), 10);
  auto map = std::make_shared<PointwiseForward>(linear_pair().fit, basis, d.x());
  const VectorXd lstar = least_squares_lambda(PointwiseForward(linear_pair().fit, d.x()), d, VectorXd::Zero(2));
  auto reg = rogp_constraints(linear_pair().fit, lstar, basis, WeightingMeasure::uniform(-1.0, 1.0));
  CHECK(reg->is_linear());
  double prev = 0.0;
  for (double a : {1e4, 1e6, 1e8}) {
    PosteriorSpec spec{map, d, PriorSpec::with_basis(linear_lambda_prior(), basis.eigenvalues()), reg,
                       VectorXd::Constant(2, a)};
    const auto g = linear_gaussian_posterior(spec);
    const MatrixXd c = reg->linear_matrix();
    // posterior sd of each constraint
    const MatrixXd cov_r = c * g.covariance.bottomRightCorner(10, 10) * c.transpose();
    const double sd = std::sqrt(cov_r.diagonal().maxCoeff());
    if (prev > 0) CHECK(sd < prev);
    prev = sd;
    const EmbeddedPosterior post(spec);
    const auto m = find_map(post, g.mean + VectorXd::Constant(12, 0.01));
    CHECK((m.theta - g.mean).norm() < 1e-6);
  }
}

TEST_CASE("hyperparameter grid search returns the argmax") {
  const auto d = linear_data(51, 15);
  const auto build = [&](const KernelSpec& k) {
    const auto basis = nystrom_basis(k, WeightingMeasure::uniform(-1.0, 1.0), 6);
    auto map = std::make_shared<PointwiseForward>(linear_pair().fit, basis, d.x());
    return PosteriorSpec{map, d, PriorSpec::with_basis(linear_lambda_prior(), basis.eigenvalues()), nullptr, {}};
  };
  const auto res = map_hyperparameters(build, {1.0, 10.0, 100.0}, {0.3, 0.6, 1.0},
                                       [](const PosteriorSpec& s) { return VectorXd(VectorXd::Zero(s.map->dim())); });
  CHECK(res.table.size() == 9);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& c : res.table) best = std::max(best, c.log_density);
  for (const auto& c : res.table)
    if (c.log_density == best) {
      CHECK(c.signal_std == res.signal_std);
      CHECK(c.length_scale == res.length_scale);
    }
}

TEST_CASE("Laplace approximation is exact for a linear Gaussian posterior") {
  const auto d = linear_data(61);
  const auto basis = nystrom_basis(KernelSpec{1.0, 0.3}, WeightingMeasure::uniform(-1.0, 1.0), 8);
  auto map = std::make_shared<PointwiseForward>(linear_pair().fit, basis, d.x());
  const VectorXd lstar = least_squares_lambda(PointwiseForward(linear_pair().fit, d.x()), d, VectorXd::Zero(2));
  PosteriorSpec spec{map, d, PriorSpec::with_basis(linear_lambda_prior(), basis.eigenvalues()),
                     rogp_constraints(linear_pair().fit, lstar, basis, WeightingMeasure::uniform(-1.0, 1.0)),
                     VectorXd::Constant(2, 1e8)};
  const auto exact = linear_gaussian_posterior(spec);
  const EmbeddedPosterior post(spec);
  const auto lap = laplace_approximation(post, exact.mean);
  const VectorXd sd = exact.std_devs();
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      CHECK(std::abs(lap.covariance(i, j) - exact.covariance(i, j)) < 1e-6 * sd[i] * sd[j]);
}

TEST_CASE("ADR plain least squares and hyperparameter search") {
  const AdrGrid g{200, 200};
  const MatrixXd obs = adr_observation_inputs(g, 100, 3);
  const Dataset d = generate_data(adr_truth(g), obs, 0.02, 4);
  const AdrForward plain(g, MatrixXd::Zero(201, 0), obs);
  const auto ls = least_squares_lambda_result(plain, d, VectorXd::Constant(1, 5.0));
  CHECK(ls.converged);
  // The fit source lacks the cosine term, so lambda* sits a few percent
  // above 2 pi; the full-field LS value is 6.512.
  CHECK(std::abs(ls.lambda[0] - 6.51) < 0.2);

  const auto mu = WeightingMeasure::uniform(0.0, 1.0);
  const int q = 50;
  const QuadratureRule tx = trapezoid(q, 0.0, 1.0);
  MatrixXd qn((q + 1) * (q + 1), 2);
  VectorXd qw((q + 1) * (q + 1));
  for (int i = 0; i <= q; ++i)
    for (int j = 0; j <= q; ++j) {
      qn.row(i * (q + 1) + j) << tx.nodes[i], tx.nodes[j];
      qw[i * (q + 1) + j] = tx.weights[i] * tx.weights[j];
    }
  const auto build = [&](const KernelSpec& k) {
    const auto basis = nystrom_basis(k, mu, 10, 400);
    auto reg = std::make_shared<RogpConstraints>(std::make_shared<AdrForward>(g, basis, qn), qw, ls.lambda);
    return PosteriorSpec{std::make_shared<AdrForward>(g, basis, obs), d,
                         PriorSpec::with_basis(GaussianDensity::diagonal(VectorXd::Constant(1, 5.0), VectorXd::Ones(1)),
                                               basis.eigenvalues()),
                         reg, VectorXd::Constant(1, 1e6)};
  };
  const auto start = [&](const PosteriorSpec&) {
    VectorXd s = VectorXd::Zero(11);
    s[0] = ls.lambda[0];
    return s;
  };
  const auto res = map_hyperparameters(build, {25.0, 50.0, 100.0, 200.0, 400.0}, {0.3, 0.4, 0.5, 0.6, 0.7, 0.8}, start);
  CHECK(res.signal_std >= 50.0);
  CHECK(res.signal_std <= 200.0);
  CHECK(std::abs(res.length_scale - 0.6) <= 0.2 + 1e-12);
}
