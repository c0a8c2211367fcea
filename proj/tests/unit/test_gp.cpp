#include <cmath>
#include <random>

#include "doctest.h"
#include "embgp/errors.hpp"
#include "embgp/gp.hpp"
#include "embgp/models.hpp"
#include "oracles.hpp"

using namespace embgp;

namespace {

Dataset demo_data(std::uint64_t seed, Eigen::Index n = 20, double noise_std = std::sqrt(0.1)) {
  return generate_data(smooth_demo_truth(), gaussian_inputs(n, 0.0, 2.0, seed), noise_std, seed + 1);
}

}  // namespace

TEST_CASE("FS predictive nearly interpolates a single precise datum") {
  const auto d = Dataset::one_dimensional(VectorXd::Constant(1, 0.4), VectorXd::Constant(1, 1.7), 1e-6);
  const auto p = fs_posterior_predictive(KernelSpec{1.0, 1.0}, d, d.x());
  CHECK(std::abs(p.mean[0] - 1.7) < 1e-4);
  CHECK(p.covariance(0, 0) >= 0.0);
  CHECK(p.covariance(0, 0) < 1e-9);
}

TEST_CASE("FS predictive recovers the prior under huge noise") {
  const auto d = demo_data(1, 20, 1e6);
  const VectorXd xs = VectorXd::LinSpaced(7, -2.0, 2.0);
  const auto p = fs_posterior_predictive(KernelSpec{1.0, 1.0}, d, xs);
  // outputs carry noise of size 1e6, so the mean is O(1e-12 * sum |y|)
  CHECK(p.mean.cwiseAbs().maxCoeff() < 1e-4);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) CHECK(std::abs(p.covariance(i, j) - oracle::sqe(1.0, 1.0, xs[i], xs[j])) < 1e-8);
}

TEST_CASE("FS predictive against a hand-built normal-equations oracle") {
  const auto d = demo_data(4, 6, 0.3);
  const VectorXd xs = VectorXd::LinSpaced(5, -1.0, 1.0);
  const auto p = fs_posterior_predictive(KernelSpec{1.3, 0.7}, d, xs);
  MatrixXd k(6, 6), ks(5, 6), kss(5, 5);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) k(i, j) = oracle::sqe(1.3, 0.7, d.x()[i], d.x()[j]) + (i == j ? 0.09 : 0.0);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 6; ++j) ks(i, j) = oracle::sqe(1.3, 0.7, xs[i], d.x()[j]);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) kss(i, j) = oracle::sqe(1.3, 0.7, xs[i], xs[j]);
  const auto lu = k.fullPivLu();
  const VectorXd mean = ks * lu.solve(d.outputs);
  const MatrixXd cov = kss - ks * lu.solve(ks.transpose());
  CHECK((p.mean - mean).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((p.covariance - cov).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("WS posterior with no data is the prior") {
  const WeightSpaceGP gp(analytic_sqe_basis({1.0, 1.0}, WeightingMeasure::gaussian(0.0, 2.0), 8));
  Dataset empty;
  empty.inputs = MatrixXd(0, 1);
  empty.outputs = VectorXd(0);
  empty.noise_std = 0.2;
  const auto post = ws_weight_posterior(gp, empty);
  CHECK(post.mean.norm() < 1e-14);
  CHECK((post.covariance - MatrixXd(gp.basis.eigenvalues().asDiagonal())).norm() < 1e-12);
}

TEST_CASE("WS posterior, one basis function and one datum") {
  const auto basis = analytic_sqe_basis({1.0, 1.0}, WeightingMeasure::gaussian(0.0, 2.0), 1);
  const WeightSpaceGP gp(basis);
  const double x = 0.6, y = 1.4, sd = 0.3;
  const auto d = Dataset::one_dimensional(VectorXd::Constant(1, x), VectorXd::Constant(1, y), sd);
  const auto post = ws_weight_posterior(gp, d);
  const double phi = basis.evaluate(x)[0], lam = basis.eigenvalues()[0];
  CHECK(std::abs(post.mean[0] - phi * y / (phi * phi + sd * sd / lam)) < 1e-12);
  CHECK(std::abs(post.covariance(0, 0) - 1.0 / (phi * phi / (sd * sd) + 1.0 / lam)) < 1e-12);
}

TEST_CASE("WS posterior mean against Monte Carlo draws") {
  const auto d = demo_data(7);
  const WeightSpaceGP gp(analytic_sqe_basis({1.0, 1.0}, WeightingMeasure::gaussian(0.0, 2.0), 40));
  const auto post = ws_weight_posterior(gp, d);
  std::mt19937_64 rng(99);
  const MatrixXd draws = post.sample(rng, 100000);
  const VectorXd mc = oracle::sample_mean(draws);
  const VectorXd se = post.std_devs() / std::sqrt(100000.0);
  for (int i = 0; i < 40; ++i) CHECK(std::abs(mc[i] - post.mean[i]) < 3.0 * se[i] + 1e-12);
}

TEST_CASE("WS push-forward of the prior and of a point mass") {
  const auto basis = analytic_sqe_basis({1.0, 1.0}, WeightingMeasure::gaussian(0.0, 2.0), 10);
  const WeightSpaceGP gp(basis);
  for (double x : {-4.0, 0.0, 3.5}) {
    const auto law = ws_pushforward(gp, gp.weight_prior, x);
    CHECK(std::abs(law.covariance(0, 0) - (1.0 - variance_deficit(basis, x))) < 1e-12);
  }
  const VectorXd w = VectorXd::LinSpaced(10, -1.0, 1.0);
  const auto point = ws_pushforward(gp, GaussianDensity{w, MatrixXd::Zero(10, 10), {}}, 0.8);
  CHECK(point.covariance(0, 0) == 0.0);
  CHECK(std::abs(point.mean[0] - basis.evaluate(0.8).dot(w)) < 1e-14);
  CHECK_THROWS_AS(ws_pushforward(gp, GaussianDensity::diagonal(VectorXd::Zero(3), VectorXd::Ones(3)), 0.0), Error);
}

TEST_CASE("FS and WS agree near the data and WS collapses far away") {
  const auto d = demo_data(2024);
  const WeightSpaceGP gp(analytic_sqe_basis({1.0, 1.0}, WeightingMeasure::gaussian(0.0, 2.0), 40));
  const auto post = ws_weight_posterior(gp, d);
  const VectorXd grid = VectorXd::LinSpaced(100, -3.0, 3.0);
  const auto ws = ws_pushforward_band(gp, post, grid);
  const auto fs = fs_posterior_predictive(KernelSpec{1.0, 1.0}, d, grid);
  const VectorXd fs_std = fs.std_devs();
  const double lo = d.x().minCoeff(), hi = d.x().maxCoeff();
  for (int i = 0; i < grid.size(); ++i) {
    if (grid[i] < lo || grid[i] > hi) continue;
    CHECK(std::abs(ws.mean[i] - fs.mean[i]) < 2e-2);
    CHECK(std::abs(ws.std[i] - fs_std[i]) < 2e-2);
  }
  const VectorXd far = VectorXd::LinSpaced(5, 6.0, 8.0);
  const auto ws_far = ws_pushforward_band(gp, post, far);
  const auto fs_far = fs_posterior_predictive(KernelSpec{1.0, 1.0}, d, far);
  for (int i = 0; i < far.size(); ++i) CHECK(ws_far.std[i] < fs_far.std_devs()[i]);
}

TEST_CASE("adding a datum never increases WS variance there") {
  const WeightSpaceGP gp(analytic_sqe_basis({1.0, 0.7}, WeightingMeasure::gaussian(0.0, 2.0), 25));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = demo_data(seed, 8);
    const auto post = ws_weight_posterior(gp, d);
    std::mt19937_64 rng(seed);
    const double xnew = std::normal_distribution<double>(0.0, 1.5)(rng);
    Dataset more = d;
    more.inputs.conservativeResize(9, 1);
    more.outputs.conservativeResize(9);
    more.inputs(8, 0) = xnew;
    more.outputs[8] = 0.3;
    const auto post2 = ws_weight_posterior(gp, more);
    CHECK(ws_pushforward(gp, post2, xnew).covariance(0, 0) <= ws_pushforward(gp, post, xnew).covariance(0, 0) + 1e-14);
  }
}

TEST_CASE("push-forward mean is linear in the weight law") {
  const WeightSpaceGP gp(analytic_sqe_basis({1.0, 1.0}, WeightingMeasure::gaussian(0.0, 2.0), 6));
  const VectorXd a = VectorXd::LinSpaced(6, -1.0, 2.0), b = VectorXd::LinSpaced(6, 0.5, -0.5);
  const MatrixXd z = MatrixXd::Zero(6, 6);
  const double x = 0.9, t = 0.3;
  const double mix = ws_pushforward(gp, GaussianDensity{t * a + (1 - t) * b, z, {}}, x).mean[0];
  const double sep = t * ws_pushforward(gp, GaussianDensity{a, z, {}}, x).mean[0] +
                     (1 - t) * ws_pushforward(gp, GaussianDensity{b, z, {}}, x).mean[0];
  CHECK(std::abs(mix - sep) < 1e-14);
}
