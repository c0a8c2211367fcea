#include <cmath>
#include <memory>
#include <random>

#include "doctest.h"
#include "embgp/errors.hpp"
#include "embgp/kernels.hpp"
#include "oracles.hpp"

using namespace embgp;

namespace {

// Largest |<phi_i, phi_j> - delta_ij| under a rule.
double orthonormality_error(const EigenBasis& b, const QuadratureRule& rule) {
  const MatrixXd phi = b.evaluate(rule.nodes);
  const MatrixXd gram = phi.transpose() * rule.weights.asDiagonal() * phi;
  return (gram - MatrixXd::Identity(b.size(), b.size())).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("kernel_eval values and symmetry") {
  const KernelSpec k{1.0, 1.0};
  CHECK(kernel_eval(k, 0.0, 0.0) == 1.0);
  CHECK(std::abs(kernel_eval(k, 0.0, 1.0) - std::exp(-0.5)) < 1e-15);
  const KernelSpec k2{1.0, 0.3};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const double a = u(rng), b = u(rng);
    CHECK(kernel_eval(k2, a, b) == kernel_eval(k2, b, a));
    CHECK(std::abs(kernel_eval(k2, a, b) - oracle::sqe(1.0, 0.3, a, b)) < 1e-15);
  }
  const KernelSpec k3{2.5, 0.7};
  CHECK(std::abs(kernel_eval(k3, 1.3, 1.3) - 6.25) < 1e-14);
}

TEST_CASE("invalid hyperparameters are rejected") {
  CHECK_THROWS_AS(KernelSpec({-1.0, 1.0}).validate(), Error);
  CHECK_THROWS_AS(KernelSpec({1.0, 0.0}).validate(), Error);
}

TEST_CASE("analytic basis: trace identity and monotone partial sums") {
  const auto b = analytic_sqe_basis({1.0, 1.0}, WeightingMeasure::gaussian(0.0, 2.0), 200);
  double partial = 0.0;
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    if (i > 0) CHECK(b.eigenvalues()[i] <= b.eigenvalues()[i - 1]);
    CHECK(b.eigenvalues()[i] > 0.0);
    partial += b.eigenvalues()[i];
    CHECK(partial <= 1.0 + 1e-12);
  }
  CHECK(std::abs(partial - 1.0) < 1e-10);
}

TEST_CASE("analytic basis requires a gaussian measure") {
  try {
    analytic_sqe_basis({1.0, 1.0}, WeightingMeasure::uniform(-1.0, 1.0), 5);
    FAIL("expected UnsupportedMeasure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedMeasure);
  }
}

TEST_CASE("analytic basis: shorter length scale decays more slowly") {
  const auto mu = WeightingMeasure::gaussian(0.0, 2.0);
  const auto wide = analytic_sqe_basis({1.0, 1.0}, mu, 10);
  const auto narrow = analytic_sqe_basis({1.0, 0.2}, mu, 10);
  CHECK(narrow.eigenvalues()[9] / narrow.eigenvalues()[0] > wide.eigenvalues()[9] / wide.eigenvalues()[0]);
}

TEST_CASE("analytic eigenfunctions are orthonormal under the gaussian measure") {
  const auto mu = WeightingMeasure::gaussian(0.3, 2.0);
  const auto b = analytic_sqe_basis({1.0, 0.5}, mu, 30);
  CHECK(orthonormality_error(b, gauss_hermite(400, 0.3, 2.0)) < 1e-10);
  // Independent check of the eigen-equation int k(x, y) phi(y) dmu(y) = lambda phi(x).
  for (double x : {-2.0, 0.1, 1.7}) {
    for (int i : {0, 3, 11}) {
      const double lhs = oracle::gaussian_expectation(
          [&](double y) { return oracle::sqe(1.0, 0.5, x, y) * b.evaluate(y)[i]; }, 0.3, 2.0);
      CHECK(std::abs(lhs - b.eigenvalues()[i] * b.evaluate(x)[i]) < 1e-9);
    }
  }
}

TEST_CASE("analytic and Nystrom bases agree under a gaussian measure") {
  const KernelSpec k{1.0, 1.0};
  const auto mu = WeightingMeasure::gaussian(0.0, 2.0);
  const auto a = analytic_sqe_basis(k, mu, 10);
  const auto n = nystrom_basis(k, mu, 10, 400);
  for (int i = 0; i < 10; ++i)
    CHECK(std::abs(a.eigenvalues()[i] - n.eigenvalues()[i]) <= 1e-6 * a.eigenvalues()[i]);
  const VectorXd xs = VectorXd::LinSpaced(50, -3.0, 3.0);
  const MatrixXd pa = a.evaluate(xs), pn = n.evaluate(xs);
  for (int i = 0; i < 5; ++i) {
    const double s = pa.col(i).dot(pn.col(i)) >= 0 ? 1.0 : -1.0;
    CHECK((pa.col(i) - s * pn.col(i)).cwiseAbs().maxCoeff() < 1e-4);
    // Both constructions follow the same sign convention.
    CHECK(s == 1.0);
  }
}

TEST_CASE("Nystrom basis is orthonormal under a rule of double order") {
  const auto mu = WeightingMeasure::uniform(-1.0, 1.0);
  const auto b = nystrom_basis(KernelSpec{1.0, 0.2}, mu, 20);
  CHECK(b.source() == BasisSource::Nystrom);
  CHECK(orthonormality_error(b, mu.rule(160)) < 1e-8);
  for (Eigen::Index i = 1; i < b.size(); ++i) CHECK(b.eigenvalues()[i] <= b.eigenvalues()[i - 1]);
}

TEST_CASE("Nystrom orthonormality across kernels, above the roundoff-dominated tail") {
  // Extending a mode divides by its eigenvalue, so modes below ~1e-6 of the
  // leading one carry roundoff far above 1e-8 and are excluded here.
  for (const auto& mu : {WeightingMeasure::uniform(-1.0, 1.0), WeightingMeasure::uniform(-2.0, 2.0)}) {
    for (double l : {0.3, 0.6, 1.0}) {
      const SqExpCovariance k(KernelSpec{1.0, l});
      const int m = std::min(resolvable_rank(k, mu, 160), 40);
      const auto b = nystrom_basis(KernelSpec{1.0, l}, mu, m);
      Eigen::Index keep = 0;
      while (keep < m && b.eigenvalues()[keep] >= 1e-6 * b.eigenvalues()[0]) ++keep;
      CHECK(orthonormality_error(b.truncated(keep), mu.rule(8 * m)) < 1e-8);
    }
  }
}

TEST_CASE("Nystrom Mercer reconstruction in the bulk") {
  const KernelSpec k{1.0, 1.0};
  const auto b = nystrom_basis(k, WeightingMeasure::gaussian(0.0, 2.0), 40);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    const double x = u(rng), y = u(rng);
    CHECK(std::abs(mercer_sum(b, x, y) - oracle::sqe(1.0, 1.0, x, y)) < 1e-3);
  }
}

TEST_CASE("Nystrom sign convention: nonnegative at the measure center") {
  for (const auto& mu : {WeightingMeasure::uniform(-1.0, 1.0), WeightingMeasure::gaussian(0.5, 1.0)}) {
    const auto b = nystrom_basis(KernelSpec{1.0, 0.3}, mu, 12);
    const VectorXd c = b.evaluate(mu.center());
    // Odd modes vanish at the center up to roundoff.
    for (Eigen::Index i = 0; i < b.size(); ++i) CHECK(c[i] >= -1e-10);
  }
}

TEST_CASE("Nystrom errors") {
  const KernelSpec k{1.0, 1.0};
  try {
    nystrom_basis(k, WeightingMeasure::uniform(-1.0, 1.0), 10, 30);
    FAIL("expected InsufficientQuadrature");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientQuadrature);
  }
  // A smooth kernel on a short interval resolves only a handful of modes.
  const int rank = resolvable_rank(SqExpCovariance(k), WeightingMeasure::uniform(-1.0, 1.0), 80);
  CHECK(rank < 20);
  try {
    nystrom_basis(k, WeightingMeasure::uniform(-1.0, 1.0), 20);
    FAIL("expected RankDeficientKernel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficientKernel);
  }
  CHECK_THROWS_AS(WeightingMeasure::uniform(1.0, -1.0).validate(), Error);
  CHECK_THROWS_AS(WeightingMeasure::gaussian(0.0, -1.0).validate(), Error);
}

TEST_CASE("variance deficit") {
  const auto mu = WeightingMeasure::gaussian(0.0, 2.0);
  const auto b10 = nystrom_basis(KernelSpec{1.0, 1.0}, mu, 10);
  CHECK(variance_deficit(b10, 0.0) < variance_deficit(b10, 3.0));

  const auto narrow = analytic_sqe_basis({1.0, 0.2}, mu, 10);
  const auto wide = analytic_sqe_basis({1.0, 1.0}, mu, 10);
  for (double x : {0.0, 1.0, 2.5}) CHECK(variance_deficit(narrow, x) > variance_deficit(wide, x));

  // Full resolvable rank leaves nothing on the table near the center.
  const SqExpCovariance k(KernelSpec{1.0, 1.0});
  const int full = resolvable_rank(k, mu, 200);
  const auto bf = nystrom_basis(KernelSpec{1.0, 1.0}, mu, full, 200);
  for (double x : {-1.0, 0.0, 0.5, 1.5}) CHECK(variance_deficit(bf, x) <= 1e-6);

  // Deficit identity and nonnegativity.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int i = 0; i < 50; ++i) {
    const double x = u(rng);
    const VectorXd phi = b10.evaluate(x);
    const double s = (b10.eigenvalues().array() * phi.array().square()).sum();
    CHECK(variance_deficit(b10, x) + s == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(variance_deficit(b10, x) >= -1e-8);
  }
}

TEST_CASE("truncation keeps the leading pairs") {
  const auto b = analytic_sqe_basis({1.0, 1.0}, WeightingMeasure::gaussian(0.0, 2.0), 12);
  const auto t = b.truncated(4);
  CHECK(t.size() == 4);
  CHECK((t.eigenvalues() - b.eigenvalues().head(4)).norm() == 0.0);
  CHECK((t.evaluate(0.7) - b.evaluate(0.7).head(4)).norm() == 0.0);
}
