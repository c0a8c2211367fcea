#include <cmath>
#include <memory>
#include <random>

#include "doctest.h"
#include "embgp/calibrate.hpp"
#include "embgp/errors.hpp"
#include "embgp/pushforward.hpp"

using namespace embgp;

namespace {

struct Setup {
  EigenBasis basis = nystrom_basis(KernelSpec{1.0, 0.3}, WeightingMeasure::uniform(-1.0, 1.0), 6);
  VectorXd grid = VectorXd::LinSpaced(15, -1.0, 1.0);
  PointwiseForward map{linear_pair().fit, basis, grid};
  MatrixXd design = basis.evaluate(grid);
};

}  // namespace

TEST_CASE("single sample: zero spread except for the noise") {
  Setup s;
  MatrixXd one(1, 8);
  one << 0.5, -1.0, 0.1, 0.2, -0.3, 0.0, 0.4, 0.1;
  const auto t = pushforward_bands(one, s.map, s.design, s.grid, 0.2);
  CHECK(t.used == 1);
  for (int c : {BandTable::PfpF, BandTable::PfpG, BandTable::PfpGp}) CHECK(t.std.col(c).cwiseAbs().maxCoeff() == 0.0);
  CHECK((t.std.col(BandTable::Pp).array() - 0.2).abs().maxCoeff() < 1e-15);
  const VectorXd theta = one.row(0).transpose();
  CHECK((t.mean.col(BandTable::PfpG) - s.map.predict(theta)).norm() < 1e-14);
  CHECK((t.mean.col(BandTable::PfpGp) - s.design * theta.tail(6)).norm() < 1e-14);
}

TEST_CASE("predictive variance exceeds the push-forward by the noise variance") {
  Setup s;
  std::mt19937_64 rng(3);
  const auto law = GaussianDensity::diagonal(VectorXd::Zero(8), VectorXd::Constant(8, 0.5));
  const MatrixXd draws = law.sample(rng, 4000);
  const auto t = pushforward_bands(draws, s.map, s.design, s.grid, 0.2);
  const VectorXd diff = t.std.col(BandTable::Pp).cwiseAbs2() - t.std.col(BandTable::PfpG).cwiseAbs2();
  CHECK((diff.array() - 0.04).abs().maxCoeff() < 1e-12);

  // Monte Carlo bands approach the exact Gaussian ones.
  const auto exact = gaussian_bands(law, s.map, s.design, s.grid, 0.2);
  for (int c = 0; c < 4; ++c) {
    CHECK((t.mean.col(c) - exact.mean.col(c)).cwiseAbs().maxCoeff() < 0.1);
    CHECK((t.std.col(c) - exact.std.col(c)).cwiseAbs().maxCoeff() < 0.1);
  }
}

TEST_CASE("failing samples are skipped and counted") {
  const auto pair = sinexp_pair(SinExpSite::S2);
  const VectorXd grid = VectorXd::LinSpaced(5, -2.0, 2.0);
  const PointwiseForward map(pair.fit, grid);
  MatrixXd samples(3, 2);
  samples << 0.5, 1.0, 0.0, 500.0, -0.5, 0.8;
  const auto t = pushforward_bands(samples, map, MatrixXd(5, 0), grid, 0.2);
  CHECK(t.used == 2);
  CHECK(t.skipped == 1);
  CHECK_THROWS_AS(pushforward_bands(samples.middleRows(1, 1), map, MatrixXd(5, 0), grid, 0.2), Error);
}
