#include <benchmark/benchmark.h>

#include <memory>

#include "embgp/adr.hpp"
#include "embgp/calibrate.hpp"
#include "embgp/kernels.hpp"
#include "embgp/mcmc.hpp"
#include "embgp/models.hpp"

using namespace embgp;

namespace {

const KernelSpec kLinearKernel{1.0, 0.3};

PosteriorSpec linear_spec(int m, Eigen::Index n) {
  const auto pair = linear_pair();
  const Dataset d = generate_data(pair.truth, uniform_inputs(n, -1.0, 1.0, 3), 0.2, 4);
  const EigenBasis basis = nystrom_basis(kLinearKernel, WeightingMeasure::uniform(-1.0, 1.0), m);
  auto map = std::make_shared<PointwiseForward>(pair.fit, basis, d.x());
  const auto prior = GaussianDensity::diagonal((VectorXd(2) << -2.0, 4.0).finished(), VectorXd::Ones(2));
  return PosteriorSpec{map, d, PriorSpec::with_basis(prior, basis.eigenvalues()), nullptr, {}};
}

void BM_NystromBasis(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(nystrom_basis(kLinearKernel, WeightingMeasure::uniform(-1.0, 1.0), m).size());
}
BENCHMARK(BM_NystromBasis)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_AnalyticBasisEvaluate(benchmark::State& state) {
  const EigenBasis basis = analytic_sqe_basis(kLinearKernel, WeightingMeasure::gaussian(0.0, 2.0), 400);
  const VectorXd xs = VectorXd::LinSpaced(static_cast<Eigen::Index>(state.range(0)), -3.0, 3.0);
  for (auto _ : state) benchmark::DoNotOptimize(basis.evaluate(xs).sum());
}
BENCHMARK(BM_AnalyticBasisEvaluate)->Arg(20)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_AdrSolve(benchmark::State& state) {
  AdrGrid grid;
  grid.nx = grid.nt = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(adr_solve(grid, 6.0)(grid.nt, grid.nx / 2));
}
BENCHMARK(BM_AdrSolve)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_LogPosterior(benchmark::State& state) {
  const EmbeddedPosterior post(linear_spec(static_cast<int>(state.range(0)), 500));
  VectorXd theta = VectorXd::Constant(post.dim(), 0.01);
  for (auto _ : state) benchmark::DoNotOptimize(post(theta));
}
BENCHMARK(BM_LogPosterior)->Arg(10)->Arg(20);

void BM_FindMap(benchmark::State& state) {
  const EmbeddedPosterior post(linear_spec(20, 20));
  const VectorXd start = VectorXd::Zero(post.dim());
  for (auto _ : state) benchmark::DoNotOptimize(find_map(post, start).theta[0]);
}
BENCHMARK(BM_FindMap)->Unit(benchmark::kMillisecond);

// 100 ensemble steps on the 22-dimensional linear posterior.
void BM_EnsembleSteps(benchmark::State& state) {
  const EmbeddedPosterior post(linear_spec(20, 20));
  SamplerSettings s;
  s.n_steps = 100;
  s.burn_in = 0;
  s.seed = 7;
  const VectorXd start = VectorXd::Zero(post.dim());
  for (auto _ : state) benchmark::DoNotOptimize(sample(std::cref(post), start, s).acceptance);
}
BENCHMARK(BM_EnsembleSteps)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
