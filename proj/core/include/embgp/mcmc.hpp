#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>

namespace embgp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

using LogDensity = std::function<double(const VectorXd&)>;

enum class SamplerAlgorithm { EnsembleAffine, AdaptiveRwMetropolis };

struct SamplerSettings {
  SamplerAlgorithm algorithm = SamplerAlgorithm::EnsembleAffine;
  int n_walkers = 0;  // 0: max(2 dim, 32) for the ensemble, 1 for RWM
  int n_steps = 40000;
  int burn_in = 10000;
  int thin = 1;  // keep every thin-th step
  std::uint64_t seed = 1;
  double stretch = 2.0;
  double target_acceptance = 0.234;
  // Spread of the walker cloud around a single initial point, relative to
  // (1 + |theta_i|).
  double init_scale = 1e-3;
  int stuck_limit = 1000;

  void validate(Eigen::Index dim) const;
};

// Stored draws, row (s * n_walkers + k) for stored step s and walker k.
struct ChainSet {
  int n_walkers = 0;
  int dim = 0;
  int n_stored = 0;
  int burn_in_stored = 0;  // stored steps that fall in the burn-in
  int thin = 1;
  std::uint64_t seed = 0;
  MatrixXd draws;
  VectorXd log_density;
  double acceptance = 0.0;
  long nonfinite_proposals = 0;
  double runtime_seconds = 0.0;

  // Post-burn-in draws pooled over walkers.
  MatrixXd samples() const;
  VectorXd sample_log_density() const;
  // Post-burn-in series of one coordinate, one column per walker.
  MatrixXd coordinate(int j) const;
  // Final state of every walker (rows).
  MatrixXd final_walkers() const;
};

int worker_threads();

// Runs the sampler from a walker cloud (one row per walker) or a single
// point.  BadInit if any initial state has non-finite density; StuckChain
// after stuck_limit consecutive steps without an accepted move.
ChainSet sample_walkers(const LogDensity& logpost, const MatrixXd& init_walkers, const SamplerSettings& settings);
ChainSet sample(const LogDensity& logpost, const VectorXd& init, const SamplerSettings& settings);

// Initial-positive-sequence effective sample size of a multi-walker series
// (one column per walker).  DegenerateChain for a constant series.
double ess_series(const MatrixXd& series);
double ess(const ChainSet& chain, int coordinate);
VectorXd ess_all(const ChainSet& chain);
// Integrated autocorrelation time, n_total / ESS.
double integrated_autocorrelation(const MatrixXd& series);

}  // namespace embgp
