#include "embgp/mcmc.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include "embgp/errors.hpp"
#include "embgp/linalg.hpp"

namespace embgp {

void SamplerSettings::validate(Eigen::Index dim) const {
  if (n_steps < 1 || burn_in < 0 || burn_in >= n_steps)
    fail(ErrorCode::ConfigError, "sampler needs n_steps >= 1 and 0 <= burn_in < n_steps");
  if (thin < 1) fail(ErrorCode::ConfigError, "sampler thin must be >= 1");
  if (algorithm == SamplerAlgorithm::EnsembleAffine && n_walkers != 0 && n_walkers < 2 * dim)
    fail(ErrorCode::ConfigError, "ensemble sampler needs at least 2 * dim walkers");
  if (!(stretch > 1.0)) fail(ErrorCode::ConfigError, "stretch parameter must exceed 1");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0))
    fail(ErrorCode::ConfigError, "target acceptance must lie in (0, 1)");
}

MatrixXd ChainSet::samples() const {
  const Eigen::Index start = static_cast<Eigen::Index>(burn_in_stored) * n_walkers;
  return draws.bottomRows(draws.rows() - start);
}

VectorXd ChainSet::sample_log_density() const {
  const Eigen::Index start = static_cast<Eigen::Index>(burn_in_stored) * n_walkers;
  return log_density.tail(log_density.size() - start);
}

MatrixXd ChainSet::coordinate(int j) const {
  const int n = n_stored - burn_in_stored;
  MatrixXd out(n, n_walkers);
  for (int s = 0; s < n; ++s)
    for (int k = 0; k < n_walkers; ++k)
      out(s, k) = draws(static_cast<Eigen::Index>(burn_in_stored + s) * n_walkers + k, j);
  return out;
}

MatrixXd ChainSet::final_walkers() const { return draws.bottomRows(n_walkers); }

int worker_threads() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("EMBGP_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

namespace {

// Evaluates fn(i) for i in [0, n); results must not depend on scheduling.
template <class F>
void parallel_for(int n, int threads, F&& fn) {
  if (threads <= 1 || n < 2) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int t = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(t);
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < t; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += t) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x5eedu};
  return std::mt19937_64(seq);
}

void check_init(const LogDensity& logpost, const MatrixXd& walkers, VectorXd& lp) {
  lp.resize(walkers.rows());
  for (Eigen::Index k = 0; k < walkers.rows(); ++k) {
    lp[k] = logpost(walkers.row(k).transpose());
    if (!std::isfinite(lp[k])) {
      std::ostringstream os;
      os << "initial state of walker " << k << " has non-finite log density";
      fail(ErrorCode::BadInit, os.str());
    }
  }
}

struct Recorder {
  ChainSet& out;
  int thin;
  int burn_in;
  int stored = 0;

  void record(int step, const MatrixXd& walkers, const VectorXd& lp) {
    if ((step + 1) % thin != 0) return;
    const Eigen::Index k = walkers.rows();
    out.draws.middleRows(static_cast<Eigen::Index>(stored) * k, k) = walkers;
    out.log_density.segment(static_cast<Eigen::Index>(stored) * k, k) = lp;
    if (step < burn_in) out.burn_in_stored = stored + 1;
    ++stored;
  }
};

void stuck_check(int& quiet, bool any_accepted, int limit) {
  quiet = any_accepted ? 0 : quiet + 1;
  if (quiet >= limit) {
    std::ostringstream os;
    os << "no proposal accepted for " << limit << " consecutive steps";
    fail(ErrorCode::StuckChain, os.str());
  }
}

ChainSet run_ensemble(const LogDensity& logpost, MatrixXd walkers, const SamplerSettings& s) {
  const int k = static_cast<int>(walkers.rows());
  const int dim = static_cast<int>(walkers.cols());
  const int threads = worker_threads();
  ChainSet out;
  out.n_walkers = k;
  out.dim = dim;
  out.thin = s.thin;
  out.seed = s.seed;
  out.n_stored = s.n_steps / s.thin;
  out.draws.resize(static_cast<Eigen::Index>(out.n_stored) * k, dim);
  out.log_density.resize(static_cast<Eigen::Index>(out.n_stored) * k);

  VectorXd lp;
  check_init(logpost, walkers, lp);
  std::vector<std::mt19937_64> rngs;
  rngs.reserve(k);
  for (int w = 0; w < k; ++w) rngs.push_back(stream(s.seed, static_cast<std::uint64_t>(w)));

  const int half = k / 2;
  const double a = s.stretch;
  long accepted = 0;
  long nonfinite = 0;
  int quiet = 0;
  Recorder rec{out, s.thin, s.burn_in};
  std::vector<char> acc(k);
  std::vector<char> bad(k);
  MatrixXd proposals(k, dim);
  VectorXd log_z(k);
  VectorXd lp_new(k);
  VectorXd log_u(k);

  for (int step = 0; step < s.n_steps; ++step) {
    bool any = false;
    for (int part = 0; part < 2; ++part) {
      const int lo = part == 0 ? 0 : half;
      const int hi = part == 0 ? half : k;
      const int other_lo = part == 0 ? half : 0;
      const int other_n = part == 0 ? k - half : half;
      // Draw all randomness serially from per-walker streams, then evaluate.
      for (int w = lo; w < hi; ++w) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::uniform_int_distribution<int> pick(0, other_n - 1);
        const int j = other_lo + pick(rngs[w]);
        const double zz = (a - 1.0) * unif(rngs[w]) + 1.0;
        const double z = zz * zz / a;
        log_z[w] = std::log(z);
        proposals.row(w) = walkers.row(j) + z * (walkers.row(w) - walkers.row(j));
        log_u[w] = std::log(unif(rngs[w]));
      }
      parallel_for(hi - lo, threads, [&](int i) {
        const int w = lo + i;
        lp_new[w] = logpost(proposals.row(w).transpose());
      });
      for (int w = lo; w < hi; ++w) {
        acc[w] = 0;
        if (!std::isfinite(lp_new[w])) {
          ++nonfinite;
          continue;
        }
        const double log_ratio = (dim - 1) * log_z[w] + lp_new[w] - lp[w];
        if (log_u[w] < log_ratio) {
          walkers.row(w) = proposals.row(w);
          lp[w] = lp_new[w];
          acc[w] = 1;
          ++accepted;
          any = true;
        }
      }
    }
    stuck_check(quiet, any, s.stuck_limit);
    rec.record(step, walkers, lp);
  }
  out.acceptance = static_cast<double>(accepted) / (static_cast<double>(s.n_steps) * k);
  out.nonfinite_proposals = nonfinite;
  return out;
}

ChainSet run_rwm(const LogDensity& logpost, const VectorXd& init, const SamplerSettings& s) {
  const int dim = static_cast<int>(init.size());
  ChainSet out;
  out.n_walkers = 1;
  out.dim = dim;
  out.thin = s.thin;
  out.seed = s.seed;
  out.n_stored = s.n_steps / s.thin;
  out.draws.resize(out.n_stored, dim);
  out.log_density.resize(out.n_stored);

  MatrixXd walker = init.transpose();
  VectorXd lp;
  check_init(logpost, walker, lp);
  std::mt19937_64 rng = stream(s.seed, 0);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  VectorXd x = init;
  double cur = lp[0];
  // Proposal covariance: scale^2 * C with C adapted (Haario) during burn-in
  // only, so the post-burn-in chain is a fixed Metropolis kernel.
  VectorXd scale_init = (s.init_scale * (1.0 + init.array().abs())).matrix();
  MatrixXd cov = scale_init.cwiseAbs2().asDiagonal();
  double log_scale = 0.0;
  VectorXd run_mean = x;
  MatrixXd run_m2 = MatrixXd::Zero(dim, dim);
  MatrixXd root = SpdFactor::factor_with_jitter(cov, cov.diagonal().maxCoeff()).lower();
  long accepted = 0;
  long nonfinite = 0;
  int quiet = 0;
  Recorder rec{out, s.thin, s.burn_in};
  const double base = 2.38 * 2.38 / dim;

  for (int step = 0; step < s.n_steps; ++step) {
    VectorXd z(dim);
    for (int i = 0; i < dim; ++i) z[i] = normal(rng);
    const VectorXd y = x + std::exp(log_scale) * (root * z);
    const double u = unif(rng);
    const double lpy = logpost(y);
    bool ok = false;
    if (!std::isfinite(lpy)) {
      ++nonfinite;
    } else if (std::log(u) < lpy - cur) {
      x = y;
      cur = lpy;
      ok = true;
      ++accepted;
    }
    stuck_check(quiet, ok, s.stuck_limit);
    if (step < s.burn_in) {
      const double n = step + 2.0;
      const VectorXd d = x - run_mean;
      run_mean += d / n;
      run_m2 += d * (x - run_mean).transpose();
      log_scale += (static_cast<double>(ok) - s.target_acceptance) / std::sqrt(step + 1.0);
      if ((step + 1) % 100 == 0 && step >= 2 * dim) {
        MatrixXd emp = base * symmetrize(run_m2 / (n - 1.0));
        emp.diagonal() += 1e-12 * (1.0 + emp.diagonal().maxCoeff()) * VectorXd::Ones(dim);
        try {
          root = SpdFactor::factor_with_jitter(emp, emp.diagonal().maxCoeff()).lower();
          log_scale = 0.0;
        } catch (const Error&) {
          // Keep the previous proposal.
        }
      }
    }
    walker.row(0) = x.transpose();
    lp[0] = cur;
    rec.record(step, walker, lp);
  }
  out.acceptance = static_cast<double>(accepted) / s.n_steps;
  out.nonfinite_proposals = nonfinite;
  return out;
}

}  // namespace

ChainSet sample_walkers(const LogDensity& logpost, const MatrixXd& init_walkers, const SamplerSettings& settings) {
  const auto t0 = std::chrono::steady_clock::now();
  settings.validate(init_walkers.cols());
  ChainSet out;
  if (settings.algorithm == SamplerAlgorithm::AdaptiveRwMetropolis) {
    out = run_rwm(logpost, init_walkers.row(0).transpose(), settings);
  } else {
    if (init_walkers.rows() < 2 * init_walkers.cols() || init_walkers.rows() < 2)
      fail(ErrorCode::ConfigError, "ensemble sampler needs at least 2 * dim walkers");
    out = run_ensemble(logpost, init_walkers, settings);
  }
  out.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

ChainSet sample(const LogDensity& logpost, const VectorXd& init, const SamplerSettings& settings) {
  if (settings.algorithm == SamplerAlgorithm::AdaptiveRwMetropolis)
    return sample_walkers(logpost, MatrixXd(init.transpose()), settings);
  const Eigen::Index dim = init.size();
  const int k = settings.n_walkers > 0 ? settings.n_walkers : static_cast<int>(std::max<Eigen::Index>(2 * dim, 32));
  std::mt19937_64 rng = stream(settings.seed, 0xba11);
  std::normal_distribution<double> normal;
  MatrixXd walkers(k, dim);
  for (int w = 0; w < k; ++w) {
    // Resample a point until it has finite density, so a tight support near
    // the initial point does not immediately fail.
    for (int attempt = 0;; ++attempt) {
      for (Eigen::Index i = 0; i < dim; ++i)
        walkers(w, i) = init[i] + settings.init_scale * (1.0 + std::abs(init[i])) * normal(rng);
      if (std::isfinite(logpost(walkers.row(w).transpose()))) break;
      if (attempt > 100) {
        walkers.row(w) = init.transpose();
        break;
      }
    }
  }
  return sample_walkers(logpost, walkers, settings);
}

}  // namespace embgp
