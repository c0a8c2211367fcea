#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "embgp/errors.hpp"
#include "embgp/mcmc.hpp"

namespace embgp {

namespace {

// Biased autocovariance of a centered series, all lags, via zero-padded FFT.
VectorXd autocovariance(const VectorXd& centered) {
  const Eigen::Index n = centered.size();
  Eigen::Index size = 1;
  while (size < 2 * n) size *= 2;
  std::vector<double> padded(static_cast<std::size_t>(size), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) padded[static_cast<std::size_t>(i)] = centered[i];
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, padded);
  for (auto& c : freq) c = std::complex<double>(std::norm(c), 0.0);
  std::vector<double> back;
  fft.inv(back, freq);
  VectorXd out(n);
  for (Eigen::Index t = 0; t < n; ++t) out[t] = back[static_cast<std::size_t>(t)] / static_cast<double>(n);
  return out;
}

}  // namespace

double ess_series(const MatrixXd& series) {
  const Eigen::Index n = series.rows();
  const Eigen::Index chains = series.cols();
  if (n < 100) fail(ErrorCode::DimensionError, "ESS needs at least 100 post-burn-in draws");
  if (!series.allFinite()) fail(ErrorCode::DegenerateChain, "chain contains non-finite values");

  const double nn = static_cast<double>(n);
  VectorXd means = series.colwise().mean().transpose();
  MatrixXd acov(n, chains);
  for (Eigen::Index c = 0; c < chains; ++c) acov.col(c) = autocovariance(series.col(c).array() - means[c]);

  const double w = (acov.row(0).array() * nn / (nn - 1.0)).mean();
  double between = 0.0;
  if (chains > 1) between = (means.array() - means.mean()).square().sum() / static_cast<double>(chains - 1);
  const double var_plus = w * (nn - 1.0) / nn + between;
  const double scale = std::max(std::abs(series.maxCoeff()), std::abs(series.minCoeff()));
  if (!(var_plus > 1e-28 * (1.0 + scale * scale))) fail(ErrorCode::DegenerateChain, "chain coordinate is constant");

  const VectorXd mean_acov = acov.rowwise().mean();
  auto rho = [&](Eigen::Index t) { return 1.0 - (w - mean_acov[t]) / var_plus; };

  // Geyer initial positive sequence with the monotone restriction.
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t + 1 < n; t += 2) {
    double pair = rho(t) + rho(t + 1);
    if (!(pair > 0.0)) break;
    pair = std::min(pair, prev_pair);
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  const double total = nn * static_cast<double>(chains);
  tau = std::max(tau, 1.0 / std::log10(total));
  return std::min(total, total / tau);
}

double ess(const ChainSet& chain, int coordinate) {
  if (coordinate < 0 || coordinate >= chain.dim) fail(ErrorCode::DimensionError, "coordinate out of range");
  return ess_series(chain.coordinate(coordinate));
}

VectorXd ess_all(const ChainSet& chain) {
  VectorXd out(chain.dim);
  for (int j = 0; j < chain.dim; ++j) out[j] = ess(chain, j);
  return out;
}

double integrated_autocorrelation(const MatrixXd& series) {
  return static_cast<double>(series.size()) / ess_series(series);
}

}  // namespace embgp
