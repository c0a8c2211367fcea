#pragma once

// Independent reference computations shared by the unit and acceptance tests.
// Nothing here calls into the library's numerical routines.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double sqe(double s, double l, double x, double y) {
  const double d = (x - y) / l;
  return s * s * std::exp(-0.5 * d * d);
}

// Composite Simpson rule for the uniform probability measure on [lo, hi].
template <class F>
double simpson(F&& f, double lo, double hi, int cells = 4000) {
  if (cells % 2) ++cells;
  const double h = (hi - lo) / cells;
  double acc = f(lo) + f(hi);
  for (int i = 1; i < cells; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return acc * h / 3.0 / (hi - lo);
}

// Gaussian expectation E[f(X)], X ~ N(mean, var), by Simpson over +-12 sd.
template <class F>
double gaussian_expectation(F&& f, double mean, double var, int cells = 8000) {
  const double sd = std::sqrt(var);
  const double lo = mean - 12.0 * sd;
  const double hi = mean + 12.0 * sd;
  auto g = [&](double x) {
    const double z = (x - mean) / sd;
    return f(x) * std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
  };
  return simpson(g, lo, hi, cells) * (hi - lo);
}

// Sample mean/covariance of rows.
inline VectorXd sample_mean(const MatrixXd& s) { return s.colwise().mean().transpose(); }
inline MatrixXd sample_cov(const MatrixXd& s) {
  const MatrixXd c = s.rowwise() - s.colwise().mean();
  return c.transpose() * c / static_cast<double>(s.rows() - 1);
}

// Kolmogorov-Smirnov distance of a sample against N(mean, sd^2).
inline double ks_normal(std::vector<double> xs, double mean, double sd) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-(xs[i] - mean) / (sd * std::sqrt(2.0)));
    d = std::max({d, std::abs(cdf - i / n), std::abs(cdf - (i + 1) / n)});
  }
  return d;
}

}  // namespace oracle
