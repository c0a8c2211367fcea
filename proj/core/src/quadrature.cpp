#include "embgp/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "embgp/errors.hpp"

namespace embgp {

QuadratureRule gauss_legendre(int n, double lo, double hi) {
  if (n < 1) fail(ErrorCode::InsufficientQuadrature, "Gauss-Legendre order must be >= 1");
  if (!(hi > lo)) fail(ErrorCode::DomainError, "Gauss-Legendre interval must satisfy lo < hi");
  QuadratureRule rule;
  rule.order = n;
  rule.exactness_degree = 2 * n - 1;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-16 * std::max(1.0, std::abs(z))) break;
    }
    // Final derivative at the converged root.
    {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
    }
    const double w = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  const double mid = 0.5 * (lo + hi);
  const double half_width = 0.5 * (hi - lo);
  rule.nodes = (mid + half_width * rule.nodes.array()).matrix();
  rule.weights /= rule.weights.sum();
  return rule;
}

QuadratureRule gauss_hermite(int n, double mean, double variance) {
  if (n < 1) fail(ErrorCode::InsufficientQuadrature, "Gauss-Hermite order must be >= 1");
  if (!(variance > 0.0)) fail(ErrorCode::DomainError, "Gauss-Hermite variance must be positive");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(static_cast<double>(k));
  Eigen::VectorXd nodes(n);
  Eigen::VectorXd weights(n);
  if (n == 1) {
    nodes[0] = 0.0;
    weights[0] = 1.0;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) fail(ErrorCode::NumericalBreakdown, "Golub-Welsch eigensolve failed");
    nodes = es.eigenvalues();
    weights = es.eigenvectors().row(0).transpose().array().square();
  }
  std::vector<double> kept_nodes;
  std::vector<double> kept_weights;
  const double sd = std::sqrt(variance);
  for (int q = 0; q < n; ++q) {
    if (weights[q] > 0.0) {
      kept_nodes.push_back(mean + sd * nodes[q]);
      kept_weights.push_back(weights[q]);
    }
  }
  QuadratureRule rule;
  rule.order = n;
  rule.exactness_degree = 2 * n - 1;
  rule.nodes = Eigen::Map<Eigen::VectorXd>(kept_nodes.data(), static_cast<Eigen::Index>(kept_nodes.size()));
  rule.weights = Eigen::Map<Eigen::VectorXd>(kept_weights.data(), static_cast<Eigen::Index>(kept_weights.size()));
  rule.weights /= rule.weights.sum();
  return rule;
}

QuadratureRule trapezoid(int cells, double lo, double hi) {
  if (cells < 1) fail(ErrorCode::InsufficientQuadrature, "trapezoid rule needs at least one cell");
  QuadratureRule rule;
  rule.order = cells + 1;
  rule.exactness_degree = 1;
  rule.nodes = Eigen::VectorXd::LinSpaced(cells + 1, lo, hi);
  rule.weights = Eigen::VectorXd::Constant(cells + 1, 1.0);
  rule.weights[0] = 0.5;
  rule.weights[cells] = 0.5;
  rule.weights /= rule.weights.sum();
  return rule;
}

}  // namespace embgp
