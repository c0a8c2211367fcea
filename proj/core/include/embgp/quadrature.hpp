#pragma once

#include <Eigen/Dense>

namespace embgp {

// Nodes and weights of a probability-measure quadrature; weights sum to one.
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
  int order = 0;
  int exactness_degree = 0;

  Eigen::Index size() const { return nodes.size(); }

  template <class F>
  double integrate(F&& f) const {
    double acc = 0.0;
    for (Eigen::Index q = 0; q < nodes.size(); ++q) acc += weights[q] * f(nodes[q]);
    return acc;
  }
};

// Gauss-Legendre rule for the uniform probability measure on [lo, hi].
QuadratureRule gauss_legendre(int n, double lo, double hi);

// Gauss-Hermite rule for N(mean, variance), computed with Golub-Welsch.
// Nodes whose weight underflows to zero are dropped.
QuadratureRule gauss_hermite(int n, double mean, double variance);

// Composite trapezoid weights on a uniform grid with `cells` cells over
// [lo, hi], normalized to mass one.
QuadratureRule trapezoid(int cells, double lo, double hi);

}  // namespace embgp
