#pragma once

#include <Eigen/Dense>
#include <functional>

namespace embgp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Minimizes 0.5 * |r(x)|^2.
struct LeastSquaresProblem {
  std::function<VectorXd(const VectorXd&)> residual;
  std::function<MatrixXd(const VectorXd&)> jacobian;
};

struct LmOptions {
  int max_iterations = 200;
  double grad_abs_tol = 1e-10;
  double grad_rel_tol = 1e-8;
  double step_tol = 1e-14;
};

struct LmResult {
  VectorXd x;
  double cost = 0.0;  // 0.5 * |r|^2
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Levenberg-Marquardt with Nielsen damping updates.  Starts as plain
// Gauss-Newton (tiny damping) and only damps when a step fails to descend.
// Residual evaluation failures (exceptions) count as failed steps.
LmResult levenberg_marquardt(const LeastSquaresProblem& problem, const VectorXd& x0, const LmOptions& options = {});

}  // namespace embgp
