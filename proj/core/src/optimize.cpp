#include "embgp/optimize.hpp"

#include <cmath>
#include <limits>

#include "embgp/errors.hpp"

namespace embgp {

namespace {

bool try_residual(const LeastSquaresProblem& p, const VectorXd& x, VectorXd& r) {
  try {
    r = p.residual(x);
  } catch (const Error&) {
    return false;
  }
  return r.allFinite();
}

}  // namespace

LmResult levenberg_marquardt(const LeastSquaresProblem& problem, const VectorXd& x0, const LmOptions& options) {
  LmResult out;
  out.x = x0;
  VectorXd r;
  if (!try_residual(problem, x0, r)) fail(ErrorCode::EvaluationFailure, "residual cannot be evaluated at the start point");
  double cost = 0.5 * r.squaredNorm();
  MatrixXd jac = problem.jacobian(out.x);
  VectorXd grad = jac.transpose() * r;
  MatrixXd jtj = jac.transpose() * jac;
  double mu = 1e-12 * std::max(1.0, jtj.diagonal().maxCoeff());
  double nu = 2.0;

  auto small_gradient = [&] { return 2.0 * grad.norm() < options.grad_abs_tol * (1.0 + 2.0 * cost); };

  for (int it = 0; it < options.max_iterations; ++it) {
    out.iterations = it + 1;
    if (small_gradient()) {
      out.converged = true;
      break;
    }
    // Damped step from the augmented system [J; sqrt(mu) I] s = [-r; 0] by QR,
    // which avoids squaring the condition number of J.
    const Eigen::Index n = out.x.size();
    MatrixXd aug(jac.rows() + n, n);
    aug << jac, std::sqrt(mu) * MatrixXd::Identity(n, n);
    VectorXd rhs = VectorXd::Zero(jac.rows() + n);
    rhs.head(jac.rows()) = -r;
    VectorXd step = aug.colPivHouseholderQr().solve(rhs);
    if (!step.allFinite()) {
      mu *= nu;
      nu *= 2.0;
      continue;
    }
    if (step.norm() <= options.step_tol * (out.x.norm() + options.step_tol)) break;
    const VectorXd candidate = out.x + step;
    VectorXd r_new;
    const bool ok = try_residual(problem, candidate, r_new);
    const double cost_new = ok ? 0.5 * r_new.squaredNorm() : std::numeric_limits<double>::infinity();
    const double predicted = -(step.dot(grad) + 0.5 * step.dot(jtj * step));
    const double rho = predicted > 0.0 ? (cost - cost_new) / predicted : -1.0;
    // Near a large-residual minimum the cost change drops below rounding;
    // a step that keeps the cost within rounding and shrinks the gradient
    // still counts as progress.
    bool accept = ok && cost_new < cost;
    MatrixXd jac_new;
    VectorXd grad_new;
    if (!accept && ok && cost_new <= cost * (1.0 + 8.0 * std::numeric_limits<double>::epsilon())) {
      jac_new = problem.jacobian(candidate);
      grad_new = jac_new.transpose() * r_new;
      accept = grad_new.norm() < grad.norm();
    }
    if (accept) {
      out.x = candidate;
      r = r_new;
      cost = cost_new;
      jac = jac_new.size() ? jac_new : problem.jacobian(out.x);
      grad = jac.transpose() * r;
      jtj = jac.transpose() * jac;
      mu *= rho > 0.0 ? std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3)) : 1.0;
      mu = std::max(mu, 1e-300);
      nu = 2.0;
    } else {
      mu = std::max(mu * nu, 1e-12);
      nu *= 2.0;
      if (!std::isfinite(mu) || mu > 1e300) break;
    }
  }
  // Iterations that stall with the gradient at rounding level relative to
  // |J| |r| still count as converged.
  if (!out.converged) out.converged = grad.norm() <= options.grad_rel_tol * jac.norm() * r.norm();
  out.cost = cost;
  out.grad_norm = grad.norm();
  return out;
}

}  // namespace embgp
