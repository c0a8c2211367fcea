#include "embgp/adr.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "embgp/errors.hpp"

namespace embgp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Eigen::Index kGreenLimit = 5000;

}  // namespace

void AdrGrid::validate() const {
  if (nx < 8 || nt < 8) fail(ErrorCode::DomainError, "ADR grid needs nx >= 8 and nt >= 8");
}

AdrSolver::AdrSolver(AdrGrid grid) : grid_(grid) {
  grid_.validate();
  const double dx = grid_.dx();
  const double dt = grid_.dt();
  // Semi-discrete operator: u_t = a_m u_{i-1} + a_0 u_i + a_p u_{i+1} + s.
  const double a_m = 1.0 / (dx * dx) + 0.5 / dx;
  const double a_0 = -2.0 / (dx * dx) + 1.0;
  const double a_p = 1.0 / (dx * dx) - 0.5 / dx;
  lower_ = -0.5 * dt * a_m;
  upper_ = -0.5 * dt * a_p;
  const double diag = 1.0 - 0.5 * dt * a_0;
  explicit_lower_ = 0.5 * dt * a_m;
  explicit_diag_ = 1.0 + 0.5 * dt * a_0;
  explicit_upper_ = 0.5 * dt * a_p;

  const int m = grid_.nx - 1;
  c_prime_.resize(m);
  denom_.resize(m);
  double c_prev = 0.0;
  for (int i = 0; i < m; ++i) {
    const double d = diag - (i > 0 ? lower_ * c_prev : 0.0);
    if (!(std::abs(d) > 1e-300)) fail(ErrorCode::NumericalBreakdown, "tridiagonal solve hit a zero pivot");
    denom_[i] = d;
    c_prev = upper_ / d;
    c_prime_[i] = c_prev;
  }
}

// u holds interior values; rhs_source is dt/2 (s^n + s^{n+1}) at interior nodes.
void AdrSolver::step(VectorXd& u, const VectorXd& rhs_source) const {
  const Eigen::Index m = u.size();
  VectorXd rhs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double left = i > 0 ? u[i - 1] : 0.0;
    const double right = i + 1 < m ? u[i + 1] : 0.0;
    rhs[i] = explicit_lower_ * left + explicit_diag_ * u[i] + explicit_upper_ * right + rhs_source[i];
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    const double prev = i > 0 ? rhs[i - 1] : 0.0;
    rhs[i] = (rhs[i] - (i > 0 ? lower_ * prev : 0.0)) / denom_[i];
  }
  for (Eigen::Index i = m - 2; i >= 0; --i) rhs[i] -= c_prime_[i] * rhs[i + 1];
  u = rhs;
}

MatrixXd AdrSolver::solve(const Source& source, const Initial& initial) const {
  const int nx = grid_.nx;
  const int nt = grid_.nt;
  const double dt = grid_.dt();
  const VectorXd x = grid_.x_nodes();
  MatrixXd field = MatrixXd::Zero(nt + 1, nx + 1);
  VectorXd u(nx - 1);
  for (int i = 1; i < nx; ++i) u[i - 1] = initial ? initial(x[i]) : 0.0;
  field.row(0).segment(1, nx - 1) = u.transpose();
  VectorXd s_now(nx - 1);
  VectorXd s_next(nx - 1);
  for (int i = 1; i < nx; ++i) s_now[i - 1] = source ? source(x[i], 0.0) : 0.0;
  for (int n = 0; n < nt; ++n) {
    const double t_next = (n + 1) * dt;
    for (int i = 1; i < nx; ++i) s_next[i - 1] = source ? source(x[i], t_next) : 0.0;
    step(u, 0.5 * dt * (s_now + s_next));
    field.row(n + 1).segment(1, nx - 1) = u.transpose();
    std::swap(s_now, s_next);
  }
  if (!field.allFinite()) fail(ErrorCode::NumericalBreakdown, "ADR solve produced non-finite values");
  return field;
}

MatrixXd AdrSolver::solve_separable(const VectorXd& g, bool with_initial) const {
  const int nx = grid_.nx;
  const int nt = grid_.nt;
  if (g.size() != nx + 1) fail(ErrorCode::DimensionError, "separable source needs values at all grid nodes");
  const double dt = grid_.dt();
  const VectorXd x = grid_.x_nodes();
  const VectorXd gi = g.segment(1, nx - 1);
  MatrixXd field = MatrixXd::Zero(nt + 1, nx + 1);
  VectorXd u = VectorXd::Zero(nx - 1);
  if (with_initial)
    for (int i = 1; i < nx; ++i) u[i - 1] = adr_initial(x[i]);
  field.row(0).segment(1, nx - 1) = u.transpose();
  for (int n = 0; n < nt; ++n) {
    const double factor = 0.5 * dt * (std::exp(-n * dt) + std::exp(-(n + 1) * dt));
    step(u, factor * gi);
    field.row(n + 1).segment(1, nx - 1) = u.transpose();
  }
  if (!field.allFinite()) fail(ErrorCode::NumericalBreakdown, "ADR solve produced non-finite values");
  return field;
}

double adr_initial(double x) { return std::sin(2.0 * kPi * x); }

double adr_truth_source(double x, double t) {
  return std::exp(-t) * (2.0 * kPi * std::cos(2.0 * kPi * x) + 2.0 * (2.0 * kPi * kPi - 1.0) * std::sin(2.0 * kPi * x));
}

double adr_fit_profile(double x, double lambda) { return (2.0 * kPi * kPi - 1.0) * std::sin(lambda * x); }

MatrixXd adr_solve(const AdrGrid& grid, double lambda, const std::function<double(double)>& delta) {
  AdrSolver solver(grid);
  const VectorXd x = grid.x_nodes();
  VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = adr_fit_profile(x[i], lambda) + (delta ? delta(x[i]) : 0.0);
  return solver.solve_separable(g, true);
}

MatrixXd adr_truth_field(const AdrGrid& grid) {
  AdrSolver solver(grid);
  const VectorXd x = grid.x_nodes();
  VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = adr_truth_source(x[i], 0.0);
  return solver.solve_separable(g, true);
}

double sample_field(const AdrGrid& grid, const MatrixXd& field, double x, double t) {
  if (!(x >= 0.0 && x <= 1.0 && t >= 0.0 && t <= 1.0)) {
    std::ostringstream os;
    os << "point (" << x << ", " << t << ") lies outside the ADR domain";
    fail(ErrorCode::DomainError, os.str());
  }
  const double fx = x * grid.nx;
  const double ft = t * grid.nt;
  const int i0 = std::min(static_cast<int>(std::floor(fx)), grid.nx - 1);
  const int n0 = std::min(static_cast<int>(std::floor(ft)), grid.nt - 1);
  const double wx = fx - i0;
  const double wt = ft - n0;
  return (1 - wt) * ((1 - wx) * field(n0, i0) + wx * field(n0, i0 + 1)) +
         wt * ((1 - wx) * field(n0 + 1, i0) + wx * field(n0 + 1, i0 + 1));
}

TruthModel adr_truth(const AdrGrid& grid) {
  auto field = std::make_shared<MatrixXd>(adr_truth_field(grid));
  return {"adr_truth", [grid, field](const VectorXd& in) { return sample_field(grid, *field, in[0], in[1]); }};
}

MatrixXd adr_observation_inputs(const AdrGrid& grid, Eigen::Index n, std::uint64_t seed) {
  grid.validate();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> ix(1, grid.nx - 1);
  std::uniform_int_distribution<int> it(1, grid.nt);
  MatrixXd obs(n, 2);
  for (Eigen::Index k = 0; k < n; ++k) {
    obs(k, 0) = static_cast<double>(ix(rng)) / grid.nx;
    obs(k, 1) = static_cast<double>(it(rng)) / grid.nt;
  }
  return obs;
}

AdrForward::AdrForward(AdrGrid grid, const EigenBasis& basis, const MatrixXd& obs)
    : AdrForward(grid, basis.evaluate(grid.x_nodes()), obs) {}

AdrForward::AdrForward(AdrGrid grid, MatrixXd basis_nodes, const MatrixXd& obs) : solver_(grid), obs_(obs) {
  if (obs.cols() != 2) fail(ErrorCode::DimensionError, "ADR observations need (x, t) columns");
  if (basis_nodes.rows() != grid.nx + 1) fail(ErrorCode::DimensionError, "basis values must cover all x nodes");
  stencils_.reserve(obs.rows());
  for (Eigen::Index k = 0; k < obs.rows(); ++k) {
    const double x = obs(k, 0);
    const double t = obs(k, 1);
    if (!(x >= 0.0 && x <= 1.0 && t >= 0.0 && t <= 1.0)) {
      std::ostringstream os;
      os << "observation " << k << " at (" << x << ", " << t << ") lies outside the ADR domain";
      fail(ErrorCode::DomainError, os.str());
    }
    const double fx = x * grid.nx;
    const double ft = t * grid.nt;
    Stencil s;
    s.i0 = std::min(static_cast<int>(std::floor(fx + 1e-9)), grid.nx - 1);
    s.n0 = std::min(static_cast<int>(std::floor(ft + 1e-9)), grid.nt - 1);
    s.wx = std::clamp(fx - s.i0, 0.0, 1.0);
    s.wt = std::clamp(ft - s.n0, 0.0, 1.0);
    stencils_.push_back(s);
  }

  initial_part_ = read_all(solver_.solve_separable(VectorXd::Zero(grid.nx + 1), true));
  weight_design_.resize(obs.rows(), basis_nodes.cols());
  for (Eigen::Index j = 0; j < basis_nodes.cols(); ++j)
    weight_design_.col(j) = read_all(solver_.solve_separable(basis_nodes.col(j), false));

  if (obs.rows() <= kGreenLimit) {
    MatrixXd green(obs.rows(), grid.nx - 1);
    VectorXd unit = VectorXd::Zero(grid.nx + 1);
    for (int i = 1; i < grid.nx; ++i) {
      unit[i] = 1.0;
      green.col(i - 1) = read_all(solver_.solve_separable(unit, false));
      unit[i] = 0.0;
    }
    green_ = std::move(green);
  }
}

double AdrForward::read(const MatrixXd& field, const Stencil& s) const {
  return (1 - s.wt) * ((1 - s.wx) * field(s.n0, s.i0) + s.wx * field(s.n0, s.i0 + 1)) +
         s.wt * ((1 - s.wx) * field(s.n0 + 1, s.i0) + s.wx * field(s.n0 + 1, s.i0 + 1));
}

VectorXd AdrForward::read_all(const MatrixXd& field) const {
  VectorXd out(stencils_.size());
  for (std::size_t k = 0; k < stencils_.size(); ++k) out[static_cast<Eigen::Index>(k)] = read(field, stencils_[k]);
  return out;
}

VectorXd AdrForward::response(const VectorXd& g_nodes) const {
  if (green_) return *green_ * g_nodes.segment(1, grid().nx - 1);
  return read_all(solver_.solve_separable(g_nodes, false));
}

VectorXd AdrForward::plain_predict(const VectorXd& lambda) const {
  if (lambda.size() != 1) fail(ErrorCode::DimensionError, "ADR model has one parameter");
  const VectorXd x = grid().x_nodes();
  VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = adr_fit_profile(x[i], lambda[0]);
  return initial_part_ + response(g);
}

MatrixXd AdrForward::plain_jacobian(const VectorXd& lambda) const {
  if (lambda.size() != 1) fail(ErrorCode::DimensionError, "ADR model has one parameter");
  const VectorXd x = grid().x_nodes();
  VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = (2.0 * kPi * kPi - 1.0) * x[i] * std::cos(lambda[0] * x[i]);
  return response(g);
}

VectorXd AdrForward::predict(const VectorXd& theta) const {
  check_theta(theta);
  return plain_predict(lambda_of(theta)) + weight_design_ * weights_of(theta);
}

MatrixXd AdrForward::jacobian(const VectorXd& theta) const {
  check_theta(theta);
  MatrixXd jac(outputs(), dim());
  jac.col(0) = plain_jacobian(lambda_of(theta));
  jac.rightCols(weight_dim()) = weight_design_;
  return jac;
}

std::shared_ptr<const RogpConstraints> adr_rogp_constraints(const AdrGrid& grid, const EigenBasis& basis,
                                                            const VectorXd& lambda_star, int stride) {
  if (stride < 1 || grid.nx % stride || grid.nt % stride)
    fail(ErrorCode::DomainError, "constraint stride must divide nx and nt");
  const QuadratureRule qx = trapezoid(grid.nx / stride, 0.0, 1.0);
  const QuadratureRule qt = trapezoid(grid.nt / stride, 0.0, 1.0);
  const Eigen::Index nx = qx.size(), nt = qt.size();
  MatrixXd nodes(nx * nt, 2);
  VectorXd weights(nx * nt);
  for (Eigen::Index a = 0; a < nt; ++a)
    for (Eigen::Index i = 0; i < nx; ++i) {
      nodes.row(a * nx + i) << qx.nodes[i], qt.nodes[a];
      weights[a * nx + i] = qx.weights[i] * qt.weights[a];
    }
  auto map = std::make_shared<AdrForward>(grid, basis, nodes);
  return std::make_shared<RogpConstraints>(map, weights, lambda_star);
}

}  // namespace embgp

