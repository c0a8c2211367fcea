#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>

#include "embgp/forward.hpp"
#include "embgp/kernels.hpp"
#include "embgp/models.hpp"
#include "embgp/ogp.hpp"

namespace embgp {

// Uniform space-time grid on [0,1] x [0,1].
struct AdrGrid {
  int nx = 200;
  int nt = 200;

  double dx() const { return 1.0 / nx; }
  double dt() const { return 1.0 / nt; }
  VectorXd x_nodes() const { return VectorXd::LinSpaced(nx + 1, 0.0, 1.0); }
  VectorXd t_nodes() const { return VectorXd::LinSpaced(nt + 1, 0.0, 1.0); }
  void validate() const;
};

// Crank-Nicolson solver for u_t + u_x - u_xx - u = s(x, t) with homogeneous
// Dirichlet boundaries.  Fields are (nt+1) x (nx+1), row n at time t_n.
class AdrSolver {
 public:
  using Source = std::function<double(double, double)>;
  using Initial = std::function<double(double)>;

  explicit AdrSolver(AdrGrid grid);

  const AdrGrid& grid() const { return grid_; }
  MatrixXd solve(const Source& source, const Initial& initial) const;
  // Source exp(-t) g(x) with g given at all nx+1 nodes (boundary values unused).
  MatrixXd solve_separable(const VectorXd& g, bool with_initial) const;

 private:
  void step(VectorXd& u, const VectorXd& rhs_source) const;

  AdrGrid grid_;
  double lower_ = 0.0;
  double upper_ = 0.0;
  double explicit_lower_ = 0.0;
  double explicit_diag_ = 0.0;
  double explicit_upper_ = 0.0;
  VectorXd c_prime_;
  VectorXd denom_;
};

double adr_initial(double x);
// Full truth source exp(-t)(2 pi cos 2 pi x + 2 (2 pi^2 - 1) sin 2 pi x).
double adr_truth_source(double x, double t);
// Spatial profile of the fit model source, (2 pi^2 - 1) sin(lambda x).
double adr_fit_profile(double x, double lambda);

// Field of the fit model with source exp(-t)((2 pi^2 - 1) sin(lambda x) + delta(x)).
MatrixXd adr_solve(const AdrGrid& grid, double lambda, const std::function<double(double)>& delta = {});
MatrixXd adr_truth_field(const AdrGrid& grid);

// Bilinear read-out of a field at (x, t); DomainError outside [0,1]^2.
double sample_field(const AdrGrid& grid, const MatrixXd& field, double x, double t);

TruthModel adr_truth(const AdrGrid& grid);

// N observation locations drawn uniformly (with replacement) from grid nodes
// with 0 < x < 1 and t > 0.  Rows are (x, t).
MatrixXd adr_observation_inputs(const AdrGrid& grid, Eigen::Index n, std::uint64_t seed);

// theta = (lambda, w) -> u at the observation points.  The map is affine in w:
// each basis function contributes a precomputed field u_j.
class AdrForward final : public ForwardMap {
 public:
  AdrForward(AdrGrid grid, const EigenBasis& basis, const MatrixXd& obs);
  // Explicit basis values at the nx+1 grid nodes (m columns).
  AdrForward(AdrGrid grid, MatrixXd basis_nodes, const MatrixXd& obs);

  Eigen::Index outputs() const override { return obs_.rows(); }
  Eigen::Index param_dim() const override { return 1; }
  Eigen::Index weight_dim() const override { return weight_design_.cols(); }

  VectorXd predict(const VectorXd& theta) const override;
  MatrixXd jacobian(const VectorXd& theta) const override;
  VectorXd plain_predict(const VectorXd& lambda) const override;
  MatrixXd plain_jacobian(const VectorXd& lambda) const override;
  bool affine_in_weights() const override { return true; }
  MatrixXd weight_design() const override { return weight_design_; }

  const AdrGrid& grid() const { return solver_.grid(); }
  const MatrixXd& observations() const { return obs_; }

 private:
  struct Stencil {
    int n0, i0;
    double wt, wx;
  };
  double read(const MatrixXd& field, const Stencil& s) const;
  VectorXd read_all(const MatrixXd& field) const;
  VectorXd response(const VectorXd& g_nodes) const;

  AdrSolver solver_;
  MatrixXd obs_;
  std::vector<Stencil> stencils_;
  VectorXd initial_part_;
  MatrixXd weight_design_;
  // Observation response to a unit exp(-t) source at each interior node;
  // absent for large observation sets, which fall back to full solves.
  std::optional<MatrixXd> green_;
};

// ROGP constraints for the source embedding.  The integral over [0,1]^2 uses
// tensor trapezoid weights on every stride-th grid node.
std::shared_ptr<const RogpConstraints> adr_rogp_constraints(const AdrGrid& grid, const EigenBasis& basis,
                                                            const VectorXd& lambda_star, int stride = 4);

}  // namespace embgp
