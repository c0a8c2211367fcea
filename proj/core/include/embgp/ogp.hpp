#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>

#include "embgp/forward.hpp"
#include "embgp/kernels.hpp"
#include "embgp/models.hpp"
#include "embgp/quadrature.hpp"

namespace embgp {

inline constexpr int kConstraintOrder = 128;

enum class OrthoMode { Additive, Linearized, Regularized };

std::string to_string(OrthoMode mode);

// Record of how a set of orthogonality constraints was built.
struct OrthoConstraintSet {
  OrthoMode mode = OrthoMode::Additive;
  VectorXd lambda_star;
  double residual_norm = 0.0;
  WeightingMeasure measure;
  int order = kConstraintOrder;

  void validate() const;
};

// k*(x, x') = k(x, x') - h(x)^T H^{-1} h(x'), the kernel conditioned on
// int g_k(x) delta(x) dmu(x) = 0 for the p constraint functions g_k.
// h and H are computed with the supplied quadrature rule.
class ModifiedKernel final : public CovarianceFunction {
 public:
  // g holds g_k at the rule nodes (n x p).
  ModifiedKernel(KernelSpec base, QuadratureRule rule, MatrixXd g);

  double operator()(double x, double xp) const override;
  RowFn row_function(const VectorXd& nodes) const override;
  double variance_scale() const override { return base_.variance(); }
  KernelSpec base_spec() const override { return base_; }

  VectorXd h(double x) const;
  const MatrixXd& big_h() const { return big_h_; }
  // Condition number of H after scaling it to unit diagonal.
  double condition() const { return condition_; }
  const QuadratureRule& rule() const { return rule_; }
  const MatrixXd& constraint_values() const { return g_; }
  // Constraint functionals applied to f by the same quadrature: G^T W f(nodes).
  VectorXd apply_constraints(const std::function<double(double)>& f) const;

 private:
  KernelSpec base_;
  QuadratureRule rule_;
  MatrixXd g_;
  MatrixXd weighted_g_;  // W G, n x p
  MatrixXd big_h_;
  VectorXd scale_;     // 1 / sqrt(H_kk)
  MatrixXd h_factor_;  // lower Cholesky factor of diag(scale) H diag(scale)
  double condition_ = 1.0;
};

// Constraint gradients grad_lambda f(x; lambda*) under an additive error.
ModifiedKernel additive_ogp_kernel(const KernelSpec& k, const EmbeddedModel& model, const VectorXd& lambda_star,
                                   const WeightingMeasure& mu, int order = kConstraintOrder);

// Linearized embedded constraints: d f~/d delta at (x, lambda*, 0) times
// grad_lambda f(x; lambda*).
ModifiedKernel logp_kernel(const KernelSpec& k, const EmbeddedModel& model, const VectorXd& lambda_star,
                           const WeightingMeasure& mu, int order = kConstraintOrder);

// R_k(w) = int [f~(x; lambda*, phi(x)^T w) - f(x; lambda*)] d_k f(x; lambda*) dmu,
// realized as a weighted sum over the outputs of a forward map evaluated at
// quadrature points.
class RogpConstraints {
 public:
  RogpConstraints(std::shared_ptr<const ForwardMap> quad_map, VectorXd weights, VectorXd lambda_star);

  Eigen::Index size() const { return lambda_star_.size(); }
  Eigen::Index weight_dim() const { return map_->weight_dim(); }
  // Throws ModelOverflow when a quadrature node overflows.
  VectorXd operator()(const VectorXd& w) const;
  // p x m
  MatrixXd jacobian(const VectorXd& w) const;

  bool is_linear() const { return linear_.has_value(); }
  const MatrixXd& linear_matrix() const { return *linear_; }
  const VectorXd& lambda_star() const { return lambda_star_; }

 private:
  VectorXd theta(const VectorXd& w) const;

  std::shared_ptr<const ForwardMap> map_;
  VectorXd weights_;
  VectorXd lambda_star_;
  MatrixXd weighted_grad_;  // W D, Q x p
  VectorXd base_;           // f(x_q; lambda*)
  std::optional<MatrixXd> linear_;
};

std::shared_ptr<const RogpConstraints> rogp_constraints(std::shared_ptr<const EmbeddedModel> model,
                                                        const VectorXd& lambda_star, const EigenBasis& basis,
                                                        const WeightingMeasure& mu, int order = kConstraintOrder);

}  // namespace embgp
