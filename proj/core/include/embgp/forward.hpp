#pragma once

#include <Eigen/Dense>
#include <memory>

#include "embgp/kernels.hpp"
#include "embgp/models.hpp"

namespace embgp {

// Predictions g(theta) at a fixed set of N inputs for theta = (lambda, w),
// lambda in R^p and w in R^m the weight-space GP coordinates.
class ForwardMap {
 public:
  virtual ~ForwardMap() = default;

  virtual Eigen::Index outputs() const = 0;
  virtual Eigen::Index param_dim() const = 0;
  virtual Eigen::Index weight_dim() const = 0;
  Eigen::Index dim() const { return param_dim() + weight_dim(); }

  // Both throw ModelOverflow where the model cannot be evaluated.
  virtual VectorXd predict(const VectorXd& theta) const = 0;
  // N x (p + m)
  virtual MatrixXd jacobian(const VectorXd& theta) const = 0;

  // The model without its correction, as a function of lambda only.
  virtual VectorXd plain_predict(const VectorXd& lambda) const = 0;
  virtual MatrixXd plain_jacobian(const VectorXd& lambda) const = 0;

  virtual bool affine_in_weights() const { return false; }
  // predict is affine in all of theta.
  virtual bool affine() const { return false; }
  // d predict / d w (N x m); only meaningful when affine_in_weights().
  virtual MatrixXd weight_design() const;

  VectorXd lambda_of(const VectorXd& theta) const { return theta.head(param_dim()); }
  VectorXd weights_of(const VectorXd& theta) const { return theta.tail(weight_dim()); }
  void check_theta(const VectorXd& theta) const;
};

// A pointwise EmbeddedModel with delta(x) = phi(x)^T w at 1-D inputs.
class PointwiseForward final : public ForwardMap {
 public:
  PointwiseForward(std::shared_ptr<const EmbeddedModel> model, const EigenBasis& basis, const VectorXd& inputs);
  // Plain model only (m = 0).
  PointwiseForward(std::shared_ptr<const EmbeddedModel> model, const VectorXd& inputs);
  // Explicit design matrix Phi (N x m).
  PointwiseForward(std::shared_ptr<const EmbeddedModel> model, const VectorXd& inputs, MatrixXd design);

  Eigen::Index outputs() const override { return inputs_.size(); }
  Eigen::Index param_dim() const override { return model_->param_dim(); }
  Eigen::Index weight_dim() const override { return design_.cols(); }

  VectorXd predict(const VectorXd& theta) const override;
  MatrixXd jacobian(const VectorXd& theta) const override;
  VectorXd plain_predict(const VectorXd& lambda) const override;
  MatrixXd plain_jacobian(const VectorXd& lambda) const override;

  bool affine_in_weights() const override { return model_->additive(); }
  bool affine() const override { return model_->additive() && model_->linear_in_lambda(); }
  MatrixXd weight_design() const override { return design_; }

  const MatrixXd& design() const { return design_; }
  const VectorXd& inputs() const { return inputs_; }
  const EmbeddedModel& model() const { return *model_; }

 private:
  std::shared_ptr<const EmbeddedModel> model_;
  VectorXd inputs_;
  MatrixXd design_;
};

}  // namespace embgp
