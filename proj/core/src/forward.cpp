#include "embgp/forward.hpp"

#include <sstream>

#include "embgp/errors.hpp"

namespace embgp {

MatrixXd ForwardMap::weight_design() const {
  if (!affine_in_weights()) fail(ErrorCode::DomainError, "weight_design requires a map affine in the weights");
  VectorXd theta = VectorXd::Zero(dim());
  return jacobian(theta).rightCols(weight_dim());
}

void ForwardMap::check_theta(const VectorXd& theta) const {
  if (theta.size() != dim()) {
    std::ostringstream os;
    os << "parameter vector has length " << theta.size() << ", expected " << dim();
    fail(ErrorCode::DimensionError, os.str());
  }
}

PointwiseForward::PointwiseForward(std::shared_ptr<const EmbeddedModel> model, const EigenBasis& basis,
                                   const VectorXd& inputs)
    : model_(std::move(model)), inputs_(inputs), design_(basis.evaluate(inputs)) {}

PointwiseForward::PointwiseForward(std::shared_ptr<const EmbeddedModel> model, const VectorXd& inputs)
    : model_(std::move(model)), inputs_(inputs), design_(inputs.size(), 0) {}

PointwiseForward::PointwiseForward(std::shared_ptr<const EmbeddedModel> model, const VectorXd& inputs,
                                   MatrixXd design)
    : model_(std::move(model)), inputs_(inputs), design_(std::move(design)) {
  if (design_.rows() != inputs_.size()) fail(ErrorCode::DimensionError, "design rows differ from input count");
}

VectorXd PointwiseForward::predict(const VectorXd& theta) const {
  check_theta(theta);
  const VectorXd lambda = lambda_of(theta);
  const VectorXd delta = design_ * weights_of(theta);
  VectorXd out(outputs());
  for (Eigen::Index i = 0; i < outputs(); ++i) out[i] = model_->value(inputs_[i], lambda, delta[i]);
  return out;
}

MatrixXd PointwiseForward::jacobian(const VectorXd& theta) const {
  check_theta(theta);
  const Eigen::Index p = param_dim();
  const VectorXd lambda = lambda_of(theta);
  const VectorXd delta = design_ * weights_of(theta);
  MatrixXd jac(outputs(), dim());
  for (Eigen::Index i = 0; i < outputs(); ++i) {
    jac.row(i).head(p) = model_->grad_lambda(inputs_[i], lambda, delta[i]).transpose();
    jac.row(i).tail(weight_dim()) = model_->grad_delta(inputs_[i], lambda, delta[i]) * design_.row(i);
  }
  return jac;
}

VectorXd PointwiseForward::plain_predict(const VectorXd& lambda) const {
  VectorXd out(outputs());
  for (Eigen::Index i = 0; i < outputs(); ++i) out[i] = model_->plain_value(inputs_[i], lambda);
  return out;
}

MatrixXd PointwiseForward::plain_jacobian(const VectorXd& lambda) const {
  MatrixXd jac(outputs(), param_dim());
  for (Eigen::Index i = 0; i < outputs(); ++i) jac.row(i) = model_->grad_lambda(inputs_[i], lambda, 0.0).transpose();
  return jac;
}

}  // namespace embgp
