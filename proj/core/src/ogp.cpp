#include "embgp/ogp.hpp"

#include <cmath>
#include <sstream>

#include "embgp/errors.hpp"
#include "embgp/linalg.hpp"

namespace embgp {

std::string to_string(OrthoMode mode) {
  switch (mode) {
    case OrthoMode::Additive: return "additive";
    case OrthoMode::Linearized: return "linearized";
    case OrthoMode::Regularized: return "regularized";
  }
  return "unknown";
}

void OrthoConstraintSet::validate() const {
  if (order < 64) fail(ErrorCode::InsufficientQuadrature, "constraint quadrature order must be at least 64");
  measure.validate();
}

ModifiedKernel::ModifiedKernel(KernelSpec base, QuadratureRule rule, MatrixXd g)
    : base_(base), rule_(std::move(rule)), g_(std::move(g)) {
  base_.validate();
  if (g_.rows() != rule_.size()) fail(ErrorCode::DimensionError, "constraint values must be given at every node");
  weighted_g_ = rule_.weights.asDiagonal() * g_;
  const Eigen::Index n = rule_.size();
  MatrixXd gram(n, n);
  const RowFn row = SqExpCovariance(base_).row_function(rule_.nodes);
  for (Eigen::Index q = 0; q < n; ++q) gram.row(q) = row(rule_.nodes[q]).transpose();
  big_h_ = symmetrize(weighted_g_.transpose() * gram * weighted_g_);

  // Rescaling a constraint function does not change the constraint, so the
  // degeneracy test runs on the unit-diagonal form of H.
  const Eigen::Index p = big_h_.rows();
  scale_ = VectorXd::Zero(p);
  for (Eigen::Index k = 0; k < p; ++k)
    if (big_h_(k, k) > 0.0) scale_[k] = 1.0 / std::sqrt(big_h_(k, k));
  const MatrixXd unit = scale_.asDiagonal() * big_h_ * scale_.asDiagonal();
  const SymmetricEigen es = symmetric_eigen_descending(unit);
  const double top = es.values[0];
  const double bottom = es.values[p - 1];
  condition_ = bottom > 0.0 ? top / bottom : std::numeric_limits<double>::infinity();
  if (!(top > 0.0) || (scale_.array() == 0.0).any() || !(bottom > 1e-12 * unit.trace()) || condition_ > 1e12) {
    VectorXd null = es.vectors.col(p - 1);
    for (Eigen::Index k = 0; k < p; ++k)
      if (scale_[k] == 0.0) null = VectorXd::Unit(p, k);
    null = (scale_.array() > 0.0).select(scale_.cwiseProduct(null), null);
    null /= null.norm();
    std::ostringstream os;
    os << "constraint Gram matrix H is singular or ill-conditioned (condition " << condition_
       << "); null direction [";
    for (Eigen::Index k = 0; k < p; ++k) os << (k ? ", " : "") << null[k];
    os << "]";
    fail(ErrorCode::DegenerateConstraints, os.str());
  }
  h_factor_ = SpdFactor::factor(unit).lower();
}

VectorXd ModifiedKernel::h(double x) const {
  VectorXd kr(rule_.size());
  for (Eigen::Index q = 0; q < rule_.size(); ++q) kr[q] = base_(x, rule_.nodes[q]);
  return weighted_g_.transpose() * kr;
}

double ModifiedKernel::operator()(double x, double xp) const {
  const auto lower = h_factor_.triangularView<Eigen::Lower>();
  const VectorXd a = lower.solve(scale_.cwiseProduct(h(x)));
  const VectorXd b = lower.solve(scale_.cwiseProduct(h(xp)));
  return base_(x, xp) - a.dot(b);
}

CovarianceFunction::RowFn ModifiedKernel::row_function(const VectorXd& nodes) const {
  // Whitened h at the nodes: rows of L^{-1} h(x_j).
  MatrixXd hn(nodes.size(), g_.cols());
  for (Eigen::Index j = 0; j < nodes.size(); ++j) hn.row(j) = scale_.cwiseProduct(h(nodes[j])).transpose();
  const MatrixXd whitened = h_factor_.triangularView<Eigen::Lower>().solve(hn.transpose()).transpose();
  const RowFn base_row = SqExpCovariance(base_).row_function(nodes);
  return [this, whitened, base_row](double x) {
    const VectorXd a = h_factor_.triangularView<Eigen::Lower>().solve(scale_.cwiseProduct(h(x)));
    return VectorXd(base_row(x) - whitened * a);
  };
}

VectorXd ModifiedKernel::apply_constraints(const std::function<double(double)>& f) const {
  VectorXd fv(rule_.size());
  for (Eigen::Index q = 0; q < rule_.size(); ++q) fv[q] = f(rule_.nodes[q]);
  return weighted_g_.transpose() * fv;
}

namespace {

template <class G>
MatrixXd constraint_table(const QuadratureRule& rule, int p, G&& g) {
  MatrixXd out(rule.size(), p);
  for (Eigen::Index q = 0; q < rule.size(); ++q) out.row(q) = g(rule.nodes[q]).transpose();
  return out;
}

}  // namespace

ModifiedKernel additive_ogp_kernel(const KernelSpec& k, const EmbeddedModel& model, const VectorXd& lambda_star,
                                   const WeightingMeasure& mu, int order) {
  if (order < 64) fail(ErrorCode::InsufficientQuadrature, "constraint quadrature order must be at least 64");
  QuadratureRule rule = mu.rule(order);
  MatrixXd g = constraint_table(rule, model.param_dim(),
                                [&](double x) { return model.grad_lambda(x, lambda_star, 0.0); });
  return ModifiedKernel(k, std::move(rule), std::move(g));
}

ModifiedKernel logp_kernel(const KernelSpec& k, const EmbeddedModel& model, const VectorXd& lambda_star,
                           const WeightingMeasure& mu, int order) {
  if (order < 64) fail(ErrorCode::InsufficientQuadrature, "constraint quadrature order must be at least 64");
  QuadratureRule rule = mu.rule(order);
  MatrixXd g = constraint_table(rule, model.param_dim(), [&](double x) {
    return VectorXd(model.grad_delta(x, lambda_star, 0.0) * model.grad_lambda(x, lambda_star, 0.0));
  });
  return ModifiedKernel(k, std::move(rule), std::move(g));
}

RogpConstraints::RogpConstraints(std::shared_ptr<const ForwardMap> quad_map, VectorXd weights, VectorXd lambda_star)
    : map_(std::move(quad_map)), weights_(std::move(weights)), lambda_star_(std::move(lambda_star)) {
  if (weights_.size() != map_->outputs()) fail(ErrorCode::DimensionError, "one quadrature weight per map output");
  if (lambda_star_.size() != map_->param_dim()) fail(ErrorCode::DimensionError, "lambda* has the wrong length");
  weighted_grad_ = weights_.asDiagonal() * map_->plain_jacobian(lambda_star_);
  base_ = map_->plain_predict(lambda_star_);
  if (map_->affine_in_weights()) linear_ = weighted_grad_.transpose() * map_->weight_design();
}

VectorXd RogpConstraints::theta(const VectorXd& w) const {
  if (w.size() != weight_dim()) fail(ErrorCode::DimensionError, "weight vector has the wrong length");
  VectorXd t(map_->dim());
  t << lambda_star_, w;
  return t;
}

VectorXd RogpConstraints::operator()(const VectorXd& w) const {
  if (linear_) {
    if (w.size() != weight_dim()) fail(ErrorCode::DimensionError, "weight vector has the wrong length");
    return *linear_ * w;
  }
  return weighted_grad_.transpose() * (map_->predict(theta(w)) - base_);
}

MatrixXd RogpConstraints::jacobian(const VectorXd& w) const {
  if (linear_) return *linear_;
  return weighted_grad_.transpose() * map_->jacobian(theta(w)).rightCols(weight_dim());
}

std::shared_ptr<const RogpConstraints> rogp_constraints(std::shared_ptr<const EmbeddedModel> model,
                                                        const VectorXd& lambda_star, const EigenBasis& basis,
                                                        const WeightingMeasure& mu, int order) {
  if (order < 64) fail(ErrorCode::InsufficientQuadrature, "constraint quadrature order must be at least 64");
  const QuadratureRule rule = mu.rule(order);
  auto map = std::make_shared<PointwiseForward>(std::move(model), basis, rule.nodes);
  return std::make_shared<RogpConstraints>(map, rule.weights, lambda_star);
}

}  // namespace embgp
