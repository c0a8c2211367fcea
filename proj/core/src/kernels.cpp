#include "embgp/kernels.hpp"

#include <cmath>
#include <sstream>

#include "embgp/errors.hpp"
#include "embgp/linalg.hpp"

namespace embgp {

double KernelSpec::operator()(double x, double xp) const {
  const double d = (x - xp) / length_scale;
  return signal_std * signal_std * std::exp(-0.5 * d * d);
}

void KernelSpec::validate() const {
  if (!(signal_std > 0.0) || !std::isfinite(signal_std))
    fail(ErrorCode::DomainError, "kernel signal_std must be positive");
  if (!(length_scale > 0.0) || !std::isfinite(length_scale))
    fail(ErrorCode::DomainError, "kernel length_scale must be positive");
}

double kernel_eval(const KernelSpec& k, double x, double xp) { return k(x, xp); }

CovarianceFunction::RowFn CovarianceFunction::row_function(const VectorXd& nodes) const {
  return [this, nodes](double x) {
    VectorXd row(nodes.size());
    for (Eigen::Index q = 0; q < nodes.size(); ++q) row[q] = (*this)(x, nodes[q]);
    return row;
  };
}

SqExpCovariance::SqExpCovariance(KernelSpec spec) : spec_(spec) { spec_.validate(); }

CovarianceFunction::RowFn SqExpCovariance::row_function(const VectorXd& nodes) const {
  const KernelSpec spec = spec_;
  return [spec, nodes](double x) {
    const double inv = 1.0 / spec.length_scale;
    return VectorXd((spec.variance() * (-0.5 * ((nodes.array() - x) * inv).square()).exp()).matrix());
  };
}

WeightingMeasure WeightingMeasure::gaussian(double mean, double variance) {
  WeightingMeasure m{MeasureKind::Gaussian, mean, variance};
  m.validate();
  return m;
}

WeightingMeasure WeightingMeasure::uniform(double lo, double hi) {
  WeightingMeasure m{MeasureKind::Uniform, lo, hi};
  m.validate();
  return m;
}

bool WeightingMeasure::in_support(double x) const {
  if (kind == MeasureKind::Gaussian) return std::isfinite(x);
  return x >= first && x <= second;
}

QuadratureRule WeightingMeasure::rule(int order) const {
  return kind == MeasureKind::Gaussian ? gauss_hermite(order, first, second) : gauss_legendre(order, first, second);
}

void WeightingMeasure::validate() const {
  if (kind == MeasureKind::Gaussian) {
    if (!(second > 0.0)) fail(ErrorCode::DomainError, "Gaussian measure variance must be positive");
  } else if (!(second > first)) {
    fail(ErrorCode::DomainError, "uniform measure needs lo < hi");
  }
}

namespace {

// Hermite-function values with the Gaussian envelope exp((a-c) d^2) folded in,
// computed with running rescaling so high orders far from the mean neither
// overflow nor lose the envelope.
VectorXd analytic_values(double x, double mean, double a, double c, Eigen::Index m) {
  VectorXd out(m);
  const double d = x - mean;
  const double u = std::sqrt(2.0 * c) * d;
  const double log_env = (a - c) * d * d + 0.25 * std::log(c / a);
  double log_scale = 0.0;
  double prev = 0.0;
  double cur = 1.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    if (k > 0) {
      const double kk = static_cast<double>(k - 1);
      const double next = std::sqrt(2.0 / (kk + 1.0)) * u * cur - std::sqrt(kk / (kk + 1.0)) * prev;
      prev = cur;
      cur = next;
    }
    const double mag = std::abs(cur);
    if (mag > 1e150) {
      prev /= mag;
      cur /= mag;
      log_scale += std::log(mag);
    }
    const double e = log_env + log_scale;
    out[k] = cur == 0.0 ? 0.0 : cur * std::exp(e);
  }
  return out;
}

double first_significant(const VectorXd& values, double tol) {
  for (Eigen::Index q = 0; q < values.size(); ++q)
    if (std::abs(values[q]) > tol) return values[q];
  return 0.0;
}

}  // namespace

VectorXd EigenBasis::evaluate(double x) const {
  if (const auto* an = std::get_if<AnalyticPart>(&part_)) {
    return analytic_values(x, an->mean, an->a, an->c, size()).cwiseProduct(an->signs);
  }
  const auto& ny = std::get<NystromPart>(part_);
  return ny.extension.transpose() * ny.row(x);
}

MatrixXd EigenBasis::evaluate(const VectorXd& xs) const {
  MatrixXd out(xs.size(), size());
  for (Eigen::Index n = 0; n < xs.size(); ++n) out.row(n) = evaluate(xs[n]).transpose();
  return out;
}

EigenBasis EigenBasis::truncated(Eigen::Index m) const {
  if (m < 1 || m > size()) fail(ErrorCode::DimensionError, "truncation must be in [1, size]");
  EigenBasis b = *this;
  b.eigenvalues_ = eigenvalues_.head(m);
  if (auto* an = std::get_if<AnalyticPart>(&b.part_)) {
    an->signs = an->signs.head(m).eval();
  } else {
    auto& ny = std::get<NystromPart>(b.part_);
    ny.extension = ny.extension.leftCols(m).eval();
  }
  return b;
}

EigenBasis analytic_sqe_basis(const KernelSpec& k, const WeightingMeasure& mu, int m) {
  k.validate();
  if (mu.kind != MeasureKind::Gaussian)
    fail(ErrorCode::UnsupportedMeasure, "analytic SQE eigenbasis requires a Gaussian measure");
  if (m < 1) fail(ErrorCode::DimensionError, "basis size m must be >= 1");
  const double a = 1.0 / (4.0 * mu.second);
  const double b = 1.0 / (2.0 * k.length_scale * k.length_scale);
  const double c = std::sqrt(a * a + 2.0 * a * b);
  const double big_a = a + b + c;
  const double ratio = b / big_a;

  EigenBasis basis;
  basis.kernel_ = std::make_shared<SqExpCovariance>(k);
  basis.measure_ = mu;
  basis.source_ = BasisSource::Analytic;
  basis.eigenvalues_.resize(m);
  const double lead = k.variance() * std::sqrt(2.0 * a / big_a);
  for (int i = 0; i < m; ++i) basis.eigenvalues_[i] = lead * std::pow(ratio, i);

  // Even orders: make phi_i(mean) >= 0.  Odd orders vanish at the mean; make
  // the left tail (first quadrature node) positive.
  EigenBasis::AnalyticPart part{mu.first, a, c, VectorXd(m)};
  for (int i = 0; i < m; ++i) {
    if (i % 2 == 0) {
      part.signs[i] = ((i / 2) % 2 == 0) ? 1.0 : -1.0;
    } else {
      part.signs[i] = -1.0;
    }
  }
  basis.part_ = std::move(part);
  return basis;
}

namespace {

void fix_signs(const VectorXd& at_center, const MatrixXd& node_values, MatrixXd& extension) {
  for (Eigen::Index i = 0; i < extension.cols(); ++i) {
    const double scale = node_values.col(i).cwiseAbs().maxCoeff();
    const double tol = 1e-8 * scale;
    double ref = at_center[i];
    if (std::abs(ref) <= tol) ref = first_significant(node_values.col(i), tol);
    if (ref < 0.0) extension.col(i) *= -1.0;
  }
}

}  // namespace

EigenBasis nystrom_basis(std::shared_ptr<const CovarianceFunction> k, const WeightingMeasure& mu, int m,
                         int order) {
  if (!k) fail(ErrorCode::DomainError, "nystrom_basis: null kernel");
  if (m < 1) fail(ErrorCode::DimensionError, "basis size m must be >= 1");
  if (order == 0) order = 4 * m;
  if (order < 4 * m) {
    std::ostringstream os;
    os << "Nystrom quadrature order " << order << " < 4m = " << 4 * m;
    fail(ErrorCode::InsufficientQuadrature, os.str());
  }
  QuadratureRule rule = mu.rule(order);
  const Eigen::Index n = rule.size();
  if (n < m) fail(ErrorCode::InsufficientQuadrature, "quadrature has fewer usable nodes than m");

  CovarianceFunction::RowFn row = k->row_function(rule.nodes);
  MatrixXd gram(n, n);
  for (Eigen::Index q = 0; q < n; ++q) gram.row(q) = row(rule.nodes[q]).transpose();
  const VectorXd sqrt_w = rule.weights.cwiseSqrt();
  MatrixXd weighted = sqrt_w.asDiagonal() * gram * sqrt_w.asDiagonal();
  SymmetricEigen es = symmetric_eigen_descending(weighted);

  const double lead = es.values[0];
  if (!(lead > 0.0)) fail(ErrorCode::RankDeficientKernel, "leading Nystrom eigenvalue is not positive");
  for (int i = 0; i < m; ++i) {
    if (!(es.values[i] > kNystromNoiseFloor * lead)) {
      std::ostringstream os;
      os << "Nystrom eigenvalue " << i << " (" << es.values[i]
         << ") is below the numerical noise floor; resolvable rank is " << i;
      fail(ErrorCode::RankDeficientKernel, os.str());
    }
  }

  EigenBasis basis;
  basis.kernel_ = std::move(k);
  basis.measure_ = mu;
  basis.source_ = BasisSource::Nystrom;
  basis.eigenvalues_ = es.values.head(m);
  MatrixXd extension = sqrt_w.asDiagonal() * es.vectors.leftCols(m) * basis.eigenvalues_.cwiseInverse().asDiagonal();
  const MatrixXd node_values = gram * extension;
  const VectorXd center = extension.transpose() * row(mu.center());
  fix_signs(center, node_values, extension);
  basis.rule_ = std::move(rule);
  basis.part_ = EigenBasis::NystromPart{std::move(row), std::move(extension)};
  return basis;
}

EigenBasis nystrom_basis(const KernelSpec& k, const WeightingMeasure& mu, int m, int order) {
  return nystrom_basis(std::make_shared<SqExpCovariance>(k), mu, m, order);
}

EigenBasis nystrom_basis_from_nodes(std::shared_ptr<const CovarianceFunction> k, const WeightingMeasure& mu,
                                    const QuadratureRule& rule, const VectorXd& eigenvalues,
                                    const MatrixXd& node_values) {
  if (node_values.rows() != rule.size() || node_values.cols() != eigenvalues.size())
    fail(ErrorCode::DimensionError, "stored basis tables have inconsistent shapes");
  EigenBasis basis;
  basis.measure_ = mu;
  basis.source_ = BasisSource::Nystrom;
  basis.eigenvalues_ = eigenvalues;
  MatrixXd extension = rule.weights.asDiagonal() * node_values * eigenvalues.cwiseInverse().asDiagonal();
  CovarianceFunction::RowFn row = k->row_function(rule.nodes);
  basis.kernel_ = std::move(k);
  basis.rule_ = rule;
  basis.part_ = EigenBasis::NystromPart{std::move(row), std::move(extension)};
  return basis;
}

int resolvable_rank(const CovarianceFunction& k, const WeightingMeasure& mu, int order) {
  QuadratureRule rule = mu.rule(order);
  CovarianceFunction::RowFn row = k.row_function(rule.nodes);
  const Eigen::Index n = rule.size();
  MatrixXd gram(n, n);
  for (Eigen::Index q = 0; q < n; ++q) gram.row(q) = row(rule.nodes[q]).transpose();
  const VectorXd sqrt_w = rule.weights.cwiseSqrt();
  const VectorXd values = symmetric_eigen_descending(sqrt_w.asDiagonal() * gram * sqrt_w.asDiagonal()).values;
  if (!(values[0] > 0.0)) return 0;
  int r = 0;
  while (r < values.size() && values[r] > kNystromNoiseFloor * values[0]) ++r;
  return r;
}

double variance_deficit(const EigenBasis& basis, double x) {
  const VectorXd phi = basis.evaluate(x);
  return basis.kernel_diagonal(x) - phi.cwiseAbs2().dot(basis.eigenvalues());
}

double mercer_sum(const EigenBasis& basis, double x, double xp) {
  return basis.evaluate(x).cwiseProduct(basis.eigenvalues()).dot(basis.evaluate(xp));
}

}  // namespace embgp
