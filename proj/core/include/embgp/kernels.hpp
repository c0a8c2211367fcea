#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <variant>

#include "embgp/quadrature.hpp"

namespace embgp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Squared-exponential kernel sigma_f^2 exp(-(x-x')^2 / (2 l^2)).
struct KernelSpec {
  double signal_std = 1.0;
  double length_scale = 1.0;

  double operator()(double x, double xp) const;
  double variance() const { return signal_std * signal_std; }
  void validate() const;
};

double kernel_eval(const KernelSpec& k, double x, double xp);

// Any symmetric covariance on the real line.  row_function() lets
// implementations hoist work that depends only on a fixed node set.
class CovarianceFunction {
 public:
  using RowFn = std::function<VectorXd(double)>;

  virtual ~CovarianceFunction() = default;
  virtual double operator()(double x, double xp) const = 0;
  virtual RowFn row_function(const VectorXd& nodes) const;
  // Output-variance scale used for jitter and tolerances.
  virtual double variance_scale() const = 0;
  // The unmodified SQE kernel this covariance derives from.
  virtual KernelSpec base_spec() const = 0;
};

class SqExpCovariance final : public CovarianceFunction {
 public:
  explicit SqExpCovariance(KernelSpec spec);
  double operator()(double x, double xp) const override { return spec_(x, xp); }
  RowFn row_function(const VectorXd& nodes) const override;
  double variance_scale() const override { return spec_.variance(); }
  KernelSpec base_spec() const override { return spec_; }

 private:
  KernelSpec spec_;
};

enum class MeasureKind { Gaussian, Uniform };

struct WeightingMeasure {
  MeasureKind kind = MeasureKind::Uniform;
  double first = -1.0;   // mean (Gaussian) or lower bound (Uniform)
  double second = 1.0;   // variance (Gaussian) or upper bound (Uniform)

  static WeightingMeasure gaussian(double mean, double variance);
  static WeightingMeasure uniform(double lo, double hi);

  double center() const { return kind == MeasureKind::Gaussian ? first : 0.5 * (first + second); }
  bool in_support(double x) const;
  // Gauss-Hermite for Gaussian measures, Gauss-Legendre for uniform ones.
  QuadratureRule rule(int order) const;
  void validate() const;
};

enum class BasisSource { Analytic, Nystrom };

class EigenBasis;

// analytic_sqe_basis: closed-form Hermite-function eigenpairs of the SQE
// kernel under N(mean, var).
//
// nystrom_basis: eigenpairs of the quadrature-weighted Gram matrix, extended
// off the nodes by phi_i(x) = (1/lambda_i) sum_q w_q k(x, x_q) phi_i(x_q).
// order 0 means 4m.  nystrom_basis_from_nodes rebuilds one from stored node
// values (basis import).
EigenBasis analytic_sqe_basis(const KernelSpec& k, const WeightingMeasure& mu, int m);
EigenBasis nystrom_basis(std::shared_ptr<const CovarianceFunction> k, const WeightingMeasure& mu, int m,
                         int order = 0);
EigenBasis nystrom_basis_from_nodes(std::shared_ptr<const CovarianceFunction> k, const WeightingMeasure& mu,
                                    const QuadratureRule& rule, const VectorXd& eigenvalues,
                                    const MatrixXd& node_values);

// Truncated Mercer basis {(lambda_i, phi_i)} of a covariance under a measure,
// orthonormal in L2(mu) with non-increasing eigenvalues.  Immutable.
class EigenBasis {
 public:
  Eigen::Index size() const { return eigenvalues_.size(); }
  const VectorXd& eigenvalues() const { return eigenvalues_; }
  BasisSource source() const { return source_; }
  const WeightingMeasure& measure() const { return measure_; }
  const std::shared_ptr<const CovarianceFunction>& kernel() const { return kernel_; }

  VectorXd evaluate(double x) const;
  // Row n holds phi(xs[n])^T.
  MatrixXd evaluate(const VectorXd& xs) const;
  double kernel_diagonal(double x) const { return (*kernel_)(x, x); }

  // Construction quadrature (Nystrom) or none (analytic).
  const std::optional<QuadratureRule>& construction_rule() const { return rule_; }

  // Keep the leading m eigenpairs.
  EigenBasis truncated(Eigen::Index m) const;

 private:
  friend EigenBasis analytic_sqe_basis(const KernelSpec&, const WeightingMeasure&, int);
  friend EigenBasis nystrom_basis(std::shared_ptr<const CovarianceFunction>, const WeightingMeasure&, int,
                                  int);
  friend EigenBasis nystrom_basis_from_nodes(std::shared_ptr<const CovarianceFunction>, const WeightingMeasure&,
                                             const QuadratureRule&, const VectorXd&, const MatrixXd&);

  struct AnalyticPart {
    double mean;
    double a;
    double c;
    VectorXd signs;
  };
  struct NystromPart {
    CovarianceFunction::RowFn row;
    MatrixXd extension;  // phi(x)^T = row(x)^T * extension
  };

  std::shared_ptr<const CovarianceFunction> kernel_;
  WeightingMeasure measure_;
  VectorXd eigenvalues_;
  BasisSource source_ = BasisSource::Nystrom;
  std::optional<QuadratureRule> rule_;
  std::variant<AnalyticPart, NystromPart> part_{AnalyticPart{0.0, 0.0, 0.0, VectorXd()}};
};

EigenBasis nystrom_basis(const KernelSpec& k, const WeightingMeasure& mu, int m, int order = 0);


// Number of Nystrom eigenvalues above the relative noise floor used by
// nystrom_basis (1e-14 of the leading eigenvalue).
int resolvable_rank(const CovarianceFunction& k, const WeightingMeasure& mu, int order);

inline constexpr double kNystromNoiseFloor = 1e-14;

double variance_deficit(const EigenBasis& basis, double x);
double mercer_sum(const EigenBasis& basis, double x, double xp);

}  // namespace embgp
