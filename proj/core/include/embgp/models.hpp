#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "embgp/gp.hpp"

namespace embgp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// A fit model f(x; lambda) with a scalar correction delta inserted at one
// site, f~(x; lambda, delta).  Input x is one-dimensional.
class EmbeddedModel {
 public:
  virtual ~EmbeddedModel() = default;

  virtual std::string name() const = 0;
  virtual std::string embed_site() const = 0;
  virtual int param_dim() const = 0;

  virtual double value(double x, const VectorXd& lambda, double delta) const = 0;
  virtual VectorXd grad_lambda(double x, const VectorXd& lambda, double delta) const = 0;
  virtual double grad_delta(double x, const VectorXd& lambda, double delta) const = 0;
  double plain_value(double x, const VectorXd& lambda) const { return value(x, lambda, 0.0); }

  // value == plain_value + delta
  virtual bool additive() const { return false; }
  // plain_value is affine in lambda
  virtual bool linear_in_lambda() const { return false; }
};

class LinearModel final : public EmbeddedModel {
 public:
  std::string name() const override { return "linear"; }
  std::string embed_site() const override { return "additive"; }
  int param_dim() const override { return 2; }
  double value(double x, const VectorXd& lambda, double delta) const override;
  VectorXd grad_lambda(double x, const VectorXd& lambda, double delta) const override;
  double grad_delta(double, const VectorXd&, double) const override { return 1.0; }
  bool additive() const override { return true; }
  bool linear_in_lambda() const override { return true; }
};

enum class SinExpSite { S1, S2 };

// sin(l0 x) + exp(l1 x) with delta inside the sine (S1) or the exponential (S2).
class SinExpModel final : public EmbeddedModel {
 public:
  explicit SinExpModel(SinExpSite site) : site_(site) {}
  std::string name() const override { return "sinexp"; }
  std::string embed_site() const override { return site_ == SinExpSite::S1 ? "S1" : "S2"; }
  int param_dim() const override { return 2; }
  double value(double x, const VectorXd& lambda, double delta) const override;
  VectorXd grad_lambda(double x, const VectorXd& lambda, double delta) const override;
  double grad_delta(double x, const VectorXd& lambda, double delta) const override;

 private:
  SinExpSite site_;
};

// exp with the overflow guard used by every model: arguments above 700 raise
// ModelOverflow instead of producing inf.
double guarded_exp(double arg);

struct TruthModel {
  std::string name;
  // Input row (x) or (x, t).
  std::function<double(const VectorXd&)> value;
};

struct ModelPair {
  TruthModel truth;
  std::shared_ptr<const EmbeddedModel> fit;
};

ModelPair linear_pair();
ModelPair sinexp_pair(SinExpSite site);
// f(x) = 1 + x + sin x, the regression target used for the FS/WS comparison.
TruthModel smooth_demo_truth();

MatrixXd uniform_inputs(Eigen::Index n, double lo, double hi, std::uint64_t seed);
MatrixXd gaussian_inputs(Eigen::Index n, double mean, double variance, std::uint64_t seed);

// y_i = f_t(x_i) + eps_i, eps_i ~ N(0, sigma_d^2), reproducible per seed.
Dataset generate_data(const TruthModel& truth, const MatrixXd& inputs, double noise_std, std::uint64_t seed);

}  // namespace embgp
