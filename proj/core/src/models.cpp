#include "embgp/models.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "embgp/errors.hpp"

namespace embgp {

namespace {

void check_lambda(const VectorXd& lambda, int p) {
  if (lambda.size() != p) {
    std::ostringstream os;
    os << "expected " << p << " model parameters, got " << lambda.size();
    fail(ErrorCode::DimensionError, os.str());
  }
}

}  // namespace

double guarded_exp(double arg) {
  if (arg > 700.0 || std::isnan(arg)) {
    std::ostringstream os;
    os << "exp argument " << arg << " exceeds overflow guard";
    fail(ErrorCode::ModelOverflow, os.str());
  }
  return std::exp(arg);
}

double LinearModel::value(double x, const VectorXd& lambda, double delta) const {
  check_lambda(lambda, 2);
  return lambda[0] + lambda[1] * x + delta;
}

VectorXd LinearModel::grad_lambda(double x, const VectorXd& lambda, double) const {
  check_lambda(lambda, 2);
  return VectorXd{{1.0, x}};
}

double SinExpModel::value(double x, const VectorXd& lambda, double delta) const {
  check_lambda(lambda, 2);
  if (site_ == SinExpSite::S1) return std::sin(lambda[0] * x + delta) + guarded_exp(lambda[1] * x);
  return std::sin(lambda[0] * x) + guarded_exp(lambda[1] * x + delta);
}

VectorXd SinExpModel::grad_lambda(double x, const VectorXd& lambda, double delta) const {
  check_lambda(lambda, 2);
  if (site_ == SinExpSite::S1)
    return VectorXd{{x * std::cos(lambda[0] * x + delta), x * guarded_exp(lambda[1] * x)}};
  return VectorXd{{x * std::cos(lambda[0] * x), x * guarded_exp(lambda[1] * x + delta)}};
}

double SinExpModel::grad_delta(double x, const VectorXd& lambda, double delta) const {
  check_lambda(lambda, 2);
  if (site_ == SinExpSite::S1) return std::cos(lambda[0] * x + delta);
  return guarded_exp(lambda[1] * x + delta);
}

ModelPair linear_pair() {
  TruthModel truth{"linear_cubic", [](const VectorXd& in) {
                     const double x = in[0];
                     return 2.0 + 2.0 * x + 3.0 * x * x - 5.0 * x * x * x;
                   }};
  return {truth, std::make_shared<LinearModel>()};
}

ModelPair sinexp_pair(SinExpSite site) {
  TruthModel truth{"exp_cubic", [](const VectorXd& in) {
                     const double x = in[0];
                     return guarded_exp(1.0 - 0.5 * x + x * x + x * x * x);
                   }};
  return {truth, std::make_shared<SinExpModel>(site)};
}

TruthModel smooth_demo_truth() {
  return {"one_plus_x_plus_sin", [](const VectorXd& in) { return 1.0 + in[0] + std::sin(in[0]); }};
}

MatrixXd uniform_inputs(Eigen::Index n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  MatrixXd x(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = u(rng);
  return x;
}

MatrixXd gaussian_inputs(Eigen::Index n, double mean, double variance, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(mean, std::sqrt(variance));
  MatrixXd x(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = g(rng);
  return x;
}

Dataset generate_data(const TruthModel& truth, const MatrixXd& inputs, double noise_std, std::uint64_t seed) {
  if (!(noise_std > 0.0)) fail(ErrorCode::DomainError, "noise_std must be positive");
  // Separate stream from the one that drew the inputs.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> eps(0.0, noise_std);
  Dataset d;
  d.inputs = inputs;
  d.noise_std = noise_std;
  d.outputs.resize(inputs.rows());
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    const VectorXd row = inputs.row(i).transpose();
    d.outputs[i] = truth.value(row) + eps(rng);
  }
  return d;
}

}  // namespace embgp
