#include "embgp/pushforward.hpp"

#include "embgp/errors.hpp"

namespace embgp {

namespace {

struct Welford {
  VectorXd mean;
  VectorXd m2;
  long n = 0;

  explicit Welford(Eigen::Index size) : mean(VectorXd::Zero(size)), m2(VectorXd::Zero(size)) {}
  void add(const VectorXd& v) {
    ++n;
    const VectorXd d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d.cwiseProduct(v - mean);
  }
  VectorXd variance() const { return n > 0 ? VectorXd(m2 / static_cast<double>(n)) : m2; }
};

void fill_pp(BandTable& t, const VectorXd& g_var, double noise_std) {
  t.mean.col(BandTable::Pp) = t.mean.col(BandTable::PfpG);
  t.std.col(BandTable::Pp) = (g_var.array() + noise_std * noise_std).sqrt();
}

}  // namespace

BandTable pushforward_bands(const MatrixXd& samples, const ForwardMap& grid_map, const MatrixXd& gp_design,
                            const MatrixXd& grid, double noise_std) {
  if (samples.rows() == 0) fail(ErrorCode::DimensionError, "push-forward needs at least one sample");
  if (samples.cols() != grid_map.dim()) fail(ErrorCode::DimensionError, "sample width differs from map dimension");
  const Eigen::Index g = grid_map.outputs();
  if (gp_design.rows() != g || gp_design.cols() != grid_map.weight_dim())
    fail(ErrorCode::DimensionError, "GP design must be G x m");
  Welford f(g), full(g), gp(g);
  BandTable t;
  t.grid = grid;
  for (Eigen::Index s = 0; s < samples.rows(); ++s) {
    const VectorXd theta = samples.row(s).transpose();
    VectorXd fv, gv;
    try {
      fv = grid_map.plain_predict(grid_map.lambda_of(theta));
      gv = grid_map.predict(theta);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ModelOverflow) throw;
      ++t.skipped;
      continue;
    }
    if (!fv.allFinite() || !gv.allFinite()) {
      ++t.skipped;
      continue;
    }
    f.add(fv);
    full.add(gv);
    gp.add(gp_design * grid_map.weights_of(theta));
  }
  if (full.n == 0) fail(ErrorCode::EvaluationFailure, "model failed at every sample");
  t.used = full.n;
  t.mean.resize(g, 4);
  t.std.resize(g, 4);
  t.mean.col(BandTable::PfpF) = f.mean;
  t.mean.col(BandTable::PfpG) = full.mean;
  t.mean.col(BandTable::PfpGp) = gp.mean;
  t.std.col(BandTable::PfpF) = f.variance().cwiseSqrt();
  t.std.col(BandTable::PfpG) = full.variance().cwiseSqrt();
  t.std.col(BandTable::PfpGp) = gp.variance().cwiseSqrt();
  fill_pp(t, full.variance(), noise_std);
  return t;
}

BandTable gaussian_bands(const GaussianDensity& theta_law, const ForwardMap& grid_map, const MatrixXd& gp_design,
                         const MatrixXd& grid, double noise_std) {
  if (!grid_map.affine()) fail(ErrorCode::DomainError, "exact bands need a map affine in theta");
  const Eigen::Index p = grid_map.param_dim();
  const Eigen::Index d = grid_map.dim();
  const VectorXd zero = VectorXd::Zero(d);
  const MatrixXd j = grid_map.jacobian(zero);
  const VectorXd offset = grid_map.predict(zero);
  MatrixXd jf = MatrixXd::Zero(j.rows(), d);
  jf.leftCols(p) = j.leftCols(p);
  MatrixXd jgp = MatrixXd::Zero(j.rows(), d);
  jgp.rightCols(d - p) = gp_design;
  auto variance = [&](const MatrixXd& a) {
    return VectorXd((a * theta_law.covariance).cwiseProduct(a).rowwise().sum().cwiseMax(0.0));
  };
  BandTable t;
  t.grid = grid;
  t.used = 1;
  t.mean.resize(j.rows(), 4);
  t.std.resize(j.rows(), 4);
  t.mean.col(BandTable::PfpF) = offset + jf * theta_law.mean;
  t.mean.col(BandTable::PfpG) = offset + j * theta_law.mean;
  t.mean.col(BandTable::PfpGp) = jgp * theta_law.mean;
  const VectorXd g_var = variance(j);
  t.std.col(BandTable::PfpF) = variance(jf).cwiseSqrt();
  t.std.col(BandTable::PfpG) = g_var.cwiseSqrt();
  t.std.col(BandTable::PfpGp) = variance(jgp).cwiseSqrt();
  fill_pp(t, g_var, noise_std);
  return t;
}

BandTable koh_bands(const MatrixXd& lambda_samples, const ForwardMap& plain_grid_map, const GaussianMixture& bias,
                    const MatrixXd& grid, double noise_std) {
  if (lambda_samples.rows() == 0 || bias.means.size() != static_cast<std::size_t>(lambda_samples.rows()))
    fail(ErrorCode::DimensionError, "one bias component per lambda sample is required");
  const Eigen::Index g = plain_grid_map.outputs();
  Welford f(g), full(g);
  for (Eigen::Index s = 0; s < lambda_samples.rows(); ++s) {
    const VectorXd fv = plain_grid_map.plain_predict(lambda_samples.row(s).transpose());
    f.add(fv);
    full.add(fv + bias.means[static_cast<std::size_t>(s)]);
  }
  BandTable t;
  t.grid = grid;
  t.used = f.n;
  t.mean.resize(g, 4);
  t.std.resize(g, 4);
  const VectorXd g_var = full.variance() + bias.covariance.diagonal().cwiseMax(0.0);
  t.mean.col(BandTable::PfpF) = f.mean;
  t.mean.col(BandTable::PfpG) = full.mean;
  t.mean.col(BandTable::PfpGp) = bias.mean();
  t.std.col(BandTable::PfpF) = f.variance().cwiseSqrt();
  t.std.col(BandTable::PfpG) = g_var.cwiseSqrt();
  t.std.col(BandTable::PfpGp) = bias.variance().cwiseMax(0.0).cwiseSqrt();
  fill_pp(t, g_var, noise_std);
  return t;
}

}  // namespace embgp
