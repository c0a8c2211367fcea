#include "embgp_cli/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>

#include "embgp/errors.hpp"
#include "embgp/io.hpp"
#include "embgp/ogp.hpp"

namespace embgp::cli {

using nlohmann::json;

namespace {

// Source profile of the ADR fit model as a pointwise model in x, so the band
// machinery can push posterior samples through it.
class AdrSourceModel final : public EmbeddedModel {
 public:
  std::string name() const override { return "adr-source"; }
  std::string embed_site() const override { return "source"; }
  int param_dim() const override { return 1; }
  double value(double x, const VectorXd& lambda, double delta) const override {
    return adr_fit_profile(x, lambda[0]) + delta;
  }
  VectorXd grad_lambda(double x, const VectorXd& lambda, double) const override {
    const double c = 2.0 * std::numbers::pi * std::numbers::pi - 1.0;
    return VectorXd::Constant(1, c * x * std::cos(lambda[0] * x));
  }
  double grad_delta(double, const VectorXd&, double) const override { return 1.0; }
  bool additive() const override { return true; }
};

double adr_full_source(double x) {
  const double pi = std::numbers::pi;
  return 2.0 * pi * std::cos(2.0 * pi * x) + 2.0 * (2.0 * pi * pi - 1.0) * std::sin(2.0 * pi * x);
}

std::shared_ptr<const EmbeddedModel> model_for(const ExperimentConfig& c) {
  const bool linear = c.experiment == Experiment::Linear || c.model == "linear";
  if (linear) return linear_pair().fit;
  return sinexp_pair(c.embed_site == "S1" ? SinExpSite::S1 : SinExpSite::S2).fit;
}

// Evenly spaced rows, at most cap of them.
MatrixXd thin_rows(const MatrixXd& m, Eigen::Index cap) {
  if (m.rows() <= cap) return m;
  MatrixXd out(cap, m.cols());
  for (Eigen::Index i = 0; i < cap; ++i) out.row(i) = m.row(i * m.rows() / cap);
  return out;
}

double series_ess(const VectorXd& v) {
  try {
    return ess_series(MatrixXd(v));
  } catch (const Error&) {
    return 0.0;
  }
}

json to_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json measure_json(const WeightingMeasure& mu) {
  if (mu.kind == MeasureKind::Gaussian) return {{"kind", "gaussian"}, {"mean", mu.first}, {"variance", mu.second}};
  return {{"kind", "uniform"}, {"lo", mu.first}, {"hi", mu.second}};
}

// FNV-1a over the dataset values, used by compare to match runs.
std::string dataset_digest(const Dataset& d) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto mix = [&](double v) {
    const std::string s = format_double(v);
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ULL;
    }
  };
  for (Eigen::Index i = 0; i < d.inputs.size(); ++i) mix(d.inputs.data()[i]);
  for (Eigen::Index i = 0; i < d.outputs.size(); ++i) mix(d.outputs[i]);
  mix(d.noise_std);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SamplerSettings sampler_for(const ExperimentConfig& c) {
  SamplerSettings s = c.sampler.settings;
  if (c.sampler.choice == SamplerChoice::Rwm) s.algorithm = SamplerAlgorithm::AdaptiveRwMetropolis;
  return s;
}

int walkers_for(const SamplerSettings& s, Eigen::Index dim) {
  if (s.algorithm == SamplerAlgorithm::AdaptiveRwMetropolis) return 1;
  return s.n_walkers > 0 ? s.n_walkers : std::max<int>(2 * static_cast<int>(dim), 32);
}

// Walker cloud from a Gaussian around the mode; RWM starts at the mode itself.
ChainSet run_sampler(const LogDensity& logpost, const GaussianDensity& cloud, const SamplerSettings& s) {
  if (s.algorithm == SamplerAlgorithm::AdaptiveRwMetropolis) return sample(logpost, cloud.mean, s);
  std::mt19937_64 rng(s.seed ^ 0x5eedc10dULL);
  const int n = walkers_for(s, cloud.dim());
  MatrixXd init = cloud.sample(rng, n);
  // Keep every walker at a finite density; fall back to the mode.
  for (int k = 0; k < n; ++k)
    if (!std::isfinite(logpost(init.row(k).transpose()))) init.row(k) = cloud.mean.transpose();
  SamplerSettings run = s;
  run.n_walkers = n;
  return sample_walkers(logpost, init, run);
}

void fill_ess(RunResult& r, int p) {
  r.ess = VectorXd::Zero(r.chain ? r.chain->dim : r.samples.cols());
  for (Eigen::Index j = 0; j < r.ess.size(); ++j) {
    if (r.chain) {
      try {
        r.ess[j] = ess(*r.chain, static_cast<int>(j));
      } catch (const Error&) {
        r.ess[j] = 0.0;
      }
    } else {
      r.ess[j] = series_ess(r.samples.col(j));
    }
  }
  const Eigen::Index np = std::min<Eigen::Index>(p, r.ess.size());
  r.min_ess_lambda = np > 0 ? r.ess.head(np).minCoeff() : 0.0;
  r.min_ess_weights = r.ess.size() > np ? r.ess.tail(r.ess.size() - np).minCoeff() : 0.0;
}

}  // namespace

std::vector<std::string> Problem::parameter_names() const {
  std::vector<std::string> names;
  for (int i = 0; i < param_dim(); ++i) names.push_back("lambda_" + std::to_string(i));
  if (basis)
    for (Eigen::Index j = 0; j < basis->size(); ++j) names.push_back("w_" + std::to_string(j));
  return names;
}

GaussianDensity Problem::lambda_prior() const {
  return GaussianDensity::diagonal(config.prior_mean, config.prior_variance);
}

Dataset make_dataset(const ExperimentConfig& c) {
  if (c.dataset.file) {
    fs::path f = *c.dataset.file;
    if (f.is_relative() && !c.source_path.empty()) f = c.source_path.parent_path() / f;
    Dataset d = read_dataset(f);
    d.noise_std = c.dataset.noise_std;
    if (c.experiment == Experiment::Adr ? d.input_dim() != 2 : d.input_dim() != 1)
      fail(ErrorCode::ConfigError, "dataset.file: wrong number of input columns for this experiment");
    return d;
  }
  const std::uint64_t seed = c.dataset.seed;
  switch (c.experiment) {
    case Experiment::Linear:
      return generate_data(linear_pair().truth, uniform_inputs(c.dataset.n, c.dataset.lo, c.dataset.hi, seed),
                           c.dataset.noise_std, seed + 1);
    case Experiment::SinExp:
      return generate_data(sinexp_pair(c.embed_site == "S1" ? SinExpSite::S1 : SinExpSite::S2).truth,
                           uniform_inputs(c.dataset.n, c.dataset.lo, c.dataset.hi, seed), c.dataset.noise_std,
                           seed + 1);
    case Experiment::Adr: {
      const AdrGrid g{c.adr.nx, c.adr.nt};
      return generate_data(adr_truth(g), adr_observation_inputs(g, c.dataset.n, seed), c.dataset.noise_std, seed + 1);
    }
    case Experiment::Custom: break;
  }
  fail(ErrorCode::ConfigError, "dataset.file: custom experiments need a dataset file");
}

Problem prepare_data(const ExperimentConfig& c) {
  Problem p;
  p.config = c;
  p.data = make_dataset(c);
  if (c.experiment == Experiment::Adr) {
    p.grid = AdrGrid{c.adr.nx, c.adr.nt};
    p.grid->validate();
    p.plain_map = std::make_shared<AdrForward>(*p.grid, MatrixXd::Zero(c.adr.nx + 1, 0), p.data.inputs);
  } else {
    p.model = model_for(c);
    p.plain_map = std::make_shared<PointwiseForward>(p.model, p.data.x());
  }
  p.ls = least_squares_lambda_result(*p.plain_map, p.data, c.prior_mean);
  if (!p.ls.converged)
    fail(ErrorCode::NonConvergence, "least squares for lambda* did not converge (gradient norm " +
                                        format_double(p.ls.grad_norm) + ")");
  return p;
}

void prepare_posterior(Problem& p) {
  const ExperimentConfig& c = p.config;
  auto base = std::make_shared<SqExpCovariance>(c.kernel);
  p.covariance = base;
  if (c.method == Method::Logp) {
    const VectorXd& ls = p.ls.lambda;
    if (p.model->additive())
      p.covariance = std::make_shared<ModifiedKernel>(
          additive_ogp_kernel(c.kernel, *p.model, ls, c.basis.measure, c.constraint_order));
    else
      p.covariance = std::make_shared<ModifiedKernel>(
          logp_kernel(c.kernel, *p.model, ls, c.basis.measure, c.constraint_order));
  }
  p.m_requested = c.basis.m;
  if (c.method == Method::Koh) return;

  const bool analytic = c.method != Method::Logp &&
                        (c.basis.source == "analytic" ||
                         (c.basis.source == "auto" && c.basis.measure.kind == MeasureKind::Gaussian));
  if (c.basis.source == "analytic" && !analytic)
    fail(ErrorCode::ConfigError, "basis.source: LOGP needs a numerical basis of the modified kernel");
  if (analytic) {
    p.basis = analytic_sqe_basis(c.kernel, c.basis.measure, c.basis.m);
  } else {
    const int order = c.basis.order > 0 ? c.basis.order : 4 * c.basis.m;
    const int m = std::min(c.basis.m, resolvable_rank(*p.covariance, c.basis.measure, order));
    if (m < 1) fail(ErrorCode::RankDeficientKernel, "the kernel has no resolvable eigenpair under this measure");
    p.basis = nystrom_basis(p.covariance, c.basis.measure, m, order);
  }

  if (p.grid) {
    p.map = std::make_shared<AdrForward>(*p.grid, *p.basis, p.data.inputs);
  } else {
    p.map = std::make_shared<PointwiseForward>(p.model, *p.basis, p.data.x());
  }
  PosteriorSpec spec{p.map, p.data, PriorSpec::with_basis(p.lambda_prior(), p.basis->eigenvalues()), nullptr, {}};
  if (c.method == Method::Rogp) {
    if (p.grid)
      spec.regularizer = adr_rogp_constraints(*p.grid, *p.basis, p.ls.lambda, c.adr.constraint_stride);
    else
      spec.regularizer = rogp_constraints(p.model, p.ls.lambda, *p.basis, c.basis.measure, c.constraint_order);
    spec.alpha = *c.alpha;
  }
  p.spec = std::move(spec);
}

Problem build_problem(const ExperimentConfig& c) {
  Problem p = prepare_data(c);
  prepare_posterior(p);
  return p;
}

RunResult run_inference(const Problem& p) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig& c = p.config;
  RunResult r;
  const int np = p.param_dim();
  const VectorXd xs = VectorXd::LinSpaced(c.grid.points, c.grid.lo, c.grid.hi);
  const MatrixXd grid_inputs = xs;
  std::mt19937_64 rng(c.sampler.settings.seed ^ 0xe8ac7ULL);
  const bool want_exact = c.sampler.choice == SamplerChoice::Auto || c.sampler.choice == SamplerChoice::Exact;

  if (c.method == Method::Koh) {
    const CovarianceFunction& k = *p.covariance;
    const GaussianDensity prior = p.lambda_prior();
    if (p.plain_map->affine() && want_exact) {
      r.posterior = "exact";
      r.samples = koh_linear_posterior(*p.plain_map, p.data, k, prior).sample(rng, c.sampler.exact_draws);
    } else {
      if (c.sampler.choice == SamplerChoice::Exact)
        fail(ErrorCode::ConfigError, "sampler.algorithm: exact sampling needs a model affine in lambda");
      r.posterior = "mcmc";
      const LogDensity logpost = [&](const VectorXd& lam) {
        try {
          return koh_log_posterior(lam, *p.plain_map, p.data, k, prior);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::ModelOverflow) return -std::numeric_limits<double>::infinity();
          throw;
        }
      };
      GaussianDensity cloud = prior;
      cloud.mean = p.ls.lambda;
      cloud.covariance *= 1e-4;
      r.chain = run_sampler(logpost, cloud, sampler_for(c));
      r.samples = r.chain->samples();
    }
    r.chain_names = p.parameter_names();
    fill_ess(r, np);
    const MatrixXd lam = thin_rows(r.samples, 2000);
    const auto grid_map = std::make_shared<PointwiseForward>(p.model, xs);
    const GaussianMixture bias = koh_bias_posterior(lam, *p.plain_map, p.data, k, xs);
    r.bands = koh_bands(lam, *grid_map, bias, grid_inputs, p.data.noise_std);
    const GaussianMixture at_data = koh_bias_posterior(lam, *p.plain_map, p.data, k, p.data.x());
    VectorXd fit = at_data.mean();
    for (Eigen::Index s = 0; s < lam.rows(); ++s) fit += p.plain_map->plain_predict(lam.row(s).transpose()) / lam.rows();
    r.fit_rms = std::sqrt((fit - p.data.outputs).squaredNorm() / p.data.size());
  } else {
    const PosteriorSpec& spec = *p.spec;
    const EmbeddedPosterior post(spec);
    const Eigen::Index dim = post.dim();
    VectorXd start = VectorXd::Zero(dim);
    start.head(np) = p.ls.lambda;
    const bool exact_ok = p.map->affine() && (!spec.regularizer || spec.regularizer->is_linear());
    if (c.lis.enabled) {
      r.posterior = "lis";
      LisSettings ls;
      ls.cutoff = c.lis.cutoff;
      ls.max_hessians = c.lis.max_hessians;
      ls.seed = c.sampler.settings.seed;
      AdaptiveLisResult lis = adaptive_global_lis(post, start, ls);
      const LisBasis& basis = lis.basis;
      const ReducedPosterior reduced(basis, post);
      GaussianDensity cloud;
      cloud.mean = basis.reduce(lis.map_point);
      cloud.covariance = MatrixXd((1.0 + basis.eigenvalues.head(basis.r).array()).inverse().matrix().asDiagonal());
      r.chain = run_sampler(std::cref(reduced), cloud, sampler_for(c));
      for (int j = 0; j < basis.r; ++j) r.chain_names.push_back("lis_" + std::to_string(j));
      fill_ess(r, 0);
      r.min_ess_lambda = r.min_ess_weights = r.ess.minCoeff();
      r.samples = recombine_samples(basis, r.chain->samples(), c.lis.n_cs, c.sampler.settings.seed + 17);
      r.map_point = lis.map_point;
      r.lis = std::move(lis);
    } else if (exact_ok && want_exact) {
      r.posterior = "exact";
      r.samples = linear_gaussian_posterior(spec).sample(rng, c.sampler.exact_draws);
      r.chain_names = p.parameter_names();
      fill_ess(r, np);
    } else {
      if (c.sampler.choice == SamplerChoice::Exact)
        fail(ErrorCode::ConfigError, "sampler.algorithm: exact sampling needs an affine map and linear constraints");
      r.posterior = "mcmc";
      const MapResult map = find_map(post, start);
      if (!std::isfinite(map.log_density)) fail(ErrorCode::NonConvergence, "MAP search ended at a non-finite density");
      r.map_point = map.theta;
      r.chain = run_sampler(std::cref(post), laplace_approximation(post, map.theta), sampler_for(c));
      r.samples = r.chain->samples();
      r.chain_names = p.parameter_names();
      fill_ess(r, np);
    }
    r.overflows = post.overflow_count();

    const MatrixXd draws = thin_rows(r.samples, 4000);
    const MatrixXd design = p.basis->evaluate(xs);
    std::shared_ptr<const ForwardMap> grid_map;
    if (p.grid)
      grid_map = std::make_shared<PointwiseForward>(std::make_shared<AdrSourceModel>(), *p.basis, xs);
    else
      grid_map = std::make_shared<PointwiseForward>(p.model, *p.basis, xs);
    r.bands = pushforward_bands(draws, *grid_map, design, grid_inputs, p.data.noise_std);

    VectorXd fit = VectorXd::Zero(p.data.size());
    long used = 0;
    for (Eigen::Index s = 0; s < draws.rows(); ++s) {
      try {
        fit += p.map->predict(draws.row(s).transpose());
        ++used;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ModelOverflow) throw;
      }
    }
    if (used > 0) r.fit_rms = std::sqrt((fit / used - p.data.outputs).squaredNorm() / p.data.size());

    if (p.grid) {
      const MatrixXd truth = adr_truth_field(*p.grid);
      r.field_error_plain = (adr_solve(*p.grid, p.ls.lambda[0]) - truth).cwiseAbs().maxCoeff();
      const VectorXd mean = r.samples.colwise().mean();
      const VectorXd w = mean.tail(p.basis->size());
      const EigenBasis& b = *p.basis;
      const MatrixXd u = adr_solve(*p.grid, mean[0], [&](double x) { return b.evaluate(x).dot(w); });
      r.field_error_gp = (u - truth).cwiseAbs().maxCoeff();
      double err = 0.0, amp = 0.0;
      for (Eigen::Index i = 0; i < xs.size(); ++i) {
        const double t = adr_full_source(xs[i]);
        err = std::max(err, std::abs(r.bands.mean(i, BandTable::PfpG) - t));
        amp = std::max(amp, std::abs(t));
      }
      r.source_error = err / amp;
    }
  }

  const MatrixXd lam = r.samples.leftCols(np);
  r.lambda_mean = lam.colwise().mean();
  r.lambda_std = ((lam.rowwise() - r.lambda_mean.transpose()).array().square().colwise().sum() /
                  std::max<double>(1.0, static_cast<double>(lam.rows() - 1)))
                     .sqrt()
                     .transpose();
  r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

void write_dataset_files(const Problem& p, const fs::path& dir) {
  const ExperimentConfig& c = p.config;
  Meta meta{{"experiment", meta_string(to_string(c.experiment))}};
  if (c.dataset.file) {
    meta["source_file"] = meta_string(c.dataset.file->string());
  } else {
    meta["seed"] = meta_number(static_cast<double>(c.dataset.seed));
    meta["truth"] = meta_string(c.experiment == Experiment::Adr ? "adr" : to_string(c.experiment));
  }
  write_dataset(dir / "dataset.csv", p.data, meta);
}

void write_lambda_star(const Problem& p, const fs::path& dir) {
  json j{{"lambda_star", to_json(p.ls.lambda)},
         {"residual_norm", p.ls.residual_norm},
         {"grad_norm", p.ls.grad_norm},
         {"iterations", p.ls.iterations},
         {"converged", p.ls.converged}};
  write_text(dir / "lambda_star.json", j.dump(2) + "\n");
}

void write_run(const Problem& p, const RunResult& r, const fs::path& dir) {
  const ExperimentConfig& c = p.config;
  fs::create_directories(dir);
  write_dataset_files(p, dir);
  write_lambda_star(p, dir);
  if (p.basis) export_basis(dir / "basis.csv", *p.basis);
  std::vector<std::string> names = c.method == Method::Koh ? std::vector<std::string>{} : p.parameter_names();
  if (c.method == Method::Koh)
    for (int i = 0; i < p.param_dim(); ++i) names.push_back("lambda_" + std::to_string(i));
  if (r.chain) write_chain_csv(dir / "chain.csv", *r.chain, r.chain_names);
  if (!r.chain || r.lis) write_matrix_csv(dir / "samples.csv", names, thin_rows(r.samples, 5000));
  write_histograms(dir / "histograms.csv", r.samples, names);
  write_bands(dir, "bands", r.bands, {"x"});

  json s;
  s["experiment"] = to_string(c.experiment);
  s["method"] = to_string(c.method);
  s["embed_site"] = c.embed_site;
  s["dataset_digest"] = dataset_digest(p.data);
  s["n_data"] = p.data.size();
  s["noise_std"] = p.data.noise_std;
  s["kernel"] = {{"signal_std", c.kernel.signal_std}, {"length_scale", c.kernel.length_scale}};
  s["measure"] = measure_json(c.basis.measure);
  s["m_requested"] = p.m_requested;
  s["m"] = p.basis ? static_cast<int>(p.basis->size()) : 0;
  if (p.basis) s["basis_source"] = p.basis->source() == BasisSource::Analytic ? "analytic" : "nystrom";
  s["alpha"] = c.alpha ? to_json(*c.alpha) : json(nullptr);
  s["lambda_star"] = to_json(p.ls.lambda);
  s["lambda_mean"] = to_json(r.lambda_mean);
  s["lambda_std"] = to_json(r.lambda_std);
  s["abs_err_lambda"] = to_json((r.lambda_mean - p.ls.lambda).cwiseAbs());
  s["fit_rms"] = r.fit_rms;
  s["posterior"] = r.posterior;
  s["n_samples"] = r.samples.rows();
  json ess = json::object();
  for (std::size_t j = 0; j < r.chain_names.size() && static_cast<Eigen::Index>(j) < r.ess.size(); ++j)
    ess[r.chain_names[j]] = r.ess[static_cast<Eigen::Index>(j)];
  s["ess"] = ess;
  s["min_ess_lambda"] = r.min_ess_lambda;
  s["min_ess_weights"] = r.min_ess_weights;
  s["min_ess"] = r.ess.size() ? r.ess.minCoeff() : 0.0;
  if (r.chain) {
    s["acceptance"] = r.chain->acceptance;
    s["n_walkers"] = r.chain->n_walkers;
    s["sampler_seed"] = r.chain->seed;
  }
  s["overflow_count"] = r.overflows;
  s["lis_rank"] = r.lis ? json(r.lis->basis.r) : json(nullptr);
  if (r.field_error_plain) {
    s["field_error_plain"] = *r.field_error_plain;
    s["field_error_gp"] = *r.field_error_gp;
    s["source_error_relative"] = *r.source_error;
  }
  s["runtime_seconds"] = r.runtime_seconds;
  write_text(dir / "summary.json", s.dump(2) + "\n");

  if (r.lis) {
    write_lis_bundle(dir / "lis", r.lis->basis);
    const LisBasis& b = r.lis->basis;
    json rep{{"rank", b.r},
             {"cutoff", b.cutoff},
             {"dim", b.dim()},
             {"hessians", r.lis->hessians},
             {"converged", r.lis->converged},
             {"distances", r.lis->distances},
             {"eigenvalues", to_json(b.eigenvalues.head(std::min<Eigen::Index>(b.eigenvalues.size(), 64)))}};
    write_text(dir / "rank_report.json", rep.dump(2) + "\n");
  }
}

RunResult run_config(const ExperimentConfig& c, const fs::path& dir) {
  const Problem p = build_problem(c);
  const RunResult r = run_inference(p);
  write_run(p, r, dir);
  return r;
}

}  // namespace embgp::cli
