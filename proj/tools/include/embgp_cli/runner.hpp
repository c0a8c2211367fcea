#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "embgp/adr.hpp"
#include "embgp/calibrate.hpp"
#include "embgp/lis.hpp"
#include "embgp/pushforward.hpp"
#include "embgp_cli/config.hpp"

namespace embgp::cli {

// Everything fixed before inference: data, lambda*, basis and posterior.
struct Problem {
  ExperimentConfig config;
  Dataset data;
  std::shared_ptr<const EmbeddedModel> model;  // absent for ADR
  std::optional<AdrGrid> grid;
  std::shared_ptr<const ForwardMap> plain_map;
  LsResult ls;
  std::shared_ptr<const CovarianceFunction> covariance;  // base or modified kernel
  std::optional<EigenBasis> basis;                       // absent for KOH
  int m_requested = 0;
  std::shared_ptr<const ForwardMap> map;
  std::optional<PosteriorSpec> spec;

  int param_dim() const { return static_cast<int>(config.prior_mean.size()); }
  std::vector<std::string> parameter_names() const;
  GaussianDensity lambda_prior() const;
};

Dataset make_dataset(const ExperimentConfig& c);
// Data and lambda* only.
Problem prepare_data(const ExperimentConfig& c);
// Adds the basis (clamped to the resolvable rank for Nystrom) and the posterior.
void prepare_posterior(Problem& p);
Problem build_problem(const ExperimentConfig& c);

struct RunResult {
  std::string posterior;  // "exact", "mcmc" or "lis"
  MatrixXd samples;       // theta (lambda only for KOH), one row per draw
  std::optional<ChainSet> chain;
  std::vector<std::string> chain_names;
  VectorXd ess;  // per chain coordinate
  double min_ess_lambda = 0.0;
  double min_ess_weights = 0.0;
  std::optional<AdaptiveLisResult> lis;
  BandTable bands;
  VectorXd lambda_mean;
  VectorXd lambda_std;
  double fit_rms = 0.0;
  std::optional<VectorXd> map_point;
  long overflows = 0;
  // ADR only: max |u - u_truth| over the grid without and with the GP.
  std::optional<double> field_error_plain;
  std::optional<double> field_error_gp;
  std::optional<double> source_error;  // max abs, relative to the true amplitude
  double runtime_seconds = 0.0;
};

RunResult run_inference(const Problem& p);

void write_dataset_files(const Problem& p, const fs::path& dir);
void write_lambda_star(const Problem& p, const fs::path& dir);
void write_run(const Problem& p, const RunResult& r, const fs::path& dir);

// Runs a config end to end and writes every artifact into dir.
RunResult run_config(const ExperimentConfig& c, const fs::path& dir);

}  // namespace embgp::cli
