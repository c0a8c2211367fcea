#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "embgp/kernels.hpp"
#include "embgp/mcmc.hpp"

namespace embgp::cli {

namespace fs = std::filesystem;
using Eigen::VectorXd;

enum class Experiment { Linear, SinExp, Adr, Custom };
enum class Method { Koh, PlainEmbedded, Logp, Rogp };

std::string to_string(Experiment e);
std::string to_string(Method m);

struct DatasetConfig {
  std::optional<fs::path> file;  // custom datasets
  int n = 0;
  double lo = 0.0;
  double hi = 0.0;
  double noise_std = 0.0;
  std::uint64_t seed = 1;
};

struct BasisConfig {
  WeightingMeasure measure;
  int m = 0;
  // "analytic" needs a Gaussian measure; "auto" picks analytic for Gaussian
  // measures and Nystrom otherwise.
  std::string source = "auto";
  int order = 0;  // Nystrom quadrature order, 0 for the default
};

struct LisConfig {
  bool enabled = false;
  double cutoff = 0.1;
  int max_hessians = 100;
  int n_cs = 1;
};

enum class SamplerChoice { Auto, Exact, Ensemble, Rwm };

struct SamplerConfig {
  SamplerChoice choice = SamplerChoice::Auto;
  SamplerSettings settings;
  int exact_draws = 20000;
};

struct GridConfig {
  double lo = 0.0;
  double hi = 0.0;
  int points = 121;
};

struct AdrConfig {
  int nx = 200;
  int nt = 200;
  int constraint_stride = 4;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::Linear;
  Method method = Method::Koh;
  std::string embed_site = "additive";
  std::string model;  // custom experiments: "linear" or "sinexp"
  DatasetConfig dataset;
  KernelSpec kernel;
  BasisConfig basis;
  VectorXd prior_mean;
  VectorXd prior_variance;
  std::optional<VectorXd> alpha;
  int constraint_order = 128;
  LisConfig lis;
  SamplerConfig sampler;
  GridConfig grid;
  AdrConfig adr;
  fs::path output_dir;
  std::uint64_t seed = 1;
  fs::path source_path;  // the config file, for resolving relative paths
};

// Parses and validates; every problem raises ConfigError naming the field
// (or the line and column of a JSON syntax error).
ExperimentConfig parse_config(const std::string& text, const fs::path& source = {});
ExperimentConfig load_config(const fs::path& path);

}  // namespace embgp::cli
