#include "embgp_cli/config.hpp"

#include <nlohmann/json.hpp>
#include <sstream>

#include "embgp/errors.hpp"
#include "embgp/io.hpp"

namespace embgp::cli {

using nlohmann::json;

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::Linear: return "linear";
    case Experiment::SinExp: return "sinexp";
    case Experiment::Adr: return "adr";
    case Experiment::Custom: return "custom";
  }
  return "unknown";
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Koh: return "KOH";
    case Method::PlainEmbedded: return "plain-embedded";
    case Method::Logp: return "LOGP";
    case Method::Rogp: return "ROGP";
  }
  return "unknown";
}

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  fail(ErrorCode::ConfigError, field + ": " + what);
}

std::string join(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

// Typed access to one JSON object, remembering its path for diagnostics.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  Node object(const std::string& key) const {
    if (!has(key)) bad(join(path_, key), "required field is missing");
    return Node(j_.at(key), join(path_, key));
  }

  std::optional<Node> optional_object(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return Node(j_.at(key), join(path_, key));
  }

  double number(const std::string& key) const {
    if (!has(key)) bad(join(path_, key), "required field is missing");
    return as_number(key);
  }
  double number(const std::string& key, double fallback) const { return has(key) ? as_number(key) : fallback; }

  double positive(const std::string& key) const {
    const double v = number(key);
    if (!(v > 0.0)) bad(join(path_, key), "must be positive");
    return v;
  }

  int integer(const std::string& key) const {
    if (!has(key)) bad(join(path_, key), "required field is missing");
    return as_integer(key);
  }
  int integer(const std::string& key, int fallback) const { return has(key) ? as_integer(key) : fallback; }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      bad(join(path_, key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) bad(join(path_, key), "expected true or false");
    return j_.at(key).get<bool>();
  }

  std::string string(const std::string& key) const {
    if (!has(key)) bad(join(path_, key), "required field is missing");
    return as_string(key);
  }
  std::string string(const std::string& key, const std::string& fallback) const {
    return has(key) ? as_string(key) : fallback;
  }

  VectorXd vector(const std::string& key) const {
    if (!has(key)) bad(join(path_, key), "required field is missing");
    const json& v = j_.at(key);
    if (!v.is_array()) bad(join(path_, key), "expected an array of numbers");
    VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) bad(join(path_, key) + "[" + std::to_string(i) + "]", "expected a number");
      out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return out;
  }

  const std::string& path() const { return path_; }

 private:
  double as_number(const std::string& key) const {
    const json& v = j_.at(key);
    if (!v.is_number()) bad(join(path_, key), "expected a number");
    return v.get<double>();
  }
  int as_integer(const std::string& key) const {
    const json& v = j_.at(key);
    if (!v.is_number_integer()) bad(join(path_, key), "expected an integer");
    return v.get<int>();
  }
  std::string as_string(const std::string& key) const {
    const json& v = j_.at(key);
    if (!v.is_string()) bad(join(path_, key), "expected a string");
    return v.get<std::string>();
  }

  const json& j_;
  std::string path_;
};

Experiment parse_experiment(const std::string& s) {
  if (s == "linear") return Experiment::Linear;
  if (s == "sinexp") return Experiment::SinExp;
  if (s == "adr") return Experiment::Adr;
  if (s == "custom") return Experiment::Custom;
  bad("experiment", "unknown experiment '" + s + "' (linear, sinexp, adr, custom)");
}

Method parse_method(const std::string& s) {
  if (s == "KOH") return Method::Koh;
  if (s == "plain-embedded") return Method::PlainEmbedded;
  if (s == "LOGP" || s == "OGP") return Method::Logp;
  if (s == "ROGP") return Method::Rogp;
  bad("method", "unknown method '" + s + "' (KOH, plain-embedded, LOGP, ROGP)");
}

WeightingMeasure parse_measure(const Node& n) {
  const std::string kind = n.string("kind");
  if (kind == "uniform") {
    const double lo = n.number("lo"), hi = n.number("hi");
    if (!(hi > lo)) bad(join(n.path(), "hi"), "must exceed lo");
    return WeightingMeasure::uniform(lo, hi);
  }
  if (kind == "gaussian") return WeightingMeasure::gaussian(n.number("mean"), n.positive("variance"));
  bad(join(n.path(), "kind"), "unknown measure '" + kind + "' (uniform, gaussian)");
}

SamplerChoice parse_sampler(const std::string& s, const std::string& field) {
  if (s == "auto") return SamplerChoice::Auto;
  if (s == "exact") return SamplerChoice::Exact;
  if (s == "ensemble") return SamplerChoice::Ensemble;
  if (s == "rwm") return SamplerChoice::Rwm;
  bad(field, "unknown sampler '" + s + "' (auto, exact, ensemble, rwm)");
}

int param_dim(const ExperimentConfig& c) {
  if (c.experiment == Experiment::Adr) return 1;
  return 2;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const fs::path& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // Byte offset to line/column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << "line " << line << ", column " << col << ": invalid JSON";
    fail(ErrorCode::ConfigError, os.str());
  }
  const Node root(j, "");
  ExperimentConfig c;
  c.source_path = source;
  c.experiment = parse_experiment(root.string("experiment"));
  c.method = parse_method(root.string("method"));
  c.seed = root.seed("seed", 1);

  switch (c.experiment) {
    case Experiment::Linear: c.embed_site = root.string("embed_site", "additive"); break;
    case Experiment::SinExp: c.embed_site = root.string("embed_site", "S2"); break;
    case Experiment::Adr: c.embed_site = root.string("embed_site", "source"); break;
    case Experiment::Custom:
      c.model = root.string("model");
      if (c.model != "linear" && c.model != "sinexp") bad("model", "custom experiments use model linear or sinexp");
      c.embed_site = root.string("embed_site", c.model == "linear" ? "additive" : "S2");
      break;
  }
  const bool linear_family = c.experiment == Experiment::Linear || c.model == "linear";
  const bool sinexp_family = c.experiment == Experiment::SinExp || c.model == "sinexp";
  if (linear_family && c.embed_site != "additive") bad("embed_site", "the linear model embeds additively");
  if (sinexp_family && c.embed_site != "S1" && c.embed_site != "S2") bad("embed_site", "expected S1 or S2");
  if (c.experiment == Experiment::Adr && c.embed_site != "source") bad("embed_site", "the ADR model embeds in the source");

  const Node ds = root.object("dataset");
  c.dataset.noise_std = ds.positive("noise_std");
  if (ds.has("file")) {
    c.dataset.file = fs::path(ds.string("file"));
  } else {
    if (c.experiment == Experiment::Custom) bad("dataset.file", "custom experiments need a dataset file");
    c.dataset.n = ds.integer("n");
    if (c.dataset.n < 1) bad("dataset.n", "must be at least 1");
    c.dataset.seed = ds.seed("seed", c.seed);
    if (c.experiment != Experiment::Adr) {
      c.dataset.lo = ds.number("lo");
      c.dataset.hi = ds.number("hi");
      if (!(c.dataset.hi > c.dataset.lo)) bad("dataset.hi", "must exceed dataset.lo");
    }
  }

  const Node k = root.object("kernel");
  c.kernel.signal_std = k.positive("signal_std");
  c.kernel.length_scale = k.positive("length_scale");

  const Node b = root.object("basis");
  c.basis.measure = parse_measure(b.object("measure"));
  c.basis.m = b.integer("m");
  if (c.basis.m < 1) bad("basis.m", "must be at least 1");
  c.basis.source = b.string("source", "auto");
  if (c.basis.source != "auto" && c.basis.source != "analytic" && c.basis.source != "nystrom")
    bad("basis.source", "expected auto, analytic or nystrom");
  if (c.basis.source == "analytic" && c.basis.measure.kind != MeasureKind::Gaussian)
    bad("basis.source", "the analytic basis needs a Gaussian measure");
  c.basis.order = b.integer("order", 0);
  if (c.basis.order < 0) bad("basis.order", "must be non-negative");
  if (c.experiment == Experiment::Adr && c.basis.measure.kind != MeasureKind::Uniform)
    bad("basis.measure", "the ADR source lives on [0, 1]; use a uniform measure");

  const Node p = root.object("prior");
  c.prior_mean = p.vector("mean");
  c.prior_variance = p.vector("variance");
  const int dim = param_dim(c);
  if (c.prior_mean.size() != dim) bad("prior.mean", "expected " + std::to_string(dim) + " entries");
  if (c.prior_variance.size() != dim) bad("prior.variance", "expected " + std::to_string(dim) + " entries");
  if ((c.prior_variance.array() <= 0.0).any()) bad("prior.variance", "entries must be positive");

  if (root.has("alpha")) {
    c.alpha = root.vector("alpha");
    if (c.alpha->size() != dim) bad("alpha", "expected " + std::to_string(dim) + " entries");
    if ((c.alpha->array() < 0.0).any()) bad("alpha", "penalties must be non-negative");
  }
  if (c.method == Method::Rogp && !c.alpha) bad("alpha", "required for ROGP");
  if (c.method != Method::Rogp && c.alpha) bad("alpha", "only ROGP takes penalties");
  c.constraint_order = root.integer("constraint_order", 128);
  if (c.constraint_order < 64) bad("constraint_order", "must be at least 64");

  if (const auto l = root.optional_object("lis")) {
    c.lis.enabled = l->boolean("enabled", false);
    c.lis.cutoff = l->number("cutoff", 0.1);
    c.lis.max_hessians = l->integer("max_hessians", 100);
    c.lis.n_cs = l->integer("n_cs", 1);
    if (c.lis.max_hessians < 1) bad("lis.max_hessians", "must be at least 1");
    if (c.lis.n_cs < 1) bad("lis.n_cs", "must be at least 1");
  }
  if (c.lis.enabled && c.method == Method::Rogp)
    bad("lis.enabled", "LIS is not available with ROGP penalties (the prior is no longer Gaussian)");
  if (c.lis.enabled && c.method == Method::Koh) bad("lis.enabled", "KOH infers lambda only; LIS has nothing to reduce");

  if (c.experiment == Experiment::Adr) {
    if (c.method == Method::Koh) bad("method", "KOH is not available for the ADR experiment");
    if (c.method == Method::Logp) bad("method", "LOGP is not available for the ADR experiment");
    if (const auto a = root.optional_object("adr")) {
      c.adr.nx = a->integer("nx", 200);
      c.adr.nt = a->integer("nt", 200);
      c.adr.constraint_stride = a->integer("constraint_stride", 4);
      if (c.adr.nx < 2) bad("adr.nx", "must be at least 2");
      if (c.adr.nt < 1) bad("adr.nt", "must be at least 1");
      if (c.adr.constraint_stride < 1 || c.adr.nx % c.adr.constraint_stride || c.adr.nt % c.adr.constraint_stride)
        bad("adr.constraint_stride", "must divide nx and nt");
    }
  }

  SamplerSettings& s = c.sampler.settings;
  s.seed = c.seed;
  if (const auto sm = root.optional_object("sampler")) {
    c.sampler.choice = parse_sampler(sm->string("algorithm", "auto"), "sampler.algorithm");
    if (c.sampler.choice == SamplerChoice::Rwm) s.algorithm = SamplerAlgorithm::AdaptiveRwMetropolis;
    s.n_walkers = sm->integer("walkers", 0);
    s.n_steps = sm->integer("steps", s.n_steps);
    s.burn_in = sm->integer("burn_in", s.burn_in);
    s.thin = sm->integer("thin", s.thin);
    s.seed = sm->seed("seed", c.seed);
    s.stretch = sm->number("stretch", s.stretch);
    s.target_acceptance = sm->number("target_acceptance", s.target_acceptance);
    c.sampler.exact_draws = sm->integer("exact_draws", c.sampler.exact_draws);
    if (c.sampler.exact_draws < 2) bad("sampler.exact_draws", "must be at least 2");
    if (s.n_walkers < 0) bad("sampler.walkers", "must be non-negative");
    if (s.n_steps < 1) bad("sampler.steps", "must be positive");
    if (s.burn_in < 0 || s.burn_in >= s.n_steps) bad("sampler.burn_in", "must lie in [0, steps)");
    if (s.thin < 1) bad("sampler.thin", "must be positive");
    if (!(s.stretch > 1.0)) bad("sampler.stretch", "must exceed 1");
    if (!(s.target_acceptance > 0.0 && s.target_acceptance < 1.0)) bad("sampler.target_acceptance", "must lie in (0, 1)");
  }

  if (c.experiment == Experiment::Adr) {
    c.grid = {0.0, 1.0, 101};
  } else if (c.experiment == Experiment::SinExp) {
    c.grid = {-2.0, 2.0, 101};
  } else {
    c.grid = {-3.0, 3.0, 121};
  }
  if (const auto g = root.optional_object("grid")) {
    c.grid.lo = g->number("lo", c.grid.lo);
    c.grid.hi = g->number("hi", c.grid.hi);
    c.grid.points = g->integer("points", c.grid.points);
    if (!(c.grid.hi > c.grid.lo)) bad("grid.hi", "must exceed grid.lo");
    if (c.grid.points < 2) bad("grid.points", "must be at least 2");
  }

  c.output_dir = fs::path(root.string("output_dir", "runs/" + (source.empty() ? std::string("run") : source.stem().string())));
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error& e) {
    fail(ErrorCode::ConfigError, "cannot read config " + path.string() + ": " + e.what());
  }
  return parse_config(text, path);
}

}  // namespace embgp::cli
