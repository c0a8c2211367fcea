#include "embgp_cli/commands.hpp"

#include <cmath>
#include <functional>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "embgp/io.hpp"
#include "embgp_cli/runner.hpp"

namespace embgp::cli {

using nlohmann::json;

namespace {

json read_summary(const fs::path& dir) {
  const fs::path f = dir / "summary.json";
  if (!fs::exists(f)) fail(ErrorCode::ComparisonError, dir.string() + ": not a completed run (no summary.json)");
  try {
    return json::parse(read_text(f));
  } catch (const json::exception&) {
    fail(ErrorCode::ComparisonError, f.string() + ": unreadable summary");
  }
}

std::string num(double v) { return std::isfinite(v) ? format_double(v) : "nan"; }

fs::path output_for(const ExperimentConfig& c, const fs::path& output) {
  if (!output.empty()) return output;
  if (c.output_dir.is_relative() && !c.source_path.empty() && c.source_path.has_parent_path())
    return fs::current_path() / c.output_dir;
  return c.output_dir;
}

// Runs body and converts any failure into an error JSON line (and error.json
// in dir when known).
int guarded(std::ostream& err, const std::function<void(fs::path&)>& body) {
  fs::path dir;
  auto report = [&](ErrorCode code, const std::string& msg) {
    const std::string j = error_json(code, msg);
    err << j << "\n";
    if (!dir.empty()) {
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (!ec) {
        try {
          write_text(dir / "error.json", j + "\n");
        } catch (...) {
        }
      }
    }
    return exit_code(code);
  };
  try {
    body(dir);
    return 0;
  } catch (const Error& e) {
    return report(e.code(), e.what());
  } catch (const fs::filesystem_error& e) {
    return report(ErrorCode::IoError, e.what());
  } catch (const std::exception& e) {
    return report(ErrorCode::EvaluationFailure, e.what());
  }
}

}  // namespace

int exit_code(ErrorCode code) { return code == ErrorCode::ConfigError ? 2 : 1; }

std::string error_json(ErrorCode code, const std::string& message) {
  return json{{"error", std::string(to_string(code))}, {"message", message}}.dump();
}

std::vector<CompareRow> compare_runs(const std::vector<fs::path>& dirs) {
  if (dirs.size() < 2) fail(ErrorCode::ComparisonError, "compare needs at least two run directories");
  std::vector<CompareRow> rows;
  json first;
  for (const fs::path& d : dirs) {
    const json s = read_summary(d);
    if (rows.empty()) {
      first = s;
    } else if (s.value("experiment", "") != first.value("experiment", "")) {
      fail(ErrorCode::ComparisonError, d.string() + ": experiment " + s.value("experiment", "?") + " differs from " +
                                           first.value("experiment", "?"));
    } else if (s.value("dataset_digest", "") != first.value("dataset_digest", "")) {
      fail(ErrorCode::ComparisonError, d.string() + ": dataset differs from " + dirs.front().string());
    }
    CompareRow r;
    r.run = d.filename().empty() ? d.parent_path().filename().string() : d.filename().string();
    r.method = s.value("method", "");
    if (s.contains("alpha") && s["alpha"].is_array()) {
      std::string a;
      for (const auto& v : s["alpha"]) a += (a.empty() ? "" : ";") + num(v.get<double>());
      r.alpha = a;
    }
    for (const auto& v : s.at("abs_err_lambda")) r.abs_err_lambda.push_back(v.get<double>());
    r.fit_rms = s.value("fit_rms", 0.0);
    r.min_ess = s.value("min_ess", 0.0);
    if (s.contains("lis_rank") && s["lis_rank"].is_number()) r.lis_rank = s["lis_rank"].get<int>();
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::ostringstream o;
  const std::size_t p = rows.empty() ? 0 : rows.front().abs_err_lambda.size();
  o << "run,method,alpha";
  for (std::size_t i = 0; i < p; ++i) o << ",abs_err_lambda_" << i;
  o << ",fit_rms,min_ess,lis_rank\n";
  for (const CompareRow& r : rows) {
    o << r.run << "," << r.method << "," << r.alpha;
    for (double e : r.abs_err_lambda) o << "," << num(e);
    o << "," << num(r.fit_rms) << "," << num(r.min_ess) << ",";
    if (r.lis_rank >= 0) o << r.lis_rank;
    o << "\n";
  }
  return o.str();
}

int run_command(const fs::path& config, const fs::path& output, std::ostream& out, std::ostream& err) {
  return guarded(err, [&](fs::path& dir) {
    dir = output;
    const ExperimentConfig c = load_config(config);
    dir = output_for(c, output);
    fs::remove(dir / "error.json");
    const RunResult r = run_config(c, dir);
    out << json{{"status", "ok"},
                {"output_dir", dir.string()},
                {"posterior", r.posterior},
                {"runtime_seconds", r.runtime_seconds}}
               .dump()
        << "\n";
  });
}

int compare_command(const std::vector<fs::path>& dirs, const fs::path& output, std::ostream& out,
                    std::ostream& err) {
  return guarded(err, [&](fs::path&) {
    const std::string csv = compare_csv(compare_runs(dirs));
    if (!output.empty()) write_text(output, csv);
    out << csv;
  });
}

int basis_command(const fs::path& config, const fs::path& output, std::ostream& out, std::ostream& err) {
  return guarded(err, [&](fs::path& dir) {
    ExperimentConfig c = load_config(config);
    dir = output_for(c, output);
    if (c.method == Method::Koh) c.method = Method::PlainEmbedded;  // the kernel's own basis
    c.alpha.reset();
    Problem p = prepare_data(c);
    prepare_posterior(p);
    fs::create_directories(dir);
    export_basis(dir / "basis.csv", *p.basis);
    out << json{{"status", "ok"}, {"basis", (dir / "basis.csv").string()}, {"m", p.basis->size()}}.dump() << "\n";
  });
}

int ls_fit_command(const fs::path& config, const fs::path& output, std::ostream& out, std::ostream& err) {
  return guarded(err, [&](fs::path& dir) {
    const ExperimentConfig c = load_config(config);
    dir = output_for(c, output);
    const Problem p = prepare_data(c);
    fs::create_directories(dir);
    write_dataset_files(p, dir);
    write_lambda_star(p, dir);
    out << read_text(dir / "lambda_star.json");
  });
}

}  // namespace embgp::cli
