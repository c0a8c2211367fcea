#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "embgp/errors.hpp"

namespace embgp::cli {

namespace fs = std::filesystem;

struct CompareRow {
  std::string run;
  std::string method;
  std::string alpha;  // "" when the run has none
  std::vector<double> abs_err_lambda;
  double fit_rms = 0.0;
  double min_ess = 0.0;
  int lis_rank = -1;  // -1 without LIS
};

// ComparisonError for fewer than two runs or runs of different experiments or
// datasets.
std::vector<CompareRow> compare_runs(const std::vector<fs::path>& dirs);
std::string compare_csv(const std::vector<CompareRow>& rows);

// 2 for configuration problems, 1 for any other failure.
int exit_code(ErrorCode code);
std::string error_json(ErrorCode code, const std::string& message);

// Each verb returns the process exit code; diagnostics go to err as JSON.
// An empty output path means the config's output_dir (compare: stdout only).
int run_command(const fs::path& config, const fs::path& output, std::ostream& out, std::ostream& err);
int compare_command(const std::vector<fs::path>& dirs, const fs::path& output, std::ostream& out,
                    std::ostream& err);
int basis_command(const fs::path& config, const fs::path& output, std::ostream& out, std::ostream& err);
int ls_fit_command(const fs::path& config, const fs::path& output, std::ostream& out, std::ostream& err);

}  // namespace embgp::cli
