#include <CLI11.hpp>
#include <iostream>

#include "embgp_cli/commands.hpp"

int main(int argc, char** argv) {
  using embgp::cli::fs::path;
  CLI::App app{"Embedded Gaussian-process model calibration"};
  app.require_subcommand(1);

  path config, output;
  std::vector<path> dirs;

  auto* run = app.add_subcommand("run", "Run an experiment and write every artifact");
  run->add_option("config", config, "Experiment config (JSON)")->required();
  run->add_option("-o,--output", output, "Output directory (default: the config's output_dir)");

  auto* compare = app.add_subcommand("compare", "Tabulate completed runs as CSV");
  compare->add_option("dirs", dirs, "Run directories")->required();
  compare->add_option("-o,--output", output, "Also write the CSV here");

  auto* basis = app.add_subcommand("basis", "Export the eigenbasis only");
  basis->add_option("config", config, "Experiment config (JSON)")->required();
  basis->add_option("-o,--output", output, "Output directory");

  auto* ls = app.add_subcommand("ls-fit", "Least-squares lambda* only");
  ls->add_option("config", config, "Experiment config (JSON)")->required();
  ls->add_option("-o,--output", output, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  namespace cli = embgp::cli;
  if (*run) return cli::run_command(config, output, std::cout, std::cerr);
  if (*compare) return cli::compare_command(dirs, output, std::cout, std::cerr);
  if (*basis) return cli::basis_command(config, output, std::cout, std::cerr);
  return cli::ls_fit_command(config, output, std::cout, std::cerr);
}
