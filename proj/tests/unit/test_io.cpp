#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>

#include "doctest.h"
#include "embgp/calibrate.hpp"
#include "embgp/errors.hpp"
#include "embgp/io.hpp"

using namespace embgp;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "embgp_io_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("number formatting round-trips doubles") {
  for (double v : {0.1, -3.0e-300, 1.0 / 3.0, 6.02214076e23, 0.0}) CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("matrix CSV round trip") {
  const auto dir = scratch("csv");
  MatrixXd m(3, 2);
  m << 1.0 / 3.0, -2.5e-12, 7.0, 1e300, -0.0, 4.25;
  write_matrix_csv(dir / "m.csv", {"a", "b"}, m);
  std::vector<std::string> header;
  const MatrixXd back = read_matrix_csv(dir / "m.csv", &header);
  CHECK(back == m);
  CHECK(header == std::vector<std::string>{"a", "b"});
  CHECK_THROWS_AS(read_matrix_csv(dir / "missing.csv"), Error);
}

TEST_CASE("dataset round trip") {
  const auto dir = scratch("data");
  const auto d = generate_data(linear_pair().truth, uniform_inputs(12, -1.0, 1.0, 1), 0.2, 2);
  write_dataset(dir / "data.csv", d, {{"truth", meta_string("linear")}, {"seed", meta_number(2)}});
  const auto back = read_dataset(dir / "data.csv");
  CHECK(back.inputs == d.inputs);
  CHECK(back.outputs == d.outputs);
  CHECK(back.noise_std == d.noise_std);
  CHECK(fs::exists(dir / "data.json"));
}

TEST_CASE("basis export and import") {
  const auto dir = scratch("basis");
  const auto nys = nystrom_basis(KernelSpec{1.0, 0.3}, WeightingMeasure::uniform(-2.0, 2.0), 12);
  export_basis(dir / "nys.csv", nys);
  const auto back = import_basis(dir / "nys.csv");
  CHECK(back.size() == 12);
  CHECK(back.eigenvalues() == nys.eigenvalues());
  for (double x : {-1.7, 0.0, 0.33, 2.5}) CHECK((back.evaluate(x) - nys.evaluate(x)).cwiseAbs().maxCoeff() < 1e-12);

  const auto ana = analytic_sqe_basis({1.0, 1.0}, WeightingMeasure::gaussian(0.0, 2.0), 9);
  export_basis(dir / "ana.csv", ana);
  const auto back2 = import_basis(dir / "ana.csv");
  CHECK(back2.source() == BasisSource::Analytic);
  CHECK((back2.evaluate(0.7) - ana.evaluate(0.7)).norm() < 1e-14);
}

TEST_CASE("LIS bundle round trip") {
  const auto dir = scratch("lis");
  MatrixXd l = MatrixXd::Identity(4, 4);
  l(2, 0) = 0.3;
  MatrixXd s = MatrixXd::Zero(4, 4);
  s.diagonal() << 3.0, 0.5, 0.05, 0.01;
  const auto lis = lis_from_ppgnh(s, l, VectorXd::LinSpaced(4, 0.0, 1.0), 0.1);
  write_lis_bundle(dir, lis);
  const auto back = read_lis_bundle(dir);
  CHECK(back.r == 2);
  CHECK(back.cutoff == 0.1);
  CHECK((back.projector() - lis.projector()).norm() < 1e-15);
  CHECK(back.prior_hash() == lis.prior_hash());
  CHECK(back.eigenvalues == lis.eigenvalues);
}

TEST_CASE("chain, band and histogram tables") {
  const auto dir = scratch("tables");
  ChainSet c;
  c.n_walkers = 2;
  c.dim = 2;
  c.n_stored = 3;
  c.draws = MatrixXd::Random(6, 2);
  c.log_density = VectorXd::Random(6);
  write_chain_csv(dir / "chain.csv", c, {"l0", "l1"});
  std::vector<std::string> header;
  const MatrixXd back = read_matrix_csv(dir / "chain.csv", &header);
  CHECK(header == std::vector<std::string>{"step", "walker", "l0", "l1", "logpost"});
  CHECK(back.rows() == 6);
  CHECK(back(5, 0) == 2.0);
  CHECK(back(5, 1) == 1.0);
  CHECK(back.col(4) == c.log_density);

  BandTable t;
  t.grid = VectorXd::LinSpaced(4, 0.0, 1.0);
  t.mean = MatrixXd::Random(4, 4);
  t.std = MatrixXd::Random(4, 4).cwiseAbs();
  write_bands(dir, "run", t, {"x"});
  for (auto name : BandTable::kNames) CHECK(fs::exists(dir / ("run_" + std::string(name) + ".csv")));
  const MatrixXd pp = read_matrix_csv(dir / "run_PP.csv");
  CHECK(pp.col(1) == t.mean.col(BandTable::Pp));

  MatrixXd samples(100, 1);
  for (int i = 0; i < 100; ++i) samples(i, 0) = i;
  write_histograms(dir / "hist.csv", samples, {"a"});
  // parameter,bin,lo,hi,count
  std::ifstream in(dir / "hist.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "parameter,bin,lo,hi,count");
  int rows = 0;
  double total = 0.0;
  while (std::getline(in, line)) {
    ++rows;
    total += std::stod(line.substr(line.rfind(',') + 1));
  }
  CHECK(rows == 64);
  CHECK(total == 100.0);
}
