#include "embgp/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "embgp/errors.hpp"

namespace embgp {

using nlohmann::json;

namespace {

fs::path sidecar(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".json");
  return p;
}

json meta_json(const Meta& meta) {
  json j = json::object();
  for (const auto& [k, v] : meta) j[k] = v.raw ? json::parse(v.text) : json(v.text);
  return j;
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::IoError, "malformed JSON in " + path.string() + ": " + e.what());
  }
}

std::vector<double> to_vector(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd from_vector(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

MetaValue meta_number(double v) { return {json(v).dump(), true}; }
MetaValue meta_string(std::string s) { return {std::move(s), false}; }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_matrix_csv(const fs::path& path, const std::vector<std::string>& header, const MatrixXd& m) {
  if (!header.empty() && static_cast<Eigen::Index>(header.size()) != m.cols())
    fail(ErrorCode::DimensionError, "CSV header and matrix width differ for " + path.string());
  std::string text;
  for (std::size_t i = 0; i < header.size(); ++i) text += (i ? "," : "") + header[i];
  text += '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) text += ',';
      text += format_double(m(r, c));
    }
    text += '\n';
  }
  write_text(path, text);
}

MatrixXd read_matrix_csv(const fs::path& path, std::vector<std::string>* header) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::IoError, path.string() + " is empty");
  std::vector<std::string> names;
  {
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) names.push_back(cell);
  }
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc()) {
        std::ostringstream os;
        os << path.string() << ":" << line_no << ": not a number: '" << cell << "'";
        fail(ErrorCode::IoError, os.str());
      }
      row.push_back(v);
    }
    if (row.size() != names.size()) {
      std::ostringstream os;
      os << path.string() << ":" << line_no << ": expected " << names.size() << " columns";
      fail(ErrorCode::IoError, os.str());
    }
    rows.push_back(std::move(row));
  }
  MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < names.size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  if (header) *header = std::move(names);
  return m;
}

void write_dataset(const fs::path& csv, const Dataset& data, const Meta& meta) {
  std::vector<std::string> header = {"x"};
  if (data.input_dim() == 2) header.push_back("t");
  if (data.input_dim() > 2)
    for (Eigen::Index d = 1; d < data.input_dim(); ++d) header.push_back("x" + std::to_string(d));
  header.push_back("y");
  MatrixXd m(data.size(), data.input_dim() + 1);
  m << data.inputs, data.outputs;
  write_matrix_csv(csv, header, m);
  json j = meta_json(meta);
  j["sigma_d"] = data.noise_std;
  j["N"] = data.size();
  write_text(sidecar(csv), j.dump(2) + "\n");
}

Dataset read_dataset(const fs::path& csv) {
  const MatrixXd m = read_matrix_csv(csv);
  const json j = read_json(sidecar(csv));
  if (!j.contains("sigma_d")) fail(ErrorCode::IoError, sidecar(csv).string() + " lacks sigma_d");
  if (m.cols() < 2) fail(ErrorCode::IoError, csv.string() + " needs input and output columns");
  Dataset d{m.leftCols(m.cols() - 1), m.col(m.cols() - 1), j["sigma_d"].get<double>()};
  d.validate();
  return d;
}

void export_basis(const fs::path& csv, const EigenBasis& basis, const Meta& tags) {
  const Eigen::Index m = basis.size();
  QuadratureRule rule = basis.construction_rule()
                            ? *basis.construction_rule()
                            : basis.measure().rule(static_cast<int>(std::min<Eigen::Index>(std::max<Eigen::Index>(2 * m, 64), 512)));
  std::vector<std::string> header = {"node", "weight"};
  for (Eigen::Index i = 0; i < m; ++i) header.push_back("phi_" + std::to_string(i));
  MatrixXd table(rule.size(), m + 2);
  table.col(0) = rule.nodes;
  table.col(1) = rule.weights;
  table.rightCols(m) = basis.evaluate(rule.nodes);
  write_matrix_csv(csv, header, table);

  const KernelSpec k = basis.kernel()->base_spec();
  const WeightingMeasure& mu = basis.measure();
  json j = meta_json(tags);
  j["kernel"] = {{"family", "SquaredExponential"}, {"signal_std", k.signal_std}, {"length_scale", k.length_scale}};
  if (mu.kind == MeasureKind::Gaussian)
    j["measure"] = {{"kind", "gaussian"}, {"mean", mu.first}, {"variance", mu.second}};
  else
    j["measure"] = {{"kind", "uniform"}, {"lo", mu.first}, {"hi", mu.second}};
  j["m"] = m;
  j["source"] = basis.source() == BasisSource::Analytic ? "analytic" : "nystrom";
  j["order"] = rule.order;
  j["eigenvalues"] = to_vector(basis.eigenvalues());
  write_text(sidecar(csv), j.dump(2) + "\n");
}

EigenBasis import_basis(const fs::path& csv, std::shared_ptr<const CovarianceFunction> kernel) {
  const json j = read_json(sidecar(csv));
  try {
    const KernelSpec k{j.at("kernel").at("signal_std").get<double>(), j.at("kernel").at("length_scale").get<double>()};
    const json& mj = j.at("measure");
    const WeightingMeasure mu = mj.at("kind") == "gaussian"
                                    ? WeightingMeasure::gaussian(mj.at("mean"), mj.at("variance"))
                                    : WeightingMeasure::uniform(mj.at("lo"), mj.at("hi"));
    const int m = j.at("m").get<int>();
    if (j.at("source") == "analytic") return analytic_sqe_basis(k, mu, m);
    const MatrixXd table = read_matrix_csv(csv);
    if (table.cols() != m + 2) fail(ErrorCode::IoError, csv.string() + " column count does not match m");
    QuadratureRule rule;
    rule.nodes = table.col(0);
    rule.weights = table.col(1);
    rule.order = j.at("order").get<int>();
    if (!kernel) kernel = std::make_shared<SqExpCovariance>(k);
    return nystrom_basis_from_nodes(kernel, mu, rule, from_vector(j.at("eigenvalues").get<std::vector<double>>()),
                                    table.rightCols(m));
  } catch (const json::exception& e) {
    fail(ErrorCode::IoError, "basis header " + sidecar(csv).string() + " is incomplete: " + e.what());
  }
}

void write_lis_bundle(const fs::path& dir, const LisBasis& lis) {
  fs::create_directories(dir);
  write_matrix_csv(dir / "u_r.csv", {}, lis.u_r);
  write_matrix_csv(dir / "w_r.csv", {}, lis.w_r);
  write_matrix_csv(dir / "u_perp.csv", {}, lis.u_perp);
  write_matrix_csv(dir / "w_perp.csv", {}, lis.w_perp);
  write_matrix_csv(dir / "prior_factor.csv", {}, lis.prior_factor);
  write_matrix_csv(dir / "prior_mean.csv", {}, lis.prior_mean);
  json j;
  j["r"] = lis.r;
  j["dim"] = lis.dim();
  j["cutoff"] = lis.cutoff;
  j["eigenvalues"] = to_vector(lis.eigenvalues);
  j["prior_hash"] = std::to_string(lis.prior_hash());
  write_text(dir / "lis.json", j.dump(2) + "\n");
}

namespace {

// Header-less matrix CSV as written by write_lis_bundle.
MatrixXd read_block(const fs::path& path, Eigen::Index rows) {
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);  // empty header
  std::vector<double> vals;
  Eigen::Index cols = -1;
  Eigen::Index r = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    Eigen::Index c = 0;
    while (std::getline(ls, cell, ',')) {
      double v = 0.0;
      std::from_chars(cell.data(), cell.data() + cell.size(), v);
      vals.push_back(v);
      ++c;
    }
    if (cols < 0) cols = c;
    if (c != cols) fail(ErrorCode::IoError, path.string() + " has ragged rows");
    ++r;
  }
  if (r != rows && !(rows > 0 && r == 0)) fail(ErrorCode::IoError, path.string() + " has the wrong row count");
  if (r == 0) return MatrixXd(rows, 0);
  return Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(vals.data(), r, cols);
}

}  // namespace

LisBasis read_lis_bundle(const fs::path& dir) {
  const json j = read_json(dir / "lis.json");
  LisBasis b;
  const Eigen::Index d = j.at("dim").get<Eigen::Index>();
  b.r = j.at("r").get<int>();
  b.cutoff = j.at("cutoff").get<double>();
  b.eigenvalues = from_vector(j.at("eigenvalues").get<std::vector<double>>());
  b.u_r = read_block(dir / "u_r.csv", d);
  b.w_r = read_block(dir / "w_r.csv", d);
  b.u_perp = read_block(dir / "u_perp.csv", d);
  b.w_perp = read_block(dir / "w_perp.csv", d);
  b.prior_factor = read_block(dir / "prior_factor.csv", d);
  b.prior_mean = read_block(dir / "prior_mean.csv", d).col(0);
  if (std::to_string(b.prior_hash()) != j.at("prior_hash").get<std::string>())
    fail(ErrorCode::IoError, "LIS bundle prior hash does not match its stored prior");
  return b;
}

void write_chain_csv(const fs::path& path, const ChainSet& chain, const std::vector<std::string>& names) {
  std::string text = "step,walker";
  for (const auto& n : names) text += "," + n;
  text += ",logpost\n";
  for (int s = 0; s < chain.n_stored; ++s) {
    for (int k = 0; k < chain.n_walkers; ++k) {
      const Eigen::Index row = static_cast<Eigen::Index>(s) * chain.n_walkers + k;
      text += std::to_string((s + 1) * chain.thin - 1) + "," + std::to_string(k);
      for (int c = 0; c < chain.dim; ++c) text += "," + format_double(chain.draws(row, c));
      text += "," + format_double(chain.log_density[row]) + "\n";
    }
  }
  write_text(path, text);
}

void write_bands(const fs::path& dir, const std::string& stem, const BandTable& bands,
                 const std::vector<std::string>& input_names) {
  for (int c = 0; c < 4; ++c) {
    std::vector<std::string> header = input_names;
    header.push_back("mean");
    header.push_back("std");
    MatrixXd m(bands.grid.rows(), bands.grid.cols() + 2);
    m << bands.grid, bands.mean.col(c), bands.std.col(c);
    write_matrix_csv(dir / (stem + "_" + std::string(BandTable::kNames[static_cast<std::size_t>(c)]) + ".csv"), header,
                     m);
  }
}

void write_histograms(const fs::path& path, const MatrixXd& samples, const std::vector<std::string>& names, int bins) {
  std::string text = "parameter,bin,lo,hi,count\n";
  for (Eigen::Index c = 0; c < samples.cols(); ++c) {
    const double lo = samples.col(c).minCoeff();
    double hi = samples.col(c).maxCoeff();
    if (!(hi > lo)) hi = lo + 1e-12 * (1.0 + std::abs(lo));
    std::vector<long> counts(static_cast<std::size_t>(bins), 0);
    for (Eigen::Index r = 0; r < samples.rows(); ++r) {
      int b = static_cast<int>((samples(r, c) - lo) / (hi - lo) * bins);
      counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))]++;
    }
    const std::string name = c < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(c)]
                                                                          : "theta_" + std::to_string(c);
    for (int b = 0; b < bins; ++b) {
      text += name + "," + std::to_string(b) + "," + format_double(lo + (hi - lo) * b / bins) + "," +
              format_double(lo + (hi - lo) * (b + 1) / bins) + "," + std::to_string(counts[static_cast<std::size_t>(b)]) +
              "\n";
    }
  }
  write_text(path, text);
}

}  // namespace embgp
