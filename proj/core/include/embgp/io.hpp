#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "embgp/gp.hpp"
#include "embgp/kernels.hpp"
#include "embgp/lis.hpp"
#include "embgp/mcmc.hpp"
#include "embgp/pushforward.hpp"

namespace embgp {

namespace fs = std::filesystem;

std::string format_double(double v);

void write_matrix_csv(const fs::path& path, const std::vector<std::string>& header, const MatrixXd& m);
// Reads a numeric CSV with one header line.
MatrixXd read_matrix_csv(const fs::path& path, std::vector<std::string>* header = nullptr);

// Extra string/number fields for JSON sidecars and headers.  Values are
// written verbatim as JSON if `raw` is set, else as strings.
struct MetaValue {
  std::string text;
  bool raw = false;
};
using Meta = std::map<std::string, MetaValue>;
MetaValue meta_number(double v);
MetaValue meta_string(std::string s);

// CSV (x [,t], y) plus <name>.json sidecar with sigma_d, N and the meta fields.
void write_dataset(const fs::path& csv, const Dataset& data, const Meta& meta);
Dataset read_dataset(const fs::path& csv);

// Basis table: node, weight, phi_0..phi_{m-1}; eigenvalues and the kernel and
// measure description in a JSON header next to it (<name>.json).
void export_basis(const fs::path& csv, const EigenBasis& basis, const Meta& tags = {});
// Rebuilds a basis.  Nystrom bases need the covariance they were built from;
// without one the plain SQE kernel in the header is used.
EigenBasis import_basis(const fs::path& csv, std::shared_ptr<const CovarianceFunction> kernel = nullptr);

void write_lis_bundle(const fs::path& dir, const LisBasis& lis);
LisBasis read_lis_bundle(const fs::path& dir);

void write_chain_csv(const fs::path& path, const ChainSet& chain, const std::vector<std::string>& names);

// One file per column of the band table: <stem>_<law>.csv with inputs, mean, std.
void write_bands(const fs::path& dir, const std::string& stem, const BandTable& bands,
                 const std::vector<std::string>& input_names);

// 64-bin histograms over the sample range of each column.
void write_histograms(const fs::path& path, const MatrixXd& samples, const std::vector<std::string>& names,
                      int bins = 64);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

}  // namespace embgp
