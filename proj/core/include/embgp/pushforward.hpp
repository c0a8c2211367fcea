#pragma once

#include <Eigen/Dense>
#include <array>
#include <string_view>

#include "embgp/calibrate.hpp"
#include "embgp/forward.hpp"
#include "embgp/linalg.hpp"

namespace embgp {

// Per grid point mean/std of: plain model (PFP-f), embedded model (PFP-g),
// the GP term alone (PFP-GP) and PFP-g plus observation noise (PP).
struct BandTable {
  static constexpr std::array<std::string_view, 4> kNames{"PFP-f", "PFP-g", "PFP-GP", "PP"};
  enum Column { PfpF = 0, PfpG = 1, PfpGp = 2, Pp = 3 };

  MatrixXd grid;  // G x D input coordinates
  MatrixXd mean;  // G x 4
  MatrixXd std;   // G x 4
  long used = 0;
  long skipped = 0;
};

// grid_map evaluates the model at the grid; gp_design holds phi at the grid
// (G x m).  Samples where the model fails are skipped and counted.
BandTable pushforward_bands(const MatrixXd& samples, const ForwardMap& grid_map, const MatrixXd& gp_design,
                            const MatrixXd& grid, double noise_std);

// Exact bands for a Gaussian law over theta pushed through an affine map.
BandTable gaussian_bands(const GaussianDensity& theta_law, const ForwardMap& grid_map, const MatrixXd& gp_design,
                         const MatrixXd& grid, double noise_std);

// KOH: lambda samples through the plain model plus the FS bias mixture.
BandTable koh_bands(const MatrixXd& lambda_samples, const ForwardMap& plain_grid_map, const GaussianMixture& bias,
                    const MatrixXd& grid, double noise_std);

}  // namespace embgp
