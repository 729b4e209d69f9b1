// SPDX-License-Identifier: Apache-2.0
#pragma once

// Seeded generators for the synthetic studies: Gaussian designs, block
// (intraclass) covariances, Gaussian-process labels around a linear mean
// and correlated noise draws.

#include <Eigen/Dense>
#include <cstdint>

#include "tdsl/mrp.hpp"

namespace tdsl {

struct GPSpec {
  Eigen::Index n = 200;
  Eigen::Index d = 70;
  Eigen::Index block_size = 10;
  double rho = 0.5;
  double obs_noise_sd = 0.1;
  VectorXd true_weights;  // empty -> all ones of length d

  void validate() const;
  VectorXd weights() const;
};

struct NoiseDraw {
  VectorXd epsilon;
  std::uint64_t seed;
};

/// n x d matrix of iid N(0, 1) entries.
MatrixXd gaussian_design(Eigen::Index n, Eigen::Index d, std::uint64_t seed);

/// Block-diagonal matrix of unit-diagonal blocks with `rho` off the diagonal.
MatrixXd block_covariance(Eigen::Index n, Eigen::Index block_size, double rho);

/// y = X w* + L xi + obs_noise_sd * eta with L L^T = block_covariance.
VectorXd sample_gp(const GPSpec& spec, const MatrixXd& features, std::uint64_t seed);

/// scale * L xi for the Cholesky factor L of `cov`.
NoiseDraw correlated_noise_for(const VectorXd& labels, const MatrixXd& cov, double scale, std::uint64_t seed);

/// Gaussian design with labels X w* + N(0, noise_sd^2); w* all ones by default.
Dataset linear_dataset(Eigen::Index n, Eigen::Index d, double noise_sd, std::uint64_t seed,
                       const VectorXd& true_weights = VectorXd());

}  // namespace tdsl
