// SPDX-License-Identifier: Apache-2.0
#include "tdsl/synthetic.hpp"

#include <string>

#include "tdsl/error.hpp"
#include "tdsl/linalg.hpp"
#include "tdsl/rng.hpp"

namespace tdsl {

namespace {

VectorXd standard_normal(Eigen::Index n, Rng& rng) {
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

}  // namespace

void GPSpec::validate() const {
  require(n >= 2 && d >= 1, ErrorKind::InvalidInput, "GP spec needs n >= 2 and d >= 1");
  require(block_size >= 1 && n % block_size == 0, ErrorKind::InvalidInput, "block size must divide n");
  require(rho >= 0.0 && rho < 1.0, ErrorKind::InvalidInput, "rho must lie in [0, 1)");
  require(obs_noise_sd >= 0.0, ErrorKind::InvalidInput, "observation noise SD must be nonnegative");
  require(true_weights.size() == 0 || true_weights.size() == d, ErrorKind::InvalidInput,
          "true weights must have length d");
}

VectorXd GPSpec::weights() const { return true_weights.size() == 0 ? VectorXd::Ones(d) : true_weights; }

MatrixXd gaussian_design(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  require(n >= 1 && d >= 1, ErrorKind::InvalidInput, "design needs n, d >= 1");
  Rng rng(seed);
  MatrixXd x(n, d);
  // Fill row by row so a prefix of rows does not depend on d's later columns.
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.normal();
  return x;
}

MatrixXd block_covariance(Eigen::Index n, Eigen::Index block_size, double rho) {
  require(block_size >= 1 && n >= 1 && n % block_size == 0, ErrorKind::InvalidInput, "block size must divide n");
  require(rho >= 0.0 && rho < 1.0, ErrorKind::InvalidInput, "rho must lie in [0, 1) (rho = 1 is singular)");
  MatrixXd c = MatrixXd::Zero(n, n);
  for (Eigen::Index b = 0; b < n; b += block_size) {
    c.block(b, b, block_size, block_size).setConstant(rho);
    c.block(b, b, block_size, block_size).diagonal().setOnes();
  }
  return c;
}

VectorXd sample_gp(const GPSpec& spec, const MatrixXd& features, std::uint64_t seed) {
  spec.validate();
  require(features.rows() == spec.n && features.cols() == spec.d, ErrorKind::InvalidInput,
          "features must be n x d for the GP spec");
  const MatrixXd l = linalg::cholesky_lower(block_covariance(spec.n, spec.block_size, spec.rho));
  Rng rng(seed);
  const VectorXd xi = standard_normal(spec.n, rng);
  const VectorXd eta = standard_normal(spec.n, rng);
  return features * spec.weights() + l * xi + spec.obs_noise_sd * eta;
}

NoiseDraw correlated_noise_for(const VectorXd& labels, const MatrixXd& cov, double scale, std::uint64_t seed) {
  require(cov.rows() == labels.size() && cov.cols() == labels.size(), ErrorKind::InvalidInput,
          "noise covariance must match the label count");
  const MatrixXd l = linalg::cholesky_lower(cov);
  Rng rng(seed);
  const VectorXd xi = standard_normal(labels.size(), rng);
  return NoiseDraw{scale * (l * xi), seed};
}

Dataset linear_dataset(Eigen::Index n, Eigen::Index d, double noise_sd, std::uint64_t seed,
                       const VectorXd& true_weights) {
  const VectorXd w = true_weights.size() == 0 ? VectorXd::Ones(d) : true_weights;
  require(w.size() == d, ErrorKind::InvalidInput, "true weights must have length d");
  MatrixXd x = gaussian_design(n, d, seed);
  Rng rng(derive_seed(seed, {0x6e6f697365ULL}));
  VectorXd y = x * w;
  for (Eigen::Index i = 0; i < n; ++i) y(i) += noise_sd * rng.normal();
  return Dataset::scalar(std::move(x), std::move(y));
}

}  // namespace tdsl
