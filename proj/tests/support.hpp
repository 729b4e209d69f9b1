// SPDX-License-Identifier: Apache-2.0
#pragma once

// Independent reference computations used as oracles by the tests. They
// avoid the library's own numerical paths (power iteration, SVD cutoffs,
// Cholesky whitening) so agreement is meaningful.

#include <Eigen/Dense>
#include <cstdint>

#include "tdsl/mrp.hpp"
#include "tdsl/rng.hpp"

namespace tdsl::testing {

/// Stationary distribution from the null space of P^T - I.
inline VectorXd stationary_by_nullspace(const MatrixXd& p) {
  const Eigen::Index n = p.rows();
  MatrixXd sys = p.transpose() - MatrixXd::Identity(n, n);
  sys.row(n - 1).setOnes();
  VectorXd rhs = VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  return sys.fullPivLu().solve(rhs);
}

/// TD system solved by dense LU from first principles.
inline VectorXd td_by_lu(const MatrixXd& x, const VectorXd& y, const MatrixXd& p, double gamma) {
  const VectorXd d = stationary_by_nullspace(p);
  const Eigen::Index n = p.rows();
  const MatrixXd s = d.asDiagonal() * (MatrixXd::Identity(n, n) - gamma * p);
  return (x.transpose() * s * x).fullPivLu().solve(x.transpose() * s * y);
}

/// Sample covariance of the columns of `samples` (rows are draws).
inline MatrixXd sample_covariance(const MatrixXd& samples) {
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const MatrixXd centered = samples.rowwise() - mean;
  return centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
}

/// Multivariate normal draws with covariance c (rows are draws).
inline MatrixXd mvn_draws(const MatrixXd& c, int draws, std::uint64_t seed) {
  const MatrixXd l = c.llt().matrixL();
  Rng rng(seed);
  MatrixXd out(draws, c.rows());
  VectorXd xi(c.rows());
  for (int k = 0; k < draws; ++k) {
    for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = rng.normal();
    out.row(k) = (l * xi).transpose();
  }
  return out;
}

/// A reversible instance: uniform P makes S = (I - gamma/n 11^T)/n
/// symmetric. Features carry a common offset so the noise direction 1,
/// which C = S^-1 inflates, is visible to the regression.
struct SymmetricInstance {
  MatrixXd x;
  VectorXd w_star;
  TransitionMatrix p;
  MatrixXd s;
  MatrixXd c;  // S^-1
  double gamma;
};

inline SymmetricInstance symmetric_instance(Eigen::Index n, Eigen::Index d, double gamma, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = 1.0 + rng.normal();
  TransitionMatrix p = TransitionMatrix::from_probs(MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n)));
  const MatrixXd s = (MatrixXd::Identity(n, n) - gamma * p.probs()) / static_cast<double>(n);
  MatrixXd c = s.inverse();
  c = 0.5 * (c + c.transpose());
  return SymmetricInstance{x, VectorXd::LinSpaced(d, 1.0, 2.0), std::move(p), s, c, gamma};
}

}  // namespace tdsl::testing
