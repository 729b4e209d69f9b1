// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace tdsl::linalg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Singular values below this fraction of the largest are treated as zero.
inline constexpr double kPinvCutoff = 1e-10;

/// Minimum-norm least-squares solution a^+ b via SVD.
VectorXd pinv_solve(const MatrixXd& a, const VectorXd& b, double rel_cutoff = kPinvCutoff);

MatrixXd pinv(const MatrixXd& a, double rel_cutoff = kPinvCutoff);

/// Lower Cholesky factor; retries once with a 1e-12 (relative) diagonal
/// jitter and throws a Decomposition error if that also fails.
MatrixXd cholesky_lower(const MatrixXd& c);

/// Inverse of a square matrix, rejecting numerically singular input.
MatrixXd checked_inverse(const MatrixXd& a, const char* what, double rcond_floor = 1e-13);

/// Ascending eigenvalues of the symmetric part of `a`.
VectorXd symmetric_eigenvalues(const MatrixXd& a);

double rmse(const VectorXd& prediction, const VectorXd& target);

}  // namespace tdsl::linalg
