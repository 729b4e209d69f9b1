// SPDX-License-Identifier: Apache-2.0
#pragma once

// Closed-form linear estimators: min-norm OLS, the TD fixed point
// w = (X^T S X)^+ X^T S y with S = D (I - gamma P), GLS and feasible GLS,
// plus the sandwich covariance of the TD estimator under correlated noise.

#include <Eigen/Dense>

#include "tdsl/mrp.hpp"

namespace tdsl {

struct TDSolution {
  VectorXd weights;
  MatrixXd a_matrix;  // X^T S X
  VectorXd b_vector;  // X^T S y
  StationaryDistribution stationary;
  double gamma;
};

enum class CovarianceSource { ClosedForm, MonteCarlo };

struct CovarianceEstimate {
  MatrixXd matrix;
  CovarianceSource source;
};

/// X^+ y; the least-squares minimizer of smallest Euclidean norm.
VectorXd ols_min_norm(const Dataset& dataset);

/// S = D (I - gamma P).
MatrixXd td_weighting(const TransitionMatrix& p, const StationaryDistribution& d, double gamma);

TDSolution td_closed_form(const Dataset& dataset, const TransitionMatrix& p, double gamma);

/// Same, with a precomputed stationary distribution.
TDSolution td_closed_form(const Dataset& dataset, const TransitionMatrix& p,
                          const StationaryDistribution& stationary, double gamma);

/// (X^T C^-1 X)^-1 X^T C^-1 y through Cholesky whitening.
VectorXd gls(const Dataset& dataset, const MatrixXd& noise_cov);

struct FglsOptions {
  double ridge = 1e-6;
  int iterations = 1;
  double shrinkage = 0.5;  // weight on the residual outer product
};

/// Feasible GLS: OLS residuals e, then
///   C_hat = shrinkage * e e^T + (1 - shrinkage) * diag(e^2) + lambda I,
///   lambda = ridge * trace/n   (ridge alone when the residuals vanish),
/// followed by GLS with C_hat; repeated `iterations` times.
VectorXd fgls(const Dataset& dataset, const FglsOptions& options = {});
VectorXd fgls(const Dataset& dataset, double ridge, int iterations);

/// A^-1 X^T S C S^T X A^-T.
CovarianceEstimate td_covariance_closed_form(const Dataset& dataset, const TransitionMatrix& p, double gamma,
                                             const MatrixXd& noise_cov);

/// (X^T X)^-1 X^T C X (X^T X)^-1, the OLS covariance under noise covariance C.
CovarianceEstimate ols_covariance_closed_form(const MatrixXd& features, const MatrixXd& noise_cov);

/// ||A w - b||_2 for the system in `sol`.
double check_preconditioned_solution(const Dataset& dataset, const TDSolution& sol, const VectorXd& w);

}  // namespace tdsl
