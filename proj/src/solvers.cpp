// SPDX-License-Identifier: Apache-2.0
#include "tdsl/solvers.hpp"

#include <string>

#include "tdsl/error.hpp"
#include "tdsl/linalg.hpp"

namespace tdsl {

VectorXd ols_min_norm(const Dataset& dataset) {
  return linalg::pinv_solve(dataset.features(), dataset.y());
}

MatrixXd td_weighting(const TransitionMatrix& p, const StationaryDistribution& d, double gamma) {
  require(gamma >= 0.0 && gamma < 1.0, ErrorKind::InvalidInput, "gamma must lie in [0, 1)");
  require(p.n() == d.n(), ErrorKind::InvalidInput, "transition matrix and distribution sizes differ");
  MatrixXd s = -gamma * p.probs();
  s.diagonal().array() += 1.0;
  return d.weights().asDiagonal() * s;
}

TDSolution td_closed_form(const Dataset& dataset, const TransitionMatrix& p, double gamma) {
  return td_closed_form(dataset, p, stationary_distribution(p), gamma);
}

TDSolution td_closed_form(const Dataset& dataset, const TransitionMatrix& p,
                          const StationaryDistribution& stationary, double gamma) {
  require(p.n() == dataset.n(), ErrorKind::InvalidInput, "transition matrix does not match the dataset");
  const MatrixXd& x = dataset.features();
  const MatrixXd s = td_weighting(p, stationary, gamma);
  MatrixXd a = x.transpose() * (s * x);
  VectorXd b = x.transpose() * (s * dataset.y());
  VectorXd w = linalg::pinv_solve(a, b);
  return TDSolution{std::move(w), std::move(a), std::move(b), stationary, gamma};
}

VectorXd gls(const Dataset& dataset, const MatrixXd& noise_cov) {
  require(noise_cov.rows() == dataset.n() && noise_cov.cols() == dataset.n(), ErrorKind::InvalidInput,
          "noise covariance must be n x n");
  const MatrixXd l = linalg::cholesky_lower(noise_cov);
  const auto tri = l.triangularView<Eigen::Lower>();
  const MatrixXd xw = tri.solve(dataset.features());
  const VectorXd yw = tri.solve(dataset.y());
  return linalg::pinv_solve(xw, yw);
}

VectorXd fgls(const Dataset& dataset, const FglsOptions& options) {
  require(dataset.n() > dataset.d(), ErrorKind::InvalidInput, "FGLS needs more points than features");
  require(options.iterations >= 1, ErrorKind::InvalidInput, "FGLS needs at least one iteration");
  require(options.ridge > 0.0, ErrorKind::InvalidInput, "FGLS ridge must be positive");
  require(options.shrinkage >= 0.0 && options.shrinkage <= 1.0, ErrorKind::InvalidInput,
          "FGLS shrinkage must lie in [0, 1]");

  const MatrixXd& x = dataset.features();
  const VectorXd y = dataset.y();
  const double n = static_cast<double>(dataset.n());
  VectorXd w = ols_min_norm(dataset);
  for (int it = 0; it < options.iterations; ++it) {
    const VectorXd e = y - x * w;
    MatrixXd c = options.shrinkage * (e * e.transpose());
    c.diagonal() += (1.0 - options.shrinkage) * e.array().square().matrix();
    const double tr = c.trace();
    const double lambda = tr > 0.0 ? options.ridge * tr / n : options.ridge;
    c.diagonal().array() += lambda;
    try {
      w = gls(dataset, c);
    } catch (const Error& err) {
      fail(ErrorKind::Decomposition, std::string("FGLS covariance estimate is singular after ridging: ") + err.what());
    }
  }
  return w;
}

VectorXd fgls(const Dataset& dataset, double ridge, int iterations) {
  FglsOptions opts;
  opts.ridge = ridge;
  opts.iterations = iterations;
  return fgls(dataset, opts);
}

CovarianceEstimate td_covariance_closed_form(const Dataset& dataset, const TransitionMatrix& p, double gamma,
                                             const MatrixXd& noise_cov) {
  require(noise_cov.rows() == dataset.n() && noise_cov.cols() == dataset.n(), ErrorKind::InvalidInput,
          "noise covariance must be n x n");
  const StationaryDistribution d = stationary_distribution(p);
  const MatrixXd s = td_weighting(p, d, gamma);
  const MatrixXd& x = dataset.features();
  const MatrixXd a = x.transpose() * s * x;
  const MatrixXd a_inv = linalg::checked_inverse(a, "TD matrix A");
  const MatrixXd m = a_inv * x.transpose() * s;
  MatrixXd cov = m * noise_cov * m.transpose();
  cov = 0.5 * (cov + cov.transpose());
  return {std::move(cov), CovarianceSource::ClosedForm};
}

CovarianceEstimate ols_covariance_closed_form(const MatrixXd& features, const MatrixXd& noise_cov) {
  require(noise_cov.rows() == features.rows() && noise_cov.cols() == features.rows(), ErrorKind::InvalidInput,
          "noise covariance must be n x n");
  const MatrixXd gram_inv = linalg::checked_inverse(features.transpose() * features, "Gram matrix X^T X");
  const MatrixXd m = gram_inv * features.transpose();
  MatrixXd cov = m * noise_cov * m.transpose();
  cov = 0.5 * (cov + cov.transpose());
  return {std::move(cov), CovarianceSource::ClosedForm};
}

double check_preconditioned_solution(const Dataset& dataset, const TDSolution& sol, const VectorXd& w) {
  require(w.size() == dataset.d() && sol.a_matrix.cols() == w.size(), ErrorKind::InvalidInput,
          "weight vector has the wrong length");
  return (sol.a_matrix * w - sol.b_vector).norm();
}

}  // namespace tdsl
