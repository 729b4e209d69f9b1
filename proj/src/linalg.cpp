// SPDX-License-Identifier: Apache-2.0
#include "tdsl/linalg.hpp"

#include <cmath>
#include <string>

#include "tdsl/error.hpp"

namespace tdsl::linalg {

namespace {

Eigen::JacobiSVD<MatrixXd> thin_svd(const MatrixXd& a, double rel_cutoff) {
  require(a.allFinite(), ErrorKind::InvalidInput, "matrix has non-finite entries");
  Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(rel_cutoff);
  return svd;
}

}  // namespace

VectorXd pinv_solve(const MatrixXd& a, const VectorXd& b, double rel_cutoff) {
  require(a.rows() == b.size(), ErrorKind::InvalidInput, "pinv_solve: dimension mismatch");
  require(b.allFinite(), ErrorKind::InvalidInput, "right-hand side has non-finite entries");
  const auto svd = thin_svd(a, rel_cutoff);
  const VectorXd& s = svd.singularValues();
  VectorXd coeff = svd.matrixU().transpose() * b;
  const double cutoff = s.size() > 0 ? rel_cutoff * s(0) : 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) coeff(i) = s(i) > cutoff ? coeff(i) / s(i) : 0.0;
  return svd.matrixV() * coeff;
}

MatrixXd pinv(const MatrixXd& a, double rel_cutoff) {
  const auto svd = thin_svd(a, rel_cutoff);
  const VectorXd& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? rel_cutoff * s(0) : 0.0;
  VectorXd inv_s(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) inv_s(i) = s(i) > cutoff ? 1.0 / s(i) : 0.0;
  return svd.matrixV() * inv_s.asDiagonal() * svd.matrixU().transpose();
}

MatrixXd cholesky_lower(const MatrixXd& c) {
  require(c.rows() == c.cols(), ErrorKind::InvalidInput, "covariance must be square");
  require(c.allFinite(), ErrorKind::InvalidInput, "covariance has non-finite entries");
  const MatrixXd sym = 0.5 * (c + c.transpose());
  Eigen::LLT<MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  const double scale = std::max(1.0, sym.diagonal().cwiseAbs().mean());
  MatrixXd jittered = sym;
  jittered.diagonal().array() += 1e-12 * scale;
  llt.compute(jittered);
  if (llt.info() != Eigen::Success)
    fail(ErrorKind::Decomposition, "covariance is not positive definite (Cholesky failed after jitter)");
  return llt.matrixL();
}

MatrixXd checked_inverse(const MatrixXd& a, const char* what, double rcond_floor) {
  require(a.rows() == a.cols(), ErrorKind::InvalidInput, std::string(what) + " must be square");
  Eigen::PartialPivLU<MatrixXd> lu(a);
  const double rc = lu.rcond();
  if (!(rc > rcond_floor))
    fail(ErrorKind::Decomposition, std::string(what) + " is singular (rcond " + std::to_string(rc) + ")");
  return lu.inverse();
}

VectorXd symmetric_eigenvalues(const MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
  require(es.info() == Eigen::Success, ErrorKind::Decomposition, "eigenvalue solver failed");
  return es.eigenvalues();
}

double rmse(const VectorXd& prediction, const VectorXd& target) {
  require(prediction.size() == target.size() && target.size() > 0, ErrorKind::InvalidInput,
          "rmse: size mismatch");
  return std::sqrt((prediction - target).squaredNorm() / static_cast<double>(target.size()));
}

}  // namespace tdsl::linalg
