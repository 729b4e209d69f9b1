// SPDX-License-Identifier: Apache-2.0
#include "tdsl/mrp.hpp"

#include <cmath>
#include <string>

#include "tdsl/error.hpp"

namespace tdsl {

namespace {

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

// Divides every row by its sum; a row with nothing to normalize is fatal.
MatrixXd row_normalize(MatrixXd m, std::string_view what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double s = m.row(i).sum();
    if (!(s > 0.0) || !std::isfinite(s)) {
      fail(ErrorKind::Construction,
           std::string(what) + ": row " + std::to_string(i) + " has no positive mass after construction");
    }
    m.row(i) /= s;
  }
  return m;
}

}  // namespace

// ---------------------------------------------------------------- Dataset

Dataset::Dataset(MatrixXd features, MatrixXd labels)
    : features_(std::move(features)), labels_(std::move(labels)) {
  require(features_.rows() >= 2, ErrorKind::InvalidInput, "dataset needs at least two points");
  require(features_.cols() >= 1, ErrorKind::InvalidInput, "dataset needs at least one feature");
  require(labels_.rows() == features_.rows(), ErrorKind::InvalidInput,
          "labels and features disagree on the number of points");
  for (Eigen::Index i = 0; i < features_.rows(); ++i) {
    if (!features_.row(i).allFinite())
      fail(ErrorKind::InvalidInput, "feature row " + std::to_string(i) + " has a non-finite entry");
  }
  require(all_finite(labels_), ErrorKind::InvalidInput, "labels must be finite");
  if (labels_.cols() > 1) {
    for (Eigen::Index i = 0; i < labels_.rows(); ++i) {
      if ((labels_.row(i).array() < 0.0).any() || std::abs(labels_.row(i).sum() - 1.0) > 1e-9)
        fail(ErrorKind::InvalidInput,
             "multiclass label row " + std::to_string(i) + " is not a probability vector");
    }
  }
}

Dataset Dataset::scalar(MatrixXd features, VectorXd labels) {
  return Dataset(std::move(features), MatrixXd(std::move(labels)));
}

Dataset Dataset::multiclass(MatrixXd features, MatrixXd label_rows) {
  require(label_rows.cols() >= 2, ErrorKind::InvalidInput, "multiclass labels need at least two columns");
  return Dataset(std::move(features), std::move(label_rows));
}

Dataset Dataset::one_hot(MatrixXd features, const std::vector<int>& classes, int num_classes) {
  require(num_classes >= 2, ErrorKind::InvalidInput, "one-hot encoding needs at least two classes");
  MatrixXd y = MatrixXd::Zero(static_cast<Eigen::Index>(classes.size()), num_classes);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    require(classes[i] >= 0 && classes[i] < num_classes, ErrorKind::InvalidInput,
            "class index out of range at row " + std::to_string(i));
    y(static_cast<Eigen::Index>(i), classes[i]) = 1.0;
  }
  return multiclass(std::move(features), std::move(y));
}

VectorXd Dataset::y() const {
  require(has_scalar_labels(), ErrorKind::InvalidInput, "operation requires scalar labels");
  return labels_.col(0);
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& idx) const {
  MatrixXd x(static_cast<Eigen::Index>(idx.size()), d());
  MatrixXd y(static_cast<Eigen::Index>(idx.size()), label_dim());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    require(idx[r] >= 0 && idx[r] < n(), ErrorKind::InvalidInput, "subset index out of range");
    x.row(static_cast<Eigen::Index>(r)) = features_.row(idx[r]);
    y.row(static_cast<Eigen::Index>(r)) = labels_.row(idx[r]);
  }
  return Dataset(std::move(x), std::move(y));
}

// ------------------------------------------------------ TransitionMatrix

TransitionMatrix TransitionMatrix::from_probs(MatrixXd probs) {
  require(probs.rows() == probs.cols(), ErrorKind::InvalidInput, "transition matrix must be square");
  require(probs.rows() >= 2, ErrorKind::InvalidInput, "transition matrix needs n >= 2");
  require(probs.allFinite(), ErrorKind::InvalidInput, "transition matrix has non-finite entries");
  require((probs.array() >= 0.0).all(), ErrorKind::InvalidInput, "transition matrix has negative entries");
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const double s = probs.row(i).sum();
    if (std::abs(s - 1.0) > kRowTolerance)
      fail(ErrorKind::InvalidInput, "transition row " + std::to_string(i) + " sums to " + std::to_string(s));
  }
  return TransitionMatrix(std::move(probs));
}

StationaryDistribution StationaryDistribution::from_weights(VectorXd weights) {
  require(weights.size() >= 1, ErrorKind::InvalidInput, "empty distribution");
  require(weights.allFinite() && (weights.array() >= 0.0).all(), ErrorKind::InvalidInput,
          "distribution weights must be finite and nonnegative");
  require(std::abs(weights.sum() - 1.0) <= 1e-9, ErrorKind::InvalidInput, "distribution must sum to one");
  return StationaryDistribution(std::move(weights));
}

StationaryDistribution StationaryDistribution::uniform(Eigen::Index n) {
  return StationaryDistribution(VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

// --------------------------------------------------------------- builders

std::string_view to_string(TransitionTag tag) noexcept {
  switch (tag) {
    case TransitionTag::Uniform: return "uniform";
    case TransitionTag::Random: return "random";
    case TransitionTag::Deficient: return "deficient";
    case TransitionTag::DistanceClose: return "close";
    case TransitionTag::DistanceFar: return "far";
    case TransitionTag::CovInterp: return "cov-interp";
  }
  return "?";
}

TransitionTag parse_transition_tag(std::string_view name) {
  for (auto tag : {TransitionTag::Uniform, TransitionTag::Random, TransitionTag::Deficient,
                   TransitionTag::DistanceClose, TransitionTag::DistanceFar, TransitionTag::CovInterp}) {
    if (name == to_string(tag)) return tag;
  }
  fail(ErrorKind::InvalidInput, "unknown transition kind '" + std::string(name) + "'");
}

namespace {

MatrixXd uniform_random(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rng.uniform();
  return m;
}

// Squared label distance scaled by v = Var(y)/n. A zero distance maps to
// zero even when v is zero (constant labels).
MatrixXd scaled_label_distance(const VectorXd& y) {
  const auto n = y.size();
  const double mean = y.mean();
  const double var = (y.array() - mean).square().mean();
  const double v = var / static_cast<double>(n);
  MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double diff = y(i) - y(j);
      out(i, j) = diff == 0.0 ? 0.0 : diff * diff / v;
    }
  }
  return out;
}

}  // namespace

TransitionMatrix build_transition(const Dataset& dataset, const TransitionKind& kind, std::uint64_t seed) {
  const Eigen::Index n = dataset.n();
  require(n >= 2, ErrorKind::InvalidInput, "transition matrix needs n >= 2");

  switch (kind.tag) {
    case TransitionTag::Uniform:
      return TransitionMatrix::from_probs(MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n)));

    case TransitionTag::Random:
      return TransitionMatrix::from_probs(row_normalize(uniform_random(n, seed), "random"));

    case TransitionTag::Deficient: {
      MatrixXd m = uniform_random(n, seed);
      m.col(n - 1).setZero();
      return TransitionMatrix::from_probs(row_normalize(std::move(m), "deficient"));
    }

    case TransitionTag::DistanceClose: {
      const MatrixXd dist = scaled_label_distance(dataset.y());
      MatrixXd m = (-dist.array()).exp().matrix();
      m.array() += 0.1;
      return TransitionMatrix::from_probs(row_normalize(std::move(m), "close"));
    }

    case TransitionTag::DistanceFar: {
      const MatrixXd dist = scaled_label_distance(dataset.y());
      MatrixXd m = (1.0 - (-dist.array()).exp()).matrix();
      return TransitionMatrix::from_probs(row_normalize(std::move(m), "far"));
    }

    case TransitionTag::CovInterp: {
      require(kind.covariance.has_value(), ErrorKind::InvalidInput, "cov-interp needs a covariance matrix");
      const MatrixXd& c = *kind.covariance;
      require(c.rows() == n && c.cols() == n, ErrorKind::InvalidInput,
              "cov-interp covariance must be n x n with n = " + std::to_string(n));
      require(kind.eta >= 0.0 && kind.eta <= 1.0, ErrorKind::InvalidInput, "eta must lie in [0, 1]");
      require(c.allFinite() && (c.array() >= 0.0).all() && (c.array() <= 1.0).all(), ErrorKind::InvalidInput,
              "cov-interp covariance entries must lie in [0, 1]");
      MatrixXd m = ((1.0 - kind.eta) * (1.0 - c.array()) + kind.eta * c.array()).max(0.0).matrix();
      return TransitionMatrix::from_probs(row_normalize(std::move(m), "cov-interp"));
    }
  }
  fail(ErrorKind::InvalidInput, "unhandled transition kind");
}

TransitionMatrix dsm_project(const MatrixXd& m, int max_iters, double tol) {
  require(m.rows() == m.cols() && m.rows() >= 2, ErrorKind::InvalidInput, "dsm_project needs a square matrix");
  require(m.allFinite() && (m.array() >= 0.0).all(), ErrorKind::InvalidInput,
          "dsm_project needs a nonnegative matrix");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    require(m.row(i).sum() > 0.0, ErrorKind::InvalidInput, "dsm_project: row " + std::to_string(i) + " is zero");
    require(m.col(i).sum() > 0.0, ErrorKind::InvalidInput,
            "dsm_project: column " + std::to_string(i) + " is zero");
  }

  MatrixXd p = m;
  double residual = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    p.array().colwise() /= p.rowwise().sum().array();
    p.array().rowwise() /= p.colwise().sum().array();
    // Columns are exact after the second half-step; rows carry the error.
    residual = (p.rowwise().sum().array() - 1.0).abs().maxCoeff();
    if (residual <= tol) {
      // Land on an exactly row-stochastic matrix; columns stay within tol.
      p.array().colwise() /= p.rowwise().sum().array();
      return TransitionMatrix::from_probs(std::move(p));
    }
  }
  throw NonConvergenceError("dsm_project did not converge in " + std::to_string(max_iters) +
                                " iterations (residual " + std::to_string(residual) + ")",
                            residual);
}

StationaryDistribution stationary_distribution(const TransitionMatrix& p, double tol, int max_iters) {
  const Eigen::Index n = p.n();
  Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(n, 1.0 / static_cast<double>(n));
  double residual = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::RowVectorXd next = pi * p.probs();
    residual = (next - pi).lpNorm<1>();
    pi = next / next.sum();
    if (residual <= tol) return StationaryDistribution::from_weights(pi.transpose());
  }
  throw NonConvergenceError("stationary distribution did not converge in " + std::to_string(max_iters) +
                                " iterations (residual " + std::to_string(residual) + ")",
                            residual);
}

VectorXd reward_vector(const VectorXd& logits, const TransitionMatrix& p, double gamma) {
  require(gamma >= 0.0 && gamma < 1.0, ErrorKind::InvalidInput, "gamma must lie in [0, 1)");
  require(logits.size() == p.n(), ErrorKind::InvalidInput, "logits and transition matrix sizes differ");
  return logits - gamma * (p.probs() * logits);
}

Eigen::Index sample_discrete(const VectorXd& weights, Rng& rng) {
  const double total = weights.sum();
  const double u = rng.uniform() * total;
  double acc = 0.0;
  Eigen::Index last_positive = 0;
  for (Eigen::Index j = 0; j < weights.size(); ++j) {
    if (weights(j) <= 0.0) continue;
    acc += weights(j);
    last_positive = j;
    if (u < acc) return j;
  }
  return last_positive;
}

Eigen::Index sample_transition(const TransitionMatrix& p, Eigen::Index current, Rng& rng) {
  require(current >= 0 && current < p.n(), ErrorKind::InvalidInput, "state index out of range");
  const double u = rng.uniform();
  double acc = 0.0;
  Eigen::Index last_positive = 0;
  for (Eigen::Index j = 0; j < p.n(); ++j) {
    const double pij = p(current, j);
    if (pij <= 0.0) continue;
    acc += pij;
    last_positive = j;
    if (u < acc) return j;
  }
  return last_positive;
}

TransitionSampler::TransitionSampler(const TransitionMatrix& p) : n_(p.n()) {
  cumulative_.resize(static_cast<std::size_t>(n_ * n_));
  for (Eigen::Index i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n_; ++j) {
      const double pij = p(i, j);
      // Zero-probability cells repeat the previous bound and are never chosen.
      if (pij > 0.0) acc += pij;
      cumulative_[static_cast<std::size_t>(i * n_ + j)] = pij > 0.0 ? acc : -1.0;
    }
  }
}

Eigen::Index TransitionSampler::next(Eigen::Index current, Rng& rng) const {
  require(current >= 0 && current < n_, ErrorKind::InvalidInput, "state index out of range");
  const double u = rng.uniform();
  const double* row = cumulative_.data() + current * n_;
  Eigen::Index last_positive = 0;
  for (Eigen::Index j = 0; j < n_; ++j) {
    if (row[j] < 0.0) continue;
    last_positive = j;
    if (u < row[j]) return j;
  }
  return last_positive;
}

}  // namespace tdsl
