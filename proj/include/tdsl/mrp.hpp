// SPDX-License-Identifier: Apache-2.0
#pragma once

// A supervised dataset viewed as a Markov reward process: data points are
// states, a row-stochastic matrix moves between them, and rewards are logit
// differences that make every label the discounted value of its state.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "tdsl/rng.hpp"

namespace tdsl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Features (n x d) and aligned labels (n x k). k == 1 for scalar targets;
/// multiclass targets are one probability/one-hot row per example.
class Dataset {
 public:
  static Dataset scalar(MatrixXd features, VectorXd labels);
  static Dataset multiclass(MatrixXd features, MatrixXd label_rows);
  static Dataset one_hot(MatrixXd features, const std::vector<int>& classes, int num_classes);

  const MatrixXd& features() const noexcept { return features_; }
  const MatrixXd& labels() const noexcept { return labels_; }
  Eigen::Index n() const noexcept { return features_.rows(); }
  Eigen::Index d() const noexcept { return features_.cols(); }
  Eigen::Index label_dim() const noexcept { return labels_.cols(); }
  bool has_scalar_labels() const noexcept { return labels_.cols() == 1; }

  /// Label column; throws unless labels are scalar.
  VectorXd y() const;

  /// Rows `idx` of this dataset, in order.
  Dataset subset(const std::vector<Eigen::Index>& idx) const;

 private:
  Dataset(MatrixXd features, MatrixXd labels);
  MatrixXd features_;
  MatrixXd labels_;
};

/// Row-stochastic n x n matrix.
class TransitionMatrix {
 public:
  static constexpr double kRowTolerance = 1e-9;

  /// Validates nonnegativity and unit row sums.
  static TransitionMatrix from_probs(MatrixXd probs);

  const MatrixXd& probs() const noexcept { return probs_; }
  Eigen::Index n() const noexcept { return probs_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return probs_(i, j); }

 private:
  explicit TransitionMatrix(MatrixXd probs) : probs_(std::move(probs)) {}
  MatrixXd probs_;
};

/// Nonnegative weights summing to one.
class StationaryDistribution {
 public:
  static StationaryDistribution from_weights(VectorXd weights);
  static StationaryDistribution uniform(Eigen::Index n);

  const VectorXd& weights() const noexcept { return weights_; }
  Eigen::Index n() const noexcept { return weights_.size(); }

 private:
  explicit StationaryDistribution(VectorXd w) : weights_(std::move(w)) {}
  VectorXd weights_;
};

enum class TransitionTag { Uniform, Random, Deficient, DistanceClose, DistanceFar, CovInterp };

std::string_view to_string(TransitionTag tag) noexcept;
TransitionTag parse_transition_tag(std::string_view name);

struct TransitionKind {
  TransitionTag tag = TransitionTag::Uniform;
  double eta = 0.5;                     // CovInterp only
  std::optional<MatrixXd> covariance;  // CovInterp only

  static TransitionKind of(TransitionTag tag) { return TransitionKind{tag, 0.5, std::nullopt}; }
  static TransitionKind cov_interp(MatrixXd cov, double eta) {
    return TransitionKind{TransitionTag::CovInterp, eta, std::move(cov)};
  }
};

/// Builds one of the transition designs over the dataset's points.
///
///   Uniform        every entry 1/n
///   Random         iid U(0,1), row-normalized
///   Deficient      Random with the last column zeroed before normalizing
///   DistanceClose  exp(-(y_i-y_j)^2 / v) + 0.1, v = Var(y)/n, row-normalized
///   DistanceFar    1 - exp(-(y_i-y_j)^2 / v), row-normalized
///   CovInterp      (1-eta)(1-C) + eta*C, negatives clamped, row-normalized
TransitionMatrix build_transition(const Dataset& dataset, const TransitionKind& kind, std::uint64_t seed);

/// Alternating row/column normalization of a nonnegative matrix until both
/// margins are within `tol` of one.
TransitionMatrix dsm_project(const MatrixXd& m, int max_iters = 10000, double tol = 1e-9);

/// Power iteration from the uniform vector until ||pi P - pi||_1 <= tol.
StationaryDistribution stationary_distribution(const TransitionMatrix& p, double tol = 1e-12,
                                               int max_iters = 100000);

/// r = (I - gamma P) z, so that r + gamma P z == z.
VectorXd reward_vector(const VectorXd& logits, const TransitionMatrix& p, double gamma);

/// Draws the next state from row `current` of `p`.
Eigen::Index sample_transition(const TransitionMatrix& p, Eigen::Index current, Rng& rng);

/// Cumulative-row table for repeated sampling from one matrix. Produces the
/// same draws as sample_transition for the same generator state.
class TransitionSampler {
 public:
  explicit TransitionSampler(const TransitionMatrix& p);
  Eigen::Index next(Eigen::Index current, Rng& rng) const;
  Eigen::Index n() const noexcept { return n_; }

 private:
  Eigen::Index n_;
  std::vector<double> cumulative_;  // row-major
};

/// Sample from a discrete distribution given by nonnegative weights.
Eigen::Index sample_discrete(const VectorXd& weights, Rng& rng);

}  // namespace tdsl
