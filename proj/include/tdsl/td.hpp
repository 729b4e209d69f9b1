// SPDX-License-Identifier: Apache-2.0
#pragma once

// Generalized TD learning with linear function approximation.
//
// A transition s -> s' produces the reward r = f^-1(y_s) - gamma f^-1(y_s')
// and the bootstrap target z_td = r + gamma x_s'^T w in logit space; the
// weights move along (f(z_td) - f(x_s^T w)) x_s. Weights are d x k, one
// column per label component (k == 1 for scalar targets).

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "tdsl/link.hpp"
#include "tdsl/mrp.hpp"

namespace tdsl {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();
inline constexpr double kDivergenceNorm = 1e12;

enum class StepSchedule {
  Constant,     // alpha
  InverseSqrt,  // alpha / sqrt(1 + t / horizon)
  InverseTime,  // alpha / (1 + t / horizon)
};

struct TDConfig {
  double gamma = 0.0;
  double step_size = 0.01;
  std::size_t steps = 1000;
  double projection_radius = kUnbounded;
  LinkFunction link{};
  std::uint64_t rng_seed = 0;
  StepSchedule schedule = StepSchedule::Constant;
  double decay_horizon = 1000.0;
  MatrixXd initial_weights;  // empty -> zeros

  double step_at(std::size_t t) const;
  void validate() const;
};

struct TDTrajectory {
  std::vector<std::size_t> checkpoint_steps;
  std::vector<MatrixXd> weight_history;  // w_t at each checkpoint step
  MatrixXd averaged_weights;             // (1/T) sum_{t<T} w_t
  MatrixXd final_weights;                // w_T
  std::vector<std::map<std::string, double>> diagnostics;
};

/// 10 (1 + ||w_OLS||) for scalar labels, 100 otherwise.
double default_projection_radius(const Dataset& dataset);

/// Euclidean (Frobenius) projection onto the origin-centred ball.
MatrixXd project_ball(const MatrixXd& w, double radius);

/// One Algorithm-style update on the transition (x_t, y_t) -> (x_next, y_next).
MatrixXd td_step(const VectorXd& x_t, const Eigen::RowVectorXd& y_t, const VectorXd& x_next,
                 const Eigen::RowVectorXd& y_next, const MatrixXd& w, const TDConfig& cfg);

/// Scalar-label convenience overload.
VectorXd td_step(const VectorXd& x_t, double y_t, const VectorXd& x_next, double y_next, const VectorXd& w,
                 const TDConfig& cfg);

/// The conventional regression SGD update w + alpha (y - x^T w) x.
VectorXd sgd_step(const VectorXd& x, double y, const VectorXd& w, double alpha);

/// Markov-chain sampling loop: start at `start_index`, follow P.
TDTrajectory run_td(const Dataset& dataset, const TransitionMatrix& p, const TDConfig& cfg,
                    Eigen::Index start_index);

/// i.i.d. regime: every step draws s ~ D and s' ~ P(.|s).
TDTrajectory run_td_iid(const Dataset& dataset, const TransitionMatrix& p, const StationaryDistribution& d,
                        const TDConfig& cfg);

/// Exact expectation of the TD update over s ~ D, s' ~ P(.|s).
class ExpectedUpdate {
 public:
  ExpectedUpdate(const Dataset& dataset, const TransitionMatrix& p, const StationaryDistribution& d,
                 const LinkFunction& link, double gamma);

  /// g_bar(w) = E[(f(z_td) - f(x^T w)) x^T].
  MatrixXd direction(const MatrixXd& w) const;
  /// P_W(w + alpha g_bar(w)).
  MatrixXd apply(const MatrixXd& w, double alpha, double radius) const;

  /// E[||g(w)||^2] summed exactly over (s, s').
  double second_moment(const MatrixXd& w) const;

  /// Steady-state feature covariance X^T D X.
  MatrixXd feature_covariance() const;

  /// max |r_ss'| over all pairs, in logit space.
  double max_abs_reward() const;

  const Dataset& dataset() const noexcept { return *dataset_; }
  const StationaryDistribution& stationary() const noexcept { return d_; }
  double gamma() const noexcept { return gamma_; }
  const LinkFunction& link() const noexcept { return link_; }

 private:
  const Dataset* dataset_;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> p_rows_;
  StationaryDistribution d_;
  LinkFunction link_;
  double gamma_;
  MatrixXd logits_;  // n x k
};

MatrixXd expected_update(const MatrixXd& w, const Dataset& dataset, const TransitionMatrix& p,
                         const StationaryDistribution& stationary, const TDConfig& cfg);

struct FixedPointResult {
  MatrixXd weights;
  std::size_t iterations;
  double last_change;
};

/// Iterates the projected expected update with cfg.step_size from `start`
/// until successive iterates differ by at most `tol`.
FixedPointResult solve_fixed_point(const ExpectedUpdate& op, const TDConfig& cfg, const MatrixXd& start,
                                   double tol = 1e-12, std::size_t max_iters = 1000000);

// ---------------------------------------------------------------- certification

/// Constants shared by the contraction and rate certificates.
struct TheoryConstants {
  double lipschitz;      // L
  double domain_half;    // logit half-width the L was computed over
  double omega_min;      // smallest eigenvalue of X^T D X
  double omega_max;      // largest eigenvalue of X^T D X
  double step_size;      // (1 - gamma L^2) / (4 L^3)
  double rate_constant;  // (1 - gamma L^2) / (2 L^2)
};

/// Checks the feature, link and discount assumptions and derives the
/// constants; throws a Configuration error naming the violated assumption.
TheoryConstants theory_constants(const Dataset& dataset, const StationaryDistribution& d, const TDConfig& cfg);

/// ||T(a) - T(b)||^2 / ||a - b||^2 for the projected expected update T;
/// defined as 0 for a == b.
double contraction_ratio(const ExpectedUpdate& op, const MatrixXd& a, const MatrixXd& b, double alpha,
                         double radius);

struct ContractionReport {
  double max_ratio;
  double bound;           // 1 - omega_min c^2, the certified bound
  double bound_max_eig;   // 1 - omega_max c^2, reported only
  bool pass;
  bool pass_max_eig;
  int trials;
  TheoryConstants constants;
};

/// Samples `trials` pairs in the ball, applies the expected update with the
/// prescribed step to both, and compares the squared-distance ratio with
/// the theoretical contraction factor.
ContractionReport certify_contraction(const Dataset& dataset, const TransitionMatrix& p, const TDConfig& cfg,
                                      int trials);

struct SampleRateReport {
  std::vector<std::size_t> horizons;
  std::vector<double> errors_by_T;   // mean over seeds of E_x[(z* - z_bar_T)^2]
  std::vector<double> stderr_by_T;
  std::vector<double> bound_by_T;
  double sigma2;        // Monte Carlo estimate (10^5 draws) used in the bound
  double sigma2_exact;  // exact expectation, for reference
  std::size_t sigma2_draws;
  double min_horizon;   // 64 L^6 / (1 - gamma L^2)^2
  double slope;         // least-squares slope of log error vs log T
  MatrixXd fixed_point;
  bool pass;            // error <= bound at every horizon
  TheoryConstants constants;
};

SampleRateReport certify_sample_rate(const Dataset& dataset, const TransitionMatrix& p, const TDConfig& cfg,
                                     const std::vector<std::size_t>& horizons, int seeds);

// ---------------------------------------------------------------- variance of the TD target

/// Correlated label pair (y_t, y_next) with a noisy next-state estimate.
struct TargetPairSpec {
  double sigma_t = 1.0;
  double sigma_next = 1.0;
  double rho = 0.5;
  double sigma_eps = 0.0;
};

/// sigma_t^2 + g^2 sigma_next^2 - 2 g rho sigma_t sigma_next + g^2 sigma_eps^2.
double td_target_variance_formula(const TargetPairSpec& spec, double gamma);

/// rho sigma^2 / (sigma^2 + sigma_eps^2), the minimizer when sigma_t == sigma_next.
double variance_minimizing_gamma(const TargetPairSpec& spec);

struct TargetVariancePoint {
  double gamma;
  double var_td;      // Monte Carlo Var(y_td)
  double var_td_se;   // its standard error
  double var_formula;
  double var_label;   // Monte Carlo Var(y_t)
};

/// Monte Carlo over `draws` pairs (common random numbers across the grid).
std::vector<TargetVariancePoint> td_target_variance(const TargetPairSpec& spec, const std::vector<double>& gammas,
                                                    std::size_t draws, std::uint64_t seed);

}  // namespace tdsl
