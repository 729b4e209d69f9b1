// SPDX-License-Identifier: Apache-2.0
#include "tdsl/td.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tdsl/error.hpp"
#include "tdsl/kernels.hpp"
#include "tdsl/linalg.hpp"
#include "tdsl/rng.hpp"
#include "tdsl/solvers.hpp"

namespace tdsl {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double TDConfig::step_at(std::size_t t) const {
  const double tt = static_cast<double>(t);
  switch (schedule) {
    case StepSchedule::Constant: return step_size;
    case StepSchedule::InverseSqrt: return step_size / std::sqrt(1.0 + tt / decay_horizon);
    case StepSchedule::InverseTime: return step_size / (1.0 + tt / decay_horizon);
  }
  return step_size;
}

void TDConfig::validate() const {
  require(gamma >= 0.0 && gamma < 1.0, ErrorKind::Configuration, "gamma must lie in [0, 1)");
  require(step_size > 0.0 && std::isfinite(step_size), ErrorKind::Configuration, "step size must be positive");
  require(projection_radius > 0.0, ErrorKind::Configuration, "projection radius must be positive");
  require(decay_horizon > 0.0, ErrorKind::Configuration, "decay horizon must be positive");
}

double default_projection_radius(const Dataset& dataset) {
  if (!dataset.has_scalar_labels()) return 100.0;
  return 10.0 * (1.0 + ols_min_norm(dataset).norm());
}

MatrixXd project_ball(const MatrixXd& w, double radius) {
  require(radius > 0.0, ErrorKind::InvalidInput, "projection radius must be positive");
  if (std::isinf(radius)) return w;
  const double norm = w.norm();
  if (norm <= radius) return w;
  return w * (radius / norm);
}

namespace {

void project_in_place(MatrixXd& w, double radius) {
  if (std::isinf(radius)) return;
  const auto& k = kernels::active();
  const auto size = static_cast<std::size_t>(w.size());
  const double norm = std::sqrt(k.dot(w.data(), w.data(), size));
  if (norm > radius) w *= radius / norm;
}

// One update in place. `lt`/`ln` are the logit rows of the current and next
// state. Returns max_c |f(z_td) - f(z)|.
double apply_step(const double* x_t, const double* x_next, const double* lt, const double* ln, MatrixXd& w,
                  double alpha, double gamma, const LinkFunction& link, double radius) {
  const auto& kern = kernels::active();
  const auto d = static_cast<std::size_t>(w.rows());
  const Eigen::Index k = w.cols();

  if (k == 1) {
    double* col = w.data();
    const double z = kern.dot(x_t, col, d);
    const double z_next = kern.dot(x_next, col, d);
    const double reward = lt[0] - gamma * ln[0];
    const double z_td = reward + gamma * z_next;
    const double diff = link.forward(z_td) - link.forward(z);
    kern.axpy(alpha * diff, x_t, col, d);
    project_in_place(w, radius);
    return std::abs(diff);
  }

  Eigen::RowVectorXd z(k), z_td(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const double* col = w.data() + c * static_cast<Eigen::Index>(d);
    z(c) = kern.dot(x_t, col, d);
    const double reward = lt[c] - gamma * ln[c];
    z_td(c) = reward + gamma * kern.dot(x_next, col, d);
  }
  const Eigen::RowVectorXd diff = link.forward(z_td) - link.forward(z);
  for (Eigen::Index c = 0; c < k; ++c)
    kern.axpy(alpha * diff(c), x_t, w.data() + c * static_cast<Eigen::Index>(d), d);
  project_in_place(w, radius);
  return diff.cwiseAbs().maxCoeff();
}

MatrixXd initial_weights(const TDConfig& cfg, Eigen::Index d, Eigen::Index k) {
  if (cfg.initial_weights.size() == 0) return MatrixXd::Zero(d, k);
  require(cfg.initial_weights.rows() == d && cfg.initial_weights.cols() == k, ErrorKind::Configuration,
          "initial weights must be d x k");
  return cfg.initial_weights;
}

void check_divergence(const MatrixXd& w, std::size_t step) {
  const double sq = w.squaredNorm();
  if (!(sq <= kDivergenceNorm * kDivergenceNorm))
    throw DivergenceError("TD iterates diverged (||w|| > 1e12) at step " + std::to_string(step), step);
}

// Shared sampling loop; `next_pair` yields (s_t, s_{t+1}) for step t.
template <typename PairFn>
TDTrajectory run_loop(const Dataset& dataset, const TDConfig& cfg, PairFn&& next_pair) {
  cfg.validate();
  const Eigen::Index d = dataset.d();
  const Eigen::Index k = dataset.label_dim();
  require(!cfg.link.is_vector_valued() || k >= 2, ErrorKind::Configuration,
          "softmax link needs multiclass labels");

  const RowMatrix x = dataset.features();
  const RowMatrix logits = cfg.link.inverse_rows(dataset.labels());
  MatrixXd w = initial_weights(cfg, d, k);
  MatrixXd mean = MatrixXd::Zero(d, k);

  TDTrajectory traj;
  const std::size_t interval = std::max<std::size_t>(1, cfg.steps / 1000);
  double last_error = 0.0;
  auto record = [&](std::size_t t) {
    traj.checkpoint_steps.push_back(t);
    traj.weight_history.push_back(w);
    traj.diagnostics.push_back({{"step", static_cast<double>(t)},
                                {"weight_norm", w.norm()},
                                {"step_size", cfg.step_at(t)},
                                {"abs_td_error", last_error}});
  };
  record(0);

  for (std::size_t t = 0; t < cfg.steps; ++t) {
    mean += (w - mean) / static_cast<double>(t + 1);
    const auto [s, s_next] = next_pair(t);
    last_error = apply_step(x.row(s).data(), x.row(s_next).data(), logits.row(s).data(),
                            logits.row(s_next).data(), w, cfg.step_at(t), cfg.gamma, cfg.link,
                            cfg.projection_radius);
    check_divergence(w, t + 1);
    if ((t + 1) % interval == 0 || t + 1 == cfg.steps) record(t + 1);
  }
  traj.averaged_weights = cfg.steps > 0 ? mean : w;
  traj.final_weights = w;
  return traj;
}

}  // namespace

MatrixXd td_step(const VectorXd& x_t, const Eigen::RowVectorXd& y_t, const VectorXd& x_next,
                 const Eigen::RowVectorXd& y_next, const MatrixXd& w, const TDConfig& cfg) {
  require(x_t.size() == w.rows() && x_next.size() == w.rows(), ErrorKind::InvalidInput,
          "feature length does not match weights");
  require(y_t.size() == w.cols() && y_next.size() == w.cols(), ErrorKind::InvalidInput,
          "label length does not match weights");
  const Eigen::RowVectorXd lt = cfg.link.inverse(y_t);
  const Eigen::RowVectorXd ln = cfg.link.inverse(y_next);
  MatrixXd out = w;
  apply_step(x_t.data(), x_next.data(), lt.data(), ln.data(), out, cfg.step_size, cfg.gamma, cfg.link,
             cfg.projection_radius);
  return out;
}

VectorXd td_step(const VectorXd& x_t, double y_t, const VectorXd& x_next, double y_next, const VectorXd& w,
                 const TDConfig& cfg) {
  Eigen::RowVectorXd yt(1), yn(1);
  yt(0) = y_t;
  yn(0) = y_next;
  return td_step(x_t, yt, x_next, yn, MatrixXd(w), cfg).col(0);
}

VectorXd sgd_step(const VectorXd& x, double y, const VectorXd& w, double alpha) {
  require(x.size() == w.size(), ErrorKind::InvalidInput, "feature length does not match weights");
  const auto& kern = kernels::active();
  VectorXd out = w;
  const double z = kern.dot(x.data(), out.data(), static_cast<std::size_t>(x.size()));
  kern.axpy(alpha * (y - z), x.data(), out.data(), static_cast<std::size_t>(x.size()));
  return out;
}

TDTrajectory run_td(const Dataset& dataset, const TransitionMatrix& p, const TDConfig& cfg,
                    Eigen::Index start_index) {
  require(p.n() == dataset.n(), ErrorKind::InvalidInput, "transition matrix does not match the dataset");
  require(start_index >= 0 && start_index < dataset.n(), ErrorKind::InvalidInput, "start index out of range");
  const TransitionSampler sampler(p);
  Rng rng(cfg.rng_seed);
  Eigen::Index state = start_index;
  return run_loop(dataset, cfg, [&](std::size_t) {
    const Eigen::Index next = sampler.next(state, rng);
    const std::pair<Eigen::Index, Eigen::Index> pair{state, next};
    state = next;
    return pair;
  });
}

TDTrajectory run_td_iid(const Dataset& dataset, const TransitionMatrix& p, const StationaryDistribution& d,
                        const TDConfig& cfg) {
  require(p.n() == dataset.n() && d.n() == dataset.n(), ErrorKind::InvalidInput,
          "transition matrix or distribution does not match the dataset");
  const TransitionSampler sampler(p);
  std::vector<double> cdf(static_cast<std::size_t>(d.n()));
  std::partial_sum(d.weights().begin(), d.weights().end(), cdf.begin());
  Rng rng(cfg.rng_seed);
  return run_loop(dataset, cfg, [&](std::size_t) {
    const double u = rng.uniform() * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    auto s = static_cast<Eigen::Index>(std::min<std::ptrdiff_t>(it - cdf.begin(), d.n() - 1));
    while (d.weights()(s) <= 0.0 && s > 0) --s;  // never start from an unvisited state
    return std::pair<Eigen::Index, Eigen::Index>{s, sampler.next(s, rng)};
  });
}

// ---------------------------------------------------------------- expected update

ExpectedUpdate::ExpectedUpdate(const Dataset& dataset, const TransitionMatrix& p, const StationaryDistribution& d,
                               const LinkFunction& link, double gamma)
    : dataset_(&dataset), p_rows_(p.probs()), d_(d), link_(link), gamma_(gamma) {
  require(p.n() == dataset.n() && d.n() == dataset.n(), ErrorKind::InvalidInput,
          "transition matrix or distribution does not match the dataset");
  require(gamma >= 0.0 && gamma < 1.0, ErrorKind::Configuration, "gamma must lie in [0, 1)");
  logits_ = link.inverse_rows(dataset.labels());
}

MatrixXd ExpectedUpdate::direction(const MatrixXd& w) const {
  const MatrixXd& x = dataset_->features();
  const Eigen::Index n = x.rows();
  const Eigen::Index k = logits_.cols();
  require(w.rows() == x.cols() && w.cols() == k, ErrorKind::InvalidInput, "weights have the wrong shape");
  const MatrixXd z = x * w;
  MatrixXd coef(n, k);

  if (k == 1) {
    const auto& kern = kernels::active();
    const VectorXd u = gamma_ * (z.col(0) - logits_.col(0));
    const bool identity = link_.tag() == LinkTag::Identity;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double* row = p_rows_.row(i).data();
      const double mass = kern.sum(row, static_cast<std::size_t>(n));
      double target = 0.0;
      if (identity) {
        target = logits_(i, 0) * mass + kern.dot(row, u.data(), static_cast<std::size_t>(n));
      } else {
        for (Eigen::Index j = 0; j < n; ++j)
          if (row[j] > 0.0) target += row[j] * link_.forward(logits_(i, 0) + u(j));
      }
      coef(i, 0) = d_.weights()(i) * (target - mass * link_.forward(z(i, 0)));
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::RowVectorXd target = Eigen::RowVectorXd::Zero(k);
      double mass = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double pij = p_rows_(i, j);
        if (pij <= 0.0) continue;
        mass += pij;
        const Eigen::RowVectorXd z_td = logits_.row(i) - gamma_ * logits_.row(j) + gamma_ * z.row(j);
        target += pij * link_.forward(z_td);
      }
      coef.row(i) = d_.weights()(i) * (target - mass * link_.forward(Eigen::RowVectorXd(z.row(i))));
    }
  }
  return x.transpose() * coef;
}

MatrixXd ExpectedUpdate::apply(const MatrixXd& w, double alpha, double radius) const {
  return project_ball(w + alpha * direction(w), radius);
}

double ExpectedUpdate::second_moment(const MatrixXd& w) const {
  const MatrixXd& x = dataset_->features();
  const Eigen::Index n = x.rows();
  const MatrixXd z = x * w;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double xi = x.row(i).squaredNorm();
    const Eigen::RowVectorXd fz = link_.forward(Eigen::RowVectorXd(z.row(i)));
    double inner = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double pij = p_rows_(i, j);
      if (pij <= 0.0) continue;
      const Eigen::RowVectorXd z_td = logits_.row(i) - gamma_ * logits_.row(j) + gamma_ * z.row(j);
      inner += pij * (link_.forward(z_td) - fz).squaredNorm();
    }
    total += d_.weights()(i) * inner * xi;
  }
  return total;
}

MatrixXd ExpectedUpdate::feature_covariance() const {
  const MatrixXd& x = dataset_->features();
  return x.transpose() * d_.weights().asDiagonal() * x;
}

double ExpectedUpdate::max_abs_reward() const {
  double best = 0.0;
  for (Eigen::Index i = 0; i < logits_.rows(); ++i)
    for (Eigen::Index j = 0; j < logits_.rows(); ++j)
      best = std::max(best, (logits_.row(i) - gamma_ * logits_.row(j)).cwiseAbs().maxCoeff());
  return best;
}

MatrixXd expected_update(const MatrixXd& w, const Dataset& dataset, const TransitionMatrix& p,
                         const StationaryDistribution& stationary, const TDConfig& cfg) {
  cfg.validate();
  const ExpectedUpdate op(dataset, p, stationary, cfg.link, cfg.gamma);
  return op.apply(w, cfg.step_size, cfg.projection_radius);
}

FixedPointResult solve_fixed_point(const ExpectedUpdate& op, const TDConfig& cfg, const MatrixXd& start,
                                   double tol, std::size_t max_iters) {
  cfg.validate();
  MatrixXd w = project_ball(start, cfg.projection_radius);
  double change = 0.0;
  for (std::size_t it = 1; it <= max_iters; ++it) {
    MatrixXd next = op.apply(w, cfg.step_size, cfg.projection_radius);
    change = (next - w).norm();
    w = std::move(next);
    check_divergence(w, it);
    if (change <= tol) return {w, it, change};
  }
  throw NonConvergenceError("expected-update iteration did not reach a fixed point (last change " +
                                std::to_string(change) + ")",
                            change);
}

// ---------------------------------------------------------------- certification

TheoryConstants theory_constants(const Dataset& dataset, const StationaryDistribution& d, const TDConfig& cfg) {
  require(!cfg.link.is_vector_valued() && dataset.has_scalar_labels(), ErrorKind::Configuration,
          "link regularity: certification needs a scalar, strictly increasing link");
  require(std::isfinite(cfg.projection_radius) && cfg.projection_radius > 0.0, ErrorKind::Configuration,
          "compact parameter set: certification needs a finite projection radius");
  require(cfg.gamma >= 0.0 && cfg.gamma < 1.0, ErrorKind::Configuration, "gamma must lie in [0, 1)");

  const MatrixXd& x = dataset.features();
  const double max_row_norm = x.rowwise().norm().maxCoeff();
  require(max_row_norm <= 1.0 + 1e-12, ErrorKind::Configuration,
          "feature regularity: every feature vector needs ||x(s)|| <= 1 (max is " + std::to_string(max_row_norm) +
              ")");
  const MatrixXd sigma = x.transpose() * d.weights().asDiagonal() * x;
  const VectorXd eig = linalg::symmetric_eigenvalues(sigma);
  const double omega_min = eig(0);
  const double omega_max = eig(eig.size() - 1);
  require(omega_min > 1e-12 * std::max(omega_max, 1e-300), ErrorKind::Configuration,
          "feature regularity: steady-state feature covariance X^T D X is rank deficient");

  const VectorXd logits = cfg.link.inverse_rows(dataset.labels()).col(0);
  double max_reward = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    for (Eigen::Index j = 0; j < logits.size(); ++j)
      max_reward = std::max(max_reward, std::abs(logits(i) - cfg.gamma * logits(j)));
  const double half = cfg.projection_radius * max_row_norm + max_reward;
  const LipschitzBound lb = lipschitz_bound(cfg.link, -half, half);
  const double L = lb.L;
  const double slack = 1.0 - cfg.gamma * L * L;
  if (!(slack > 0.0)) {
    fail(ErrorKind::Configuration, "bounded discount: gamma < 1/L^2 is violated (gamma = " +
                                       std::to_string(cfg.gamma) + ", 1/L^2 = " + std::to_string(1.0 / (L * L)) +
                                       ", L = " + std::to_string(L) + ")");
  }
  return TheoryConstants{L, half, omega_min, omega_max, slack / (4.0 * L * L * L), slack / (2.0 * L * L)};
}

double contraction_ratio(const ExpectedUpdate& op, const MatrixXd& a, const MatrixXd& b, double alpha,
                         double radius) {
  const double before = (a - b).squaredNorm();
  if (before == 0.0) return 0.0;
  return (op.apply(a, alpha, radius) - op.apply(b, alpha, radius)).squaredNorm() / before;
}

namespace {

MatrixXd random_in_ball(Eigen::Index d, double radius, Rng& rng) {
  VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.normal();
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
  return v * (r / v.norm());
}

}  // namespace

ContractionReport certify_contraction(const Dataset& dataset, const TransitionMatrix& p, const TDConfig& cfg,
                                      int trials) {
  require(trials >= 1, ErrorKind::Configuration, "contraction certification needs at least one trial");
  const StationaryDistribution d = stationary_distribution(p);
  const TheoryConstants tc = theory_constants(dataset, d, cfg);
  const ExpectedUpdate op(dataset, p, d, cfg.link, cfg.gamma);

  Rng rng(cfg.rng_seed);
  double max_ratio = 0.0;
  for (int t = 0; t < trials; ++t) {
    const MatrixXd a = random_in_ball(dataset.d(), cfg.projection_radius, rng);
    const MatrixXd b = random_in_ball(dataset.d(), cfg.projection_radius, rng);
    max_ratio = std::max(max_ratio, contraction_ratio(op, a, b, tc.step_size, cfg.projection_radius));
  }
  const double c2 = tc.rate_constant * tc.rate_constant;
  ContractionReport rep;
  rep.max_ratio = max_ratio;
  rep.bound = 1.0 - tc.omega_min * c2;
  rep.bound_max_eig = 1.0 - tc.omega_max * c2;
  rep.pass = max_ratio <= rep.bound + 1e-9;
  rep.pass_max_eig = max_ratio <= rep.bound_max_eig + 1e-9;
  rep.trials = trials;
  rep.constants = tc;
  return rep;
}

SampleRateReport certify_sample_rate(const Dataset& dataset, const TransitionMatrix& p, const TDConfig& cfg,
                                     const std::vector<std::size_t>& horizons, int seeds) {
  require(!horizons.empty(), ErrorKind::Configuration, "sample-rate certification needs horizons");
  require(seeds >= 1, ErrorKind::Configuration, "sample-rate certification needs at least one seed");
  const StationaryDistribution d = stationary_distribution(p);
  const TheoryConstants tc = theory_constants(dataset, d, cfg);
  const double L = tc.lipschitz;
  const double slack = 1.0 - cfg.gamma * L * L;
  const double min_horizon = 64.0 * std::pow(L, 6) / (slack * slack);
  for (std::size_t T : horizons) {
    if (static_cast<double>(T) < min_horizon)
      fail(ErrorKind::Configuration, "horizon T = " + std::to_string(T) + " is below the required 64 L^6 / (1 - gamma L^2)^2 = " +
                                         std::to_string(min_horizon));
  }

  const ExpectedUpdate op(dataset, p, d, cfg.link, cfg.gamma);
  const MatrixXd w0 = initial_weights(cfg, dataset.d(), 1);
  TDConfig fp_cfg = cfg;
  fp_cfg.step_size = tc.step_size;
  const FixedPointResult fp = solve_fixed_point(op, fp_cfg, w0, 1e-13, 5000000);
  const MatrixXd& w_star = fp.weights;

  // sigma^2 = E ||g(w*)||^2 by i.i.d. sampling, plus the exact sum.
  SampleRateReport rep;
  rep.sigma2_draws = 100000;
  {
    const RowMatrix x = dataset.features();
    const VectorXd logits = cfg.link.inverse_rows(dataset.labels()).col(0);
    const VectorXd z = dataset.features() * w_star.col(0);
    const TransitionSampler sampler(p);
    Rng rng(derive_seed(cfg.rng_seed, {0x5167a2ULL}));
    double acc = 0.0;
    for (std::size_t k = 0; k < rep.sigma2_draws; ++k) {
      const Eigen::Index s = sample_discrete(d.weights(), rng);
      const Eigen::Index sn = sampler.next(s, rng);
      const double z_td = logits(s) - cfg.gamma * logits(sn) + cfg.gamma * z(sn);
      const double diff = cfg.link.forward(z_td) - cfg.link.forward(z(s));
      acc += diff * diff * x.row(s).squaredNorm();
    }
    rep.sigma2 = acc / static_cast<double>(rep.sigma2_draws);
    rep.sigma2_exact = op.second_moment(w_star);
  }

  const MatrixXd sigma = op.feature_covariance();
  const double dist0 = (w_star - w0).squaredNorm();
  std::vector<double> log_t, log_e;
  for (std::size_t T : horizons) {
    TDConfig run = cfg;
    run.steps = T;
    run.step_size = 1.0 / std::sqrt(static_cast<double>(T));
    run.schedule = StepSchedule::Constant;
    run.initial_weights = w0;
    std::vector<double> errs;
    for (int s = 0; s < seeds; ++s) {
      run.rng_seed = derive_seed(cfg.rng_seed, {static_cast<std::uint64_t>(T), static_cast<std::uint64_t>(s)});
      const TDTrajectory traj = run_td_iid(dataset, p, d, run);
      const VectorXd gap = (w_star - traj.averaged_weights).col(0);
      errs.push_back(gap.dot(sigma * gap));
    }
    const double mean = std::accumulate(errs.begin(), errs.end(), 0.0) / static_cast<double>(errs.size());
    double ss = 0.0;
    for (double e : errs) ss += (e - mean) * (e - mean);
    const double se = errs.size() > 1 ? std::sqrt(ss / static_cast<double>(errs.size() - 1) /
                                                  static_cast<double>(errs.size()))
                                      : 0.0;
    const double bound = L * (dist0 + 2.0 * rep.sigma2) / (std::sqrt(static_cast<double>(T)) * slack);
    rep.horizons.push_back(T);
    rep.errors_by_T.push_back(mean);
    rep.stderr_by_T.push_back(se);
    rep.bound_by_T.push_back(bound);
    log_t.push_back(std::log(static_cast<double>(T)));
    log_e.push_back(std::log(std::max(mean, 1e-300)));
  }

  rep.slope = 0.0;
  if (log_t.size() >= 2) {
    const double mt = std::accumulate(log_t.begin(), log_t.end(), 0.0) / static_cast<double>(log_t.size());
    const double me = std::accumulate(log_e.begin(), log_e.end(), 0.0) / static_cast<double>(log_e.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < log_t.size(); ++i) {
      num += (log_t[i] - mt) * (log_e[i] - me);
      den += (log_t[i] - mt) * (log_t[i] - mt);
    }
    rep.slope = num / den;
  }
  rep.pass = true;
  for (std::size_t i = 0; i < rep.horizons.size(); ++i) rep.pass = rep.pass && rep.errors_by_T[i] <= rep.bound_by_T[i];
  rep.min_horizon = min_horizon;
  rep.fixed_point = w_star;
  rep.constants = tc;
  return rep;
}

// ---------------------------------------------------------------- TD target variance

double td_target_variance_formula(const TargetPairSpec& s, double g) {
  return s.sigma_t * s.sigma_t + g * g * s.sigma_next * s.sigma_next -
         2.0 * g * s.rho * s.sigma_t * s.sigma_next + g * g * s.sigma_eps * s.sigma_eps;
}

double variance_minimizing_gamma(const TargetPairSpec& s) {
  const double v = s.sigma_t * s.sigma_t;
  return s.rho * v / (v + s.sigma_eps * s.sigma_eps);
}

std::vector<TargetVariancePoint> td_target_variance(const TargetPairSpec& spec, const std::vector<double>& gammas,
                                                    std::size_t draws, std::uint64_t seed) {
  require(draws >= 2, ErrorKind::InvalidInput, "variance study needs at least two draws");
  require(spec.rho >= -1.0 && spec.rho <= 1.0, ErrorKind::InvalidInput, "rho must lie in [-1, 1]");
  require(spec.sigma_t >= 0.0 && spec.sigma_next >= 0.0 && spec.sigma_eps >= 0.0, ErrorKind::InvalidInput,
          "standard deviations must be nonnegative");

  Rng rng(seed);
  const double ortho = std::sqrt(std::max(0.0, 1.0 - spec.rho * spec.rho));
  std::vector<double> y_t(draws), u(draws), buf(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    const double a = rng.normal();
    const double b = rng.normal();
    const double e = rng.normal();
    y_t[i] = spec.sigma_t * a;
    const double y_next = spec.sigma_next * (spec.rho * a + ortho * b);
    // y_td = y_t - gamma (y_next - E[y_next]) + gamma eps, and E[y_next] = 0.
    u[i] = spec.sigma_eps * e - y_next;
  }

  const auto& kern = kernels::active();
  const double n = static_cast<double>(draws);
  auto moments = [&](const std::vector<double>& v, double& var, double& se) {
    const double mean = kern.sum(v.data(), draws) / n;
    double m2 = 0.0, m4 = 0.0;
    kern.central_moments(v.data(), draws, mean, &m2, &m4);
    var = m2 / (n - 1.0);
    const double pop2 = m2 / n;
    se = std::sqrt(std::max(0.0, m4 / n - pop2 * pop2) / n);
  };
  double var_label = 0.0, se_label = 0.0;
  moments(y_t, var_label, se_label);

  std::vector<TargetVariancePoint> out;
  out.reserve(gammas.size());
  for (double g : gammas) {
    kern.add_scaled(y_t.data(), g, u.data(), buf.data(), draws);
    TargetVariancePoint pt{g, 0.0, 0.0, td_target_variance_formula(spec, g), var_label};
    moments(buf, pt.var_td, pt.var_td_se);
    out.push_back(pt);
  }
  return out;
}

}  // namespace tdsl
