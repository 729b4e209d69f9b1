// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "tdsl/error.hpp"
#include "tdsl/kernels.hpp"
#include "tdsl/linalg.hpp"
#include "tdsl/solvers.hpp"
#include "tdsl/synthetic.hpp"
#include "tdsl/td.hpp"

using namespace tdsl;
using namespace tdsl::testing;

namespace {

// Unit-norm features so the feature-regularity assumption holds.
Dataset unit_dataset(Eigen::Index n, Eigen::Index d, const LinkFunction& link, std::uint64_t seed,
                     double noise = 0.1) {
  MatrixXd x = gaussian_design(n, d, seed);
  x.rowwise().normalize();
  Rng rng(seed + 1);
  VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = 0.5 * x.row(i).sum() + noise * rng.normal();
    y(i) = link.forward(z);
  }
  return Dataset::scalar(x, y);
}

TDConfig config(double gamma, double alpha, const LinkFunction& link = LinkFunction()) {
  TDConfig c;
  c.gamma = gamma;
  c.step_size = alpha;
  c.link = link;
  return c;
}

}  // namespace

TEST_SUITE("td") {
  TEST_CASE("ball projection") {
    const VectorXd inside = (VectorXd(2) << 0.3, 0.4).finished();
    CHECK(project_ball(inside, 1.0) == inside);
    const VectorXd w = (VectorXd(2) << 3.0, 4.0).finished();
    const MatrixXd p = project_ball(w, 2.5);
    CHECK(p(0, 0) == doctest::Approx(1.5));
    CHECK(p(1, 0) == doctest::Approx(2.0));
    CHECK(project_ball(w, 5.0) == MatrixXd(w));
    CHECK(project_ball(w, kUnbounded) == MatrixXd(w));
  }

  TEST_CASE("single step matches hand evaluation") {
    TDConfig c = config(0.5, 0.1);
    const VectorXd w = td_step((VectorXd(2) << 1, 0).finished(), 1.0, (VectorXd(2) << 0, 1).finished(), 2.0,
                               VectorXd::Ones(2), c);
    // r = 1 - 0.5 * 2 = 0, z_td = 0 + 0.5 * 1 = 0.5, w0 += 0.1 (0.5 - 1).
    CHECK(w(0) == doctest::Approx(0.95).epsilon(1e-15));
    CHECK(w(1) == 1.0);
  }

  TEST_CASE("gamma 0 step is bit-identical to the SGD step on every kernel set") {
    Rng rng(2);
    for (auto isa : {kernels::Isa::Scalar, kernels::Isa::Avx2}) {
      if (!kernels::available(isa)) continue;
      kernels::ScopedIsa scope(isa);
      for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index d = 1 + trial % 23;
        VectorXd x(d), xn(d), w(d);
        for (Eigen::Index i = 0; i < d; ++i) {
          x(i) = rng.normal();
          xn(i) = rng.normal();
          w(i) = rng.normal();
        }
        const double y = 3.0 * rng.normal(), yn = rng.normal(), alpha = rng.uniform();
        const VectorXd td = td_step(x, y, xn, yn, w, config(0.0, alpha));
        const VectorXd sgd = sgd_step(x, y, w, alpha);
        CHECK(td == sgd);
      }
    }
  }

  TEST_CASE("the update vanishes at an exact interpolating solution") {
    const MatrixXd x = gaussian_design(10, 20, 3);
    const VectorXd w_star = VectorXd::LinSpaced(20, -1.0, 1.0);
    const VectorXd y = x * w_star;
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j) {
        const VectorXd w = td_step(x.row(i).transpose(), y(i), x.row(j).transpose(), y(j), w_star, config(0.9, 0.5));
        CHECK((w - w_star).norm() <= 1e-12);
      }
  }

  TEST_CASE("gamma 0 trajectory reproduces the SGD iterate sequence") {
    const Dataset data = linear_dataset(30, 4, 0.2, 8);
    const TransitionMatrix p = build_transition(data, TransitionKind::of(TransitionTag::Random), 8);
    TDConfig c = config(0.0, 0.05);
    c.steps = 3000;
    c.rng_seed = 77;
    const TDTrajectory traj = run_td(data, p, c, 3);

    const TransitionSampler sampler(p);
    Rng rng(77);
    Eigen::Index s = 3;
    VectorXd w = VectorXd::Zero(4);
    for (std::size_t t = 0; t < c.steps; ++t) {
      const Eigen::Index next = sampler.next(s, rng);
      w = sgd_step(data.features().row(s).transpose(), data.y()(s), w, c.step_size);
      s = next;
    }
    CHECK(traj.final_weights.col(0) == w);
  }

  TEST_CASE("trajectory bookkeeping") {
    const Dataset data = linear_dataset(20, 3, 0.2, 1);
    const TransitionMatrix p = build_transition(data, TransitionKind::of(TransitionTag::Uniform), 0);
    TDConfig c = config(0.7, 0.02);
    c.steps = 800;
    c.rng_seed = 3;
    const TDTrajectory traj = run_td(data, p, c, 0);
    // With fewer than 1000 steps every iterate is recorded, so the running
    // mean can be checked against a direct average.
    REQUIRE(traj.weight_history.size() == c.steps + 1);
    MatrixXd sum = MatrixXd::Zero(3, 1);
    for (std::size_t t = 0; t < c.steps; ++t) sum += traj.weight_history[t];
    CHECK((traj.averaged_weights - sum / static_cast<double>(c.steps)).norm() <= 1e-9);
    CHECK(traj.final_weights == traj.weight_history.back());
    CHECK(traj.diagnostics.back().at("step") == 800.0);
    CHECK(traj.diagnostics.back().at("weight_norm") == doctest::Approx(traj.final_weights.norm()));

    c.steps = 100000;
    const TDTrajectory longer = run_td(data, p, c, 0);
    CHECK(longer.checkpoint_steps.size() == 1001);
    CHECK(longer.checkpoint_steps[1] == 100);

    const TDTrajectory again = run_td(data, p, c, 0);
    CHECK(again.final_weights == longer.final_weights);
    CHECK(again.averaged_weights == longer.averaged_weights);
  }

  TEST_CASE("decaying-step TD with gamma 0 converges to OLS") {
    const Dataset data = linear_dataset(200, 3, 0.1, 21);
    const TransitionMatrix p = build_transition(data, TransitionKind::of(TransitionTag::Uniform), 0);
    TDConfig c = config(0.0, 0.05);
    c.schedule = StepSchedule::InverseTime;
    c.decay_horizon = 2000.0;
    c.steps = 400000;
    c.rng_seed = 5;
    const TDTrajectory traj = run_td(data, p, c, 0);
    CHECK((traj.final_weights.col(0) - ols_min_norm(data)).norm() <= 1e-2);
  }

  TEST_CASE("divergence is reported with the step index") {
    const Dataset data = linear_dataset(20, 3, 0.1, 2);
    const TransitionMatrix p = build_transition(data, TransitionKind::of(TransitionTag::Uniform), 0);
    TDConfig c = config(0.99, 5.0);
    c.steps = 100000;
    try {
      run_td(data, p, c, 0);
      FAIL("expected divergence");
    } catch (const DivergenceError& e) {
      CHECK(e.step() > 0);
      CHECK(e.step() < c.steps);
      CHECK(e.is_numeric());
    }
  }

  TEST_CASE("config validation") {
    TDConfig c = config(1.0, 0.1);
    CHECK_THROWS_AS(c.validate(), Error);
    c = config(0.5, 0.0);
    CHECK_THROWS_AS(c.validate(), Error);
    c = config(0.5, 0.1);
    c.projection_radius = -1.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = config(0.5, 0.1);
    c.schedule = StepSchedule::InverseSqrt;
    c.decay_horizon = 100.0;
    CHECK(c.step_at(300) == doctest::Approx(0.05));
    c.schedule = StepSchedule::InverseTime;
    CHECK(c.step_at(300) == doctest::Approx(0.025));
  }

  TEST_CASE("multiclass softmax TD learns the label argmax") {
    MatrixXd x = gaussian_design(60, 3, 4);
    std::vector<int> cls(60);
    for (Eigen::Index i = 0; i < 60; ++i) cls[static_cast<std::size_t>(i)] = x(i, 0) > 0.0 ? 1 : 0;
    const Dataset data = Dataset::one_hot(x, cls, 2);
    const TransitionMatrix p = build_transition(data, TransitionKind::of(TransitionTag::Uniform), 0);
    TDConfig c = config(0.2, 0.1, LinkFunction(LinkTag::ComponentwiseSoftmaxLog, 1e-3));
    c.steps = 20000;
    c.projection_radius = 50.0;
    const TDTrajectory traj = run_td(data, p, c, 0);
    int hits = 0;
    for (Eigen::Index i = 0; i < 60; ++i) {
      const Eigen::RowVectorXd z = x.row(i) * traj.final_weights;
      hits += (z(1) > z(0)) == (cls[static_cast<std::size_t>(i)] == 1) ? 1 : 0;
    }
    CHECK(hits >= 55);
  }

  TEST_CASE("expected update") {
    const Dataset data = unit_dataset(25, 3, LinkFunction(), 4);
    const TransitionMatrix p = build_transition(data, TransitionKind::of(TransitionTag::Random), 4);
    const StationaryDistribution d = stationary_distribution(p);

    // gamma = 0 is a gradient step on the D-weighted squared error.
    const ExpectedUpdate op0(data, p, d, LinkFunction(), 0.0);
    const VectorXd w = (VectorXd(3) << 0.2, -0.1, 0.4).finished();
    const MatrixXd& x = data.features();
    const VectorXd grad = x.transpose() * d.weights().asDiagonal() * (data.y() - x * w);
    CHECK((op0.direction(w).col(0) - grad).norm() <= 1e-14);
    CHECK((op0.apply(w, 0.3, kUnbounded).col(0) - (w + 0.3 * grad)).norm() <= 1e-14);

    // With the identity link the fixed point is the TD closed form.
    const ExpectedUpdate op(data, p, d, LinkFunction(), 0.6);
    TDConfig c = config(0.6, 0.5);
    const FixedPointResult fp = solve_fixed_point(op, c, MatrixXd::Zero(3, 1));
    CHECK((fp.weights.col(0) - td_closed_form(data, p, d, 0.6).weights).norm() <= 1e-9);
    CHECK((op.apply(fp.weights, 0.5, kUnbounded) - fp.weights).norm() <= 1e-10);
    CHECK((expected_update(fp.weights, data, p, d, c) - fp.weights).norm() <= 1e-10);

    // Second moment against a direct double sum.
    double m2 = 0.0;
    const VectorXd z = x * w;
    for (Eigen::Index i = 0; i < 25; ++i)
      for (Eigen::Index j = 0; j < 25; ++j) {
        const double g = data.y()(i) - 0.6 * data.y()(j) + 0.6 * z(j) - z(i);
        m2 += d.weights()(i) * p(i, j) * g * g * x.row(i).squaredNorm();
      }
    CHECK(op.second_moment(w) == doctest::Approx(m2).epsilon(1e-12));
    CHECK((op.feature_covariance() - x.transpose() * d.weights().asDiagonal() * x).norm() <= 1e-14);
  }

  TEST_CASE("theory constants enforce the assumptions") {
    const LinkFunction sig(LinkTag::Sigmoid);
    const Dataset data = unit_dataset(30, 3, sig, 6);
    const TransitionMatrix p = build_transition(data, TransitionKind::of(TransitionTag::Random), 6);
    const StationaryDistribution d = stationary_distribution(p);
    TDConfig c = config(0.001, 0.1, sig);
    c.projection_radius = 1.0;
    const TheoryConstants tc = theory_constants(data, d, c);
    CHECK(tc.lipschitz >= 4.0);
    CHECK(tc.step_size == doctest::Approx((1 - c.gamma * tc.lipschitz * tc.lipschitz) / (4 * std::pow(tc.lipschitz, 3))));
    CHECK(tc.omega_min <= tc.omega_max);

    c.gamma = 0.5;  // far above 1/L^2 for a sigmoid
    try {
      theory_constants(data, d, c);
      FAIL("expected the discount gate to fire");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Configuration);
      CHECK(std::string(e.what()).find("bounded discount") != std::string::npos);
    }
    c.gamma = 0.001;
    c.projection_radius = kUnbounded;
    CHECK_THROWS_AS(theory_constants(data, d, c), Error);

    c.projection_radius = 1.0;
    const Dataset big = Dataset::scalar(2.0 * data.features(), data.y());
    CHECK_THROWS_AS(theory_constants(big, d, c), Error);

    MatrixXd flat = data.features();
    flat.col(2) = flat.col(1);
    flat.rowwise().normalize();
    CHECK_THROWS_AS(theory_constants(Dataset::scalar(flat, data.y()), d, c), Error);
  }

  TEST_CASE("contraction certification") {
    const Dataset data = unit_dataset(40, 3, LinkFunction(), 9);
    const TransitionMatrix p = build_transition(data, TransitionKind::of(TransitionTag::Random), 9);
    TDConfig c = config(0.5, 0.1);
    c.projection_radius = 2.0;
    const ContractionReport rep = certify_contraction(data, p, c, 100);
    CHECK(rep.pass);
    CHECK(rep.max_ratio < 1.0);
    CHECK(rep.constants.step_size == doctest::Approx(0.125));

    const StationaryDistribution d = stationary_distribution(p);
    const ExpectedUpdate op(data, p, d, LinkFunction(), 0.5);
    const MatrixXd w = VectorXd::Ones(3);
    CHECK(contraction_ratio(op, w, w, 0.125, 2.0) == 0.0);

    c.gamma = 0.999;
    CHECK_NOTHROW(certify_contraction(data, p, c, 5));
  }

  TEST_CASE("sigmoid pairs contract at the prescribed step") {
    const LinkFunction sig(LinkTag::Sigmoid);
    const Dataset data = unit_dataset(30, 3, sig, 10);
    const TransitionMatrix p = build_transition(data, TransitionKind::of(TransitionTag::Random), 10);
    const StationaryDistribution d = stationary_distribution(p);
    TDConfig c = config(0.005, 0.1, sig);
    c.projection_radius = 1.0;
    const TheoryConstants tc = theory_constants(data, d, c);
    const ExpectedUpdate op(data, p, d, sig, c.gamma);
    const double bound = 1.0 - tc.omega_min * tc.rate_constant * tc.rate_constant;
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
      VectorXd a(3), b(3);
      for (int i = 0; i < 3; ++i) {
        a(i) = 0.5 * rng.normal();
        b(i) = 0.5 * rng.normal();
      }
      a = project_ball(a, 1.0);
      b = project_ball(b, 1.0);
      CHECK(contraction_ratio(op, a, b, tc.step_size, 1.0) <= bound + 1e-12);
    }
  }

  TEST_CASE("fixed point is unique and optimal") {
    const LinkFunction sig(LinkTag::Sigmoid);
    const Dataset data = unit_dataset(30, 3, sig, 11);
    const TransitionMatrix p = build_transition(data, TransitionKind::of(TransitionTag::Random), 11);
    const StationaryDistribution d = stationary_distribution(p);
    const ExpectedUpdate op(data, p, d, sig, 0.01);
    TDConfig c = config(0.01, 2.0, sig);
    c.projection_radius = 0.3;  // small ball so the constraint is active
    Rng rng(12);
    std::vector<MatrixXd> sols;
    for (int s = 0; s < 10; ++s) {
      VectorXd w0(3);
      for (int i = 0; i < 3; ++i) w0(i) = rng.normal();
      sols.push_back(solve_fixed_point(op, c, project_ball(w0, 0.3)).weights);
    }
    for (const auto& s : sols) CHECK((s - sols.front()).norm() <= 1e-6);

    const VectorXd w_star = sols.front().col(0);
    const VectorXd g = op.direction(w_star).col(0);
    for (int t = 0; t < 1000; ++t) {
      VectorXd w(3);
      for (int i = 0; i < 3; ++i) w(i) = rng.normal();
      w = project_ball(w, 0.3 * rng.uniform());
      CHECK((w_star - w).dot(g) >= -1e-9);
    }
  }

  TEST_CASE("expected-update iterates converge exponentially") {
    const Dataset data = unit_dataset(40, 3, LinkFunction(), 13);
    const TransitionMatrix p = build_transition(data, TransitionKind::of(TransitionTag::Random), 13);
    const StationaryDistribution d = stationary_distribution(p);
    TDConfig c = config(0.5, 0.125);
    c.projection_radius = 2.0;
    const TheoryConstants tc = theory_constants(data, d, c);
    const ExpectedUpdate op(data, p, d, LinkFunction(), 0.5);
    const MatrixXd w_star = solve_fixed_point(op, c, MatrixXd::Zero(3, 1)).weights;
    MatrixXd w = (VectorXd(3) << 1.0, -1.0, 0.5).finished();
    const double d0 = (w - w_star).squaredNorm();
    const double rate = tc.omega_min * tc.rate_constant * tc.rate_constant;
    for (int t = 1; t <= 500; ++t) {
      w = op.apply(w, tc.step_size, 2.0);
      CHECK((w - w_star).squaredNorm() <= std::exp(-t * rate) * d0 * (1 + 1e-9) + 1e-20);
    }
  }

  TEST_CASE("sample-rate certification") {
    const Dataset data = unit_dataset(40, 3, LinkFunction(), 14);
    const TransitionMatrix p = build_transition(data, TransitionKind::of(TransitionTag::Random), 14);
    TDConfig c = config(0.5, 0.1);
    c.projection_radius = 2.0;
    c.rng_seed = 1;
    const SampleRateReport rep = certify_sample_rate(data, p, c, {1000, 2000, 4000}, 10);
    CHECK(rep.pass);
    CHECK(rep.bound_by_T[1] / rep.bound_by_T[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(rep.slope <= -0.4);
    CHECK(rep.min_horizon == doctest::Approx(256.0));
    CHECK(std::abs(rep.sigma2 - rep.sigma2_exact) <= 0.05 * rep.sigma2_exact);
    CHECK_THROWS_AS(certify_sample_rate(data, p, c, {100}, 2), Error);

    // Noiseless realizable data: sigma^2 vanishes and the errors decay.
    MatrixXd x = data.features();
    const Dataset clean = Dataset::scalar(x, x * VectorXd::Constant(3, 0.4));
    const SampleRateReport quiet = certify_sample_rate(clean, p, c, {1000, 4000}, 5);
    CHECK(quiet.pass);
    CHECK(quiet.sigma2_exact <= 1e-20);
    CHECK(quiet.errors_by_T[1] < quiet.errors_by_T[0]);
  }

  TEST_CASE("default projection radius") {
    const Dataset data = linear_dataset(50, 3, 0.1, 1);
    CHECK(default_projection_radius(data) == doctest::Approx(10.0 * (1.0 + ols_min_norm(data).norm())));
    CHECK(default_projection_radius(Dataset::one_hot(MatrixXd::Ones(3, 2), {0, 1, 0}, 2)) == 100.0);
  }

  TEST_CASE("TD target variance") {
    TargetPairSpec perfect{1.0, 1.0, 1.0, 0.0};
    const auto pts = td_target_variance(perfect, {0.0, 1.0}, 20000, 3);
    CHECK(pts[1].var_td <= 1e-20);
    CHECK(pts[0].var_td == pts[0].var_label);

    TargetPairSpec spec{1.0, 1.0, 0.8, 0.5};
    std::vector<double> grid;
    for (int k = 0; k < 50; ++k) grid.push_back(k / 49.0);
    const auto curve = td_target_variance(spec, grid, 100000, 4);
    std::size_t best = 0;
    for (std::size_t k = 0; k < curve.size(); ++k) {
      CHECK(std::abs(curve[k].var_td - td_target_variance_formula(spec, curve[k].gamma)) <= 3.0 * curve[k].var_td_se);
      if (curve[k].var_td < curve[best].var_td) best = k;
      // rho >= gamma^2 (sigma^2 + sigma_eps^2) / (2 gamma sigma^2) guarantees no variance increase.
      const double g = curve[k].gamma;
      if (g > 0 && spec.rho >= g * g * 1.25 / (2 * g)) CHECK(curve[k].var_td <= curve[k].var_label + 3 * curve[k].var_td_se);
    }
    CHECK(variance_minimizing_gamma(spec) == doctest::Approx(0.64));
    CHECK(std::abs(curve[best].gamma - 0.64) <= 1.0 / 49.0);
    CHECK(td_target_variance_formula(spec, 0.0) == 1.0);
  }
}
