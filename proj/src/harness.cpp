// SPDX-License-Identifier: Apache-2.0
#include "tdsl/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "tdsl/csv.hpp"
#include "tdsl/error.hpp"
#include "tdsl/kernels.hpp"
#include "tdsl/linalg.hpp"
#include "tdsl/link.hpp"
#include "tdsl/mrp.hpp"
#include "tdsl/solvers.hpp"
#include "tdsl/synthetic.hpp"
#include "tdsl/td.hpp"

#ifndef TDSL_GIT_DESCRIBE
#define TDSL_GIT_DESCRIBE "unknown"
#endif

namespace tdsl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream identifiers folded into derived seeds, one per random quantity.
enum Stream : std::uint64_t {
  kMinNormData = 1,
  kMinNormTransition,
  kGpDesign,
  kGpLabels,
  kVariance,
  kCertData,
  kCertTransition,
  kCertStarts,
  kCertRun,
  kFitSplit,
  kFitNoise,
  kFitTransition,
  kFitRun,
};

constexpr Eigen::Index kMinNormPoints = 100;
constexpr double kMinNormNoise = 0.1;
constexpr Eigen::Index kGpPoints = 200;
constexpr Eigen::Index kGpTrain = 100;
constexpr Eigen::Index kCertPoints = 50;
constexpr Eigen::Index kCertDim = 3;

using Row = std::vector<Cell>;
using Rows = std::vector<Row>;

std::uint64_t u64(long long v) { return static_cast<std::uint64_t>(v); }

std::string describe(const std::exception& e) {
  if (const auto* te = dynamic_cast<const Error*>(&e)) return std::string(to_string(te->kind())) + ": " + e.what();
  return std::string("internal: ") + e.what();
}

// Keeps the table rectangular when a cell fails: coordinates, NaN payload,
// then the error description in the trailing column.
Row failed_row(Row coords, std::size_t width, const std::exception& e) {
  while (coords.size() + 1 < width) coords.emplace_back(kNaN);
  coords.emplace_back(describe(e));
  return coords;
}

void run_cells(ResultTable& table, std::size_t count, const std::function<Rows(std::size_t)>& job,
               const std::function<Row(std::size_t)>& coords, unsigned threads) {
  const std::size_t width = table.columns().size();
  const std::function<Rows(std::size_t)> guarded = [&](std::size_t i) -> Rows {
    try {
      return job(i);
    } catch (const std::exception& e) {
      return {failed_row(coords(i), width, e)};
    }
  };
  for (auto& rows : parallel_map<Rows>(count, guarded, threads))
    for (auto& r : rows) table.add_row(std::move(r));
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::int64_t flag(bool b) { return b ? 1 : 0; }

std::vector<double> default_gamma_grid() {
  std::vector<double> g(50);
  for (int k = 0; k < 50; ++k) g[static_cast<std::size_t>(k)] = k / 49.0;
  return g;
}

template <class T>
const T& pick(const std::vector<T>& v, std::size_t i) {
  return v.size() == 1 ? v.front() : v.at(i);
}

}  // namespace

// ---------------------------------------------------------------- config

std::string_view to_string(ExperimentTag tag) noexcept {
  switch (tag) {
    case ExperimentTag::MinNormTable: return "min-norm";
    case ExperimentTag::GpSweep: return "gp-sweep";
    case ExperimentTag::VarianceCheck: return "variance";
    case ExperimentTag::Contraction: return "contraction";
    case ExperimentTag::SampleRate: return "sample-rate";
    case ExperimentTag::FitCsv: return "fit";
  }
  return "unknown";
}

ExperimentTag parse_experiment_tag(std::string_view name) {
  for (auto t : {ExperimentTag::MinNormTable, ExperimentTag::GpSweep, ExperimentTag::VarianceCheck,
                 ExperimentTag::Contraction, ExperimentTag::SampleRate, ExperimentTag::FitCsv})
    if (to_string(t) == name) return t;
  fail(ErrorKind::InvalidInput, "unknown experiment '" + std::string(name) + "'");
}

std::string_view to_string(NoiseCov cov) noexcept {
  switch (cov) {
    case NoiseCov::None: return "none";
    case NoiseCov::Iid: return "iid";
    case NoiseCov::Block: return "block";
  }
  return "unknown";
}

NoiseCov parse_noise_cov(std::string_view name) {
  for (auto c : {NoiseCov::None, NoiseCov::Iid, NoiseCov::Block})
    if (to_string(c) == name) return c;
  fail(ErrorKind::InvalidInput, "unknown noise covariance '" + std::string(name) + "' (none, iid, block)");
}

ExperimentConfig ExperimentConfig::defaults(ExperimentTag tag) {
  ExperimentConfig c;
  c.experiment = tag;
  switch (tag) {
    case ExperimentTag::MinNormTable:
      c.dims = {70, 90, 110, 130};
      c.gammas = {0.9};
      c.transitions = {"uniform", "random", "deficient", "close", "far"};
      c.seeds = 10;
      break;
    case ExperimentTag::GpSweep:
      c.dims = {70};
      c.rhos = {0.1, 0.3, 0.5, 0.7, 0.9};
      c.etas = {0.5, 0.6, 0.7, 0.8, 0.9};
      c.gammas = {0.99};
      c.seeds = 50;
      break;
    case ExperimentTag::VarianceCheck:
      c.rhos = {0.3, 0.6, 0.9};
      c.gammas = default_gamma_grid();
      c.seeds = 1;
      break;
    case ExperimentTag::Contraction:
      c.links = {"identity", "sigmoid"};
      c.gammas = {0.5, kNaN};
      c.transitions = {"random"};
      c.seeds = 1;
      break;
    case ExperimentTag::SampleRate:
      c.links = {"identity"};
      c.gammas = {0.5};
      c.transitions = {"random"};
      c.horizons = {1000, 4000, 16000};
      c.seeds = 20;
      break;
    case ExperimentTag::FitCsv:
      c.links = {"identity"};
      c.gammas = {0.9};
      c.rhos = {0.9};
      c.etas = {0.9};
      c.transitions = {"uniform"};
      c.seeds = 5;
      break;
  }
  return c;
}

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const std::string& what) { require(ok, ErrorKind::Configuration, what); };
  need(seeds >= 1, "--seeds must be at least 1");
  // The variance study sweeps the closed interval; every MRP needs gamma < 1.
  const bool closed = experiment == ExperimentTag::VarianceCheck;
  for (double g : gammas)
    need(std::isnan(g) || (g >= 0.0 && (closed ? g <= 1.0 : g < 1.0)),
         closed ? "gamma must lie in [0, 1]" : "gamma must lie in [0, 1)");
  switch (experiment) {
    case ExperimentTag::MinNormTable:
      need(!dims.empty() && !gammas.empty() && !transitions.empty(), "min-norm needs dims, gammas and transitions");
      for (int d : dims) need(d >= 1, "dimensions must be positive");
      break;
    case ExperimentTag::GpSweep:
      need(!rhos.empty() && !etas.empty() && !gammas.empty() && !dims.empty(),
           "gp-sweep needs rho, eta and gamma lists");
      for (double r : rhos) need(r >= 0.0 && r < 1.0, "rho must lie in [0, 1) for the block covariance");
      for (double e : etas) need(e >= 0.0 && e <= 1.0, "eta must lie in [0, 1]");
      need(dims.front() >= 1, "feature dimension must be positive");
      break;
    case ExperimentTag::VarianceCheck:
      need(!rhos.empty() && !gammas.empty(), "variance needs rho and gamma lists");
      need(draws >= 2, "variance needs at least two draws");
      need(sigma_eps >= 0.0, "--sigma-eps must be nonnegative");
      break;
    case ExperimentTag::Contraction:
    case ExperimentTag::SampleRate:
      need(!links.empty() && !gammas.empty(), "certification needs links and gammas");
      need(gammas.size() == 1 || gammas.size() == links.size(),
           "give one gamma, or one gamma per link (use 'auto' to derive it)");
      need(std::isfinite(radius) && radius > 0.0, "--radius must be finite and positive");
      need(trials >= 1 && fixed_point_starts >= 1, "trials and starts must be positive");
      need(experiment != ExperimentTag::SampleRate || !horizons.empty(), "sample-rate needs horizons");
      break;
    case ExperimentTag::FitCsv:
      need(csv_path.has_value() && !csv_path->empty(), "fit needs --csv <path>");
      need(links.size() == 1, "fit takes a single link");
      need(!gammas.empty() && std::isfinite(gammas.front()), "fit needs a finite gamma");
      need(train_fraction > 0.0 && train_fraction < 1.0, "--train-fraction must lie in (0, 1)");
      need(noise_scale >= 0.0, "--noise-scale must be nonnegative");
      need(block_size >= 1, "--block-size must be positive");
      need(subsample >= 4, "--subsample must be at least 4");
      need(!transitions.empty(), "fit needs a transition design");
      need(noise_cov != NoiseCov::Block || (!rhos.empty() && rhos.front() >= 0.0 && rhos.front() < 1.0),
           "block noise needs rho in [0, 1)");
      break;
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["experiment"] = std::string(to_string(experiment));
  auto put = [&](const char* key, const auto& v) {
    if (!v.empty()) j[key] = v;
  };
  put("dims", dims);
  put("rhos", rhos);
  put("etas", etas);
  std::vector<nlohmann::json> g;
  for (double x : gammas) g.push_back(std::isnan(x) ? nlohmann::json("auto") : nlohmann::json(x));
  if (!g.empty()) j["gammas"] = g;
  put("transitions", transitions);
  put("links", links);
  put("horizons", horizons);
  j["seeds"] = seeds;
  switch (experiment) {
    case ExperimentTag::FitCsv:
      j["csv"] = csv_path.value_or("");
      j["target_col"] = target_col;
      j["noise_cov"] = std::string(to_string(noise_cov));
      j["noise_scale"] = noise_scale;
      j["block_size"] = block_size;
      j["train_fraction"] = train_fraction;
      j["subsample"] = subsample;
      j["steps"] = steps;
      break;
    case ExperimentTag::Contraction:
    case ExperimentTag::SampleRate:
      j["radius"] = radius;
      j["trials"] = trials;
      j["fixed_point_starts"] = fixed_point_starts;
      break;
    case ExperimentTag::VarianceCheck:
      j["draws"] = draws;
      j["sigma_eps"] = sigma_eps;
      break;
    default:
      break;
  }
  return j;
}

// ---------------------------------------------------------------- min-norm table

ResultTable run_min_norm_table(const ExperimentConfig& cfg) {
  ResultTable table({"transition", "gamma", "d", "n", "seeds", "mean_dist", "se_dist", "max_dist", "error"});
  struct Coord {
    TransitionTag tag;
    double gamma;
    int d;
  };
  std::vector<Coord> cells;
  for (const auto& t : cfg.transitions) {
    const TransitionTag tag = parse_transition_tag(t);
    require(tag != TransitionTag::CovInterp, ErrorKind::Configuration,
            "min-norm uses data-driven designs; cov-interp needs a covariance (see gp-sweep)");
    for (double g : cfg.gammas)
      for (int d : cfg.dims) cells.push_back({tag, g, d});
  }
  const auto coords = [&](std::size_t i) -> Row {
    const Coord& c = cells[i];
    return {std::string(to_string(c.tag)), c.gamma, std::int64_t{c.d}, std::int64_t{kMinNormPoints},
            std::int64_t{cfg.seeds}};
  };
  const auto job = [&](std::size_t i) -> Rows {
    const Coord& c = cells[i];
    std::vector<double> dist;
    for (int s = 0; s < cfg.seeds; ++s) {
      // The data depend on (d, seed) only, so every design sees the same draws.
      const Dataset data =
          linear_dataset(kMinNormPoints, c.d, kMinNormNoise, derive_seed(cfg.seed, {kMinNormData, u64(c.d), u64(s)}));
      const TransitionMatrix p = build_transition(
          data, TransitionKind::of(c.tag),
          derive_seed(cfg.seed, {kMinNormTransition, static_cast<std::uint64_t>(c.tag), u64(c.d), u64(s)}));
      const TDSolution td = td_closed_form(data, p, c.gamma);
      dist.push_back((td.weights - ols_min_norm(data)).norm());
    }
    Row r = coords(i);
    r.insert(r.end(), {mean_of(dist), sd_of(dist) / std::sqrt(static_cast<double>(dist.size())),
                       *std::max_element(dist.begin(), dist.end()), std::string()});
    return {r};
  };
  run_cells(table, cells.size(), job, coords, cfg.threads);
  return table;
}

// ---------------------------------------------------------------- GP sweep

ResultTable run_gp_sweep(const ExperimentConfig& cfg) {
  ResultTable table({"rho", "eta", "gamma", "d", "seeds", "td_rmse_mean", "td_rmse_sd", "ols_rmse_mean",
                     "ols_rmse_sd", "pooled_sd", "td_win_rate", "error"});
  struct Coord {
    double rho, eta, gamma;
  };
  std::vector<Coord> cells;
  for (double r : cfg.rhos)
    for (double e : cfg.etas)
      for (double g : cfg.gammas) cells.push_back({r, e, g});
  const int d = cfg.dims.front();

  const auto coords = [&](std::size_t i) -> Row {
    return {cells[i].rho, cells[i].eta, cells[i].gamma, std::int64_t{d}, std::int64_t{cfg.seeds}};
  };
  const auto job = [&](std::size_t i) -> Rows {
    const Coord& c = cells[i];
    GPSpec spec;
    spec.n = kGpPoints;
    spec.d = d;
    spec.rho = c.rho;
    spec.validate();

    // The transition design depends only on the training covariance, which
    // is shared by every seed of the cell.
    const MatrixXd cov = block_covariance(kGpTrain, spec.block_size, c.rho);
    std::vector<Eigen::Index> train_idx(kGpTrain), test_idx(kGpPoints - kGpTrain);
    std::iota(train_idx.begin(), train_idx.end(), 0);
    std::iota(test_idx.begin(), test_idx.end(), kGpTrain);

    std::optional<TransitionMatrix> p;
    std::optional<StationaryDistribution> stat;
    std::vector<double> td_rmse, ols_rmse;
    int wins = 0;
    for (int s = 0; s < cfg.seeds; ++s) {
      const MatrixXd x = gaussian_design(kGpPoints, d, derive_seed(cfg.seed, {kGpDesign, seed_coord(c.rho), u64(s)}));
      const VectorXd y = sample_gp(spec, x, derive_seed(cfg.seed, {kGpLabels, seed_coord(c.rho), u64(s)}));
      const Dataset all = Dataset::scalar(x, y);
      const Dataset train = all.subset(train_idx);
      const Dataset test = all.subset(test_idx);
      if (!p) {
        p = build_transition(train, TransitionKind::cov_interp(cov, c.eta), 0);
        stat = stationary_distribution(*p);
      }
      const TDSolution td = td_closed_form(train, *p, *stat, c.gamma);
      const double a = linalg::rmse(test.features() * td.weights, test.y());
      const double b = linalg::rmse(test.features() * ols_min_norm(train), test.y());
      td_rmse.push_back(a);
      ols_rmse.push_back(b);
      wins += a < b ? 1 : 0;
    }
    const double sd_td = sd_of(td_rmse), sd_ols = sd_of(ols_rmse);
    Row r = coords(i);
    r.insert(r.end(), {mean_of(td_rmse), sd_td, mean_of(ols_rmse), sd_ols,
                       std::sqrt(0.5 * (sd_td * sd_td + sd_ols * sd_ols)),
                       static_cast<double>(wins) / static_cast<double>(cfg.seeds), std::string()});
    return {r};
  };
  run_cells(table, cells.size(), job, coords, cfg.threads);
  return table;
}

// ---------------------------------------------------------------- variance of the TD target

ResultTable run_variance_check(const ExperimentConfig& cfg) {
  ResultTable table({"rho", "sigma_eps", "gamma", "var_td", "var_td_se", "var_formula", "var_label", "z_score",
                     "within_3se", "argmin_gamma", "argmin_theory", "argmin_ok", "error"});
  std::vector<double> grid = cfg.gammas;
  std::sort(grid.begin(), grid.end());
  double spacing = 0.0;
  for (std::size_t k = 1; k < grid.size(); ++k) spacing = std::max(spacing, grid[k] - grid[k - 1]);

  const auto coords = [&](std::size_t i) -> Row { return {cfg.rhos[i], cfg.sigma_eps}; };
  const auto job = [&](std::size_t i) -> Rows {
    TargetPairSpec spec;
    spec.rho = cfg.rhos[i];
    spec.sigma_eps = cfg.sigma_eps;
    const auto pts = td_target_variance(spec, grid, cfg.draws, derive_seed(cfg.seed, {kVariance, seed_coord(spec.rho)}));
    std::size_t best = 0;
    for (std::size_t k = 1; k < pts.size(); ++k)
      if (pts[k].var_td < pts[best].var_td) best = k;
    const double theory = variance_minimizing_gamma(spec);
    const bool argmin_ok = std::abs(pts[best].gamma - theory) <= spacing + 1e-12;
    Rows rows;
    for (const auto& pt : pts) {
      const double diff = pt.var_td - pt.var_formula;
      const double z = pt.var_td_se > 0.0 ? diff / pt.var_td_se : (diff == 0.0 ? 0.0 : kNaN);
      const bool within = std::abs(diff) <= 3.0 * pt.var_td_se + 1e-12;
      rows.push_back({spec.rho, spec.sigma_eps, pt.gamma, pt.var_td, pt.var_td_se, pt.var_formula, pt.var_label, z,
                      flag(within), pts[best].gamma, theory, flag(argmin_ok), std::string()});
    }
    return rows;
  };
  run_cells(table, cfg.rhos.size(), job, coords, cfg.threads);
  return table;
}

// ---------------------------------------------------------------- certification

namespace {

// Unit-norm Gaussian features with labels from a linear logit model; the
// labels live in the link's label space.
Dataset certification_dataset(const LinkFunction& link, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd x = gaussian_design(kCertPoints, kCertDim, derive_seed(seed, {1}));
  x.rowwise().normalize();
  const double scale = link.tag() == LinkTag::Identity ? 1.0 : 0.5;
  VectorXd z = x * VectorXd::Constant(kCertDim, scale);
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) += 0.1 * rng.normal();
  VectorXd y(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) y(i) = link.forward(z(i));
  return Dataset::scalar(std::move(x), std::move(y));
}

// Largest gamma on a bisection grid with gamma L(gamma)^2 <= 0.9, where
// L(gamma) is the link's bi-Lipschitz constant over the logit range the
// projected iterates can reach at that discount.
double auto_gamma(const Dataset& data, const LinkFunction& link, double radius) {
  const VectorXd logits = link.inverse_rows(data.labels()).col(0);
  const double reach = radius * data.features().rowwise().norm().maxCoeff();
  const auto load = [&](double g) {
    double span = 0.0;
    for (Eigen::Index i = 0; i < logits.size(); ++i)
      for (Eigen::Index j = 0; j < logits.size(); ++j) span = std::max(span, std::abs(logits(i) - g * logits(j)));
    const double L = lipschitz_bound(link, -(reach + span), reach + span).L;
    return g * L * L;
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (load(mid) <= 0.9 ? lo : hi) = mid;
  }
  return lo;
}

MatrixXd random_start(Eigen::Index d, double radius, Rng& rng) {
  VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.normal();
  return v * (radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d)) / v.norm());
}

struct CertSetup {
  LinkFunction link;
  Dataset data;
  TransitionMatrix p;
  TDConfig td;
};

CertSetup certification_setup(const ExperimentConfig& cfg, std::size_t i) {
  const LinkFunction link(parse_link_tag(cfg.links[i]));
  require(!link.is_vector_valued(), ErrorKind::Configuration,
          "certification needs a scalar link (identity, sigmoid or exp)");
  const TransitionTag ptag = parse_transition_tag(pick(cfg.transitions, i));
  require(ptag != TransitionTag::CovInterp, ErrorKind::Configuration, "certification does not take cov-interp");
  Dataset data = certification_dataset(link, derive_seed(cfg.seed, {kCertData, static_cast<std::uint64_t>(link.tag())}));
  TransitionMatrix p = build_transition(data, TransitionKind::of(ptag), derive_seed(cfg.seed, {kCertTransition}));
  TDConfig td;
  td.link = link;
  td.projection_radius = cfg.radius;
  td.gamma = pick(cfg.gammas, i);
  if (std::isnan(td.gamma)) td.gamma = auto_gamma(data, link, cfg.radius);
  td.rng_seed = derive_seed(cfg.seed, {kCertRun, static_cast<std::uint64_t>(link.tag())});
  return CertSetup{link, std::move(data), std::move(p), td};
}

}  // namespace

ResultTable run_contraction(const ExperimentConfig& cfg) {
  ResultTable table({"link", "gamma", "lipschitz", "gamma_limit", "alpha", "omega_min", "omega_max", "bound",
                     "bound_max_eig", "max_ratio", "trials", "contraction_pass", "pass_max_eig", "fp_starts",
                     "fp_step", "fp_spread", "fp_unique", "error"});
  const auto coords = [&](std::size_t i) -> Row {
    const double g = pick(cfg.gammas, i);
    return {cfg.links[i], std::isnan(g) ? Cell(kNaN) : Cell(g)};
  };
  const auto job = [&](std::size_t i) -> Rows {
    const CertSetup su = certification_setup(cfg, i);
    const ContractionReport rep = certify_contraction(su.data, su.p, su.td, cfg.trials);
    const TheoryConstants& tc = rep.constants;

    // The prescribed step is far too small to reach 1e-12 in reasonable
    // time for steep links, so the uniqueness check iterates with a step
    // sized from the update's own Lipschitz constant.
    const StationaryDistribution d = stationary_distribution(su.p);
    const ExpectedUpdate op(su.data, su.p, d, su.link, su.td.gamma);
    TDConfig fp = su.td;
    fp.step_size = 1.0 / ((1.0 + su.td.gamma) * tc.omega_max * tc.lipschitz);
    Rng rng(derive_seed(cfg.seed, {kCertStarts, static_cast<std::uint64_t>(su.link.tag())}));
    std::vector<MatrixXd> points;
    for (int s = 0; s < cfg.fixed_point_starts; ++s)
      points.push_back(solve_fixed_point(op, fp, random_start(su.data.d(), cfg.radius, rng), 1e-12).weights);
    double spread = 0.0;
    for (const auto& w : points) spread = std::max(spread, (w - points.front()).norm());

    Row r{cfg.links[i], su.td.gamma};
    r.insert(r.end(), {tc.lipschitz, 1.0 / (tc.lipschitz * tc.lipschitz), tc.step_size, tc.omega_min, tc.omega_max,
                       rep.bound, rep.bound_max_eig, rep.max_ratio, std::int64_t{rep.trials}, flag(rep.pass),
                       flag(rep.pass_max_eig), std::int64_t{cfg.fixed_point_starts}, fp.step_size, spread,
                       flag(spread <= 1e-6), std::string()});
    return {r};
  };
  run_cells(table, cfg.links.size(), job, coords, cfg.threads);
  return table;
}

ResultTable run_sample_rate(const ExperimentConfig& cfg) {
  ResultTable table({"link", "gamma", "T", "seeds", "error_mean", "error_se", "bound", "below_bound", "sigma2_mc",
                     "sigma2_exact", "min_horizon", "slope", "slope_ok", "error"});
  const auto coords = [&](std::size_t i) -> Row {
    const double g = pick(cfg.gammas, i);
    return {cfg.links[i], std::isnan(g) ? Cell(kNaN) : Cell(g)};
  };
  const auto job = [&](std::size_t i) -> Rows {
    const CertSetup su = certification_setup(cfg, i);
    const SampleRateReport rep = certify_sample_rate(su.data, su.p, su.td, cfg.horizons, cfg.seeds);
    Rows rows;
    for (std::size_t k = 0; k < rep.horizons.size(); ++k) {
      rows.push_back({cfg.links[i], su.td.gamma, static_cast<std::int64_t>(rep.horizons[k]), std::int64_t{cfg.seeds},
                      rep.errors_by_T[k], rep.stderr_by_T[k], rep.bound_by_T[k],
                      flag(rep.errors_by_T[k] <= rep.bound_by_T[k]), rep.sigma2, rep.sigma2_exact, rep.min_horizon,
                      rep.slope, flag(rep.slope <= -0.4), std::string()});
    }
    return rows;
  };
  run_cells(table, cfg.links.size(), job, coords, cfg.threads);
  return table;
}

// ---------------------------------------------------------------- CSV fitting

namespace {

struct Split {
  MatrixXd x_train, x_test;
  VectorXd y_train, y_test;
};

// Shuffles, optionally subsamples, splits, then standardizes with training
// statistics and appends an intercept column.
Split make_split(const CsvDataset& src, const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto n_all = src.features.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_all));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng.engine());
  const Eigen::Index n = std::min<Eigen::Index>(n_all, cfg.subsample);
  const auto n_train = static_cast<Eigen::Index>(std::llround(cfg.train_fraction * static_cast<double>(n)));
  require(n_train >= 2 && n - n_train >= 1, ErrorKind::Configuration,
          "split leaves too few rows (" + std::to_string(n) + " usable)");
  const Eigen::Index d = src.features.cols();
  Split s;
  s.x_train.resize(n_train, d + 1);
  s.x_test.resize(n - n_train, d + 1);
  s.y_train.resize(n_train);
  s.y_test.resize(n - n_train);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src_row = order[static_cast<std::size_t>(i)];
    if (i < n_train) {
      s.x_train.row(i).head(d) = src.features.row(src_row);
      s.y_train(i) = src.target(src_row);
    } else {
      s.x_test.row(i - n_train).head(d) = src.features.row(src_row);
      s.y_test(i - n_train) = src.target(src_row);
    }
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    const double mu = s.x_train.col(j).mean();
    const double sd = std::sqrt((s.x_train.col(j).array() - mu).square().mean());
    const double div = sd > 0.0 ? sd : 1.0;
    s.x_train.col(j) = (s.x_train.col(j).array() - mu) / div;
    s.x_test.col(j) = (s.x_test.col(j).array() - mu) / div;
  }
  s.x_train.col(d).setOnes();
  s.x_test.col(d).setOnes();
  return s;
}

// Block covariance over the first n rows, allowing a short final block.
MatrixXd block_covariance_any(Eigen::Index n, Eigen::Index block, double rho) {
  const Eigen::Index padded = (n + block - 1) / block * block;
  return block_covariance(padded, block, rho).topLeftCorner(n, n);
}

double accuracy(const VectorXd& pred, const VectorXd& label) {
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) hits += (pred(i) >= 0.5) == (label(i) >= 0.5) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace

ResultTable fit_csv(const ExperimentConfig& cfg) {
  ResultTable table({"seed", "estimator", "metric", "value", "n_train", "n_test", "error"});
  const CsvDataset src = split_target(read_csv_file(*cfg.csv_path), cfg.target_col);
  const LinkFunction link(parse_link_tag(cfg.links.front()));
  require(!link.is_vector_valued(), ErrorKind::Configuration,
          "fit handles scalar targets; softmax needs one-hot labels, which a single target column cannot carry");
  const TransitionTag ptag = parse_transition_tag(cfg.transitions.front());
  const double gamma = cfg.gammas.front();
  const double rho = cfg.rhos.empty() ? 0.0 : cfg.rhos.front();
  const double eta = cfg.etas.empty() ? 0.5 : cfg.etas.front();
  const bool identity = link.tag() == LinkTag::Identity;

  const auto coords = [&](std::size_t s) -> Row { return {static_cast<std::int64_t>(s), std::string("all")}; };
  const auto job = [&](std::size_t si) -> Rows {
    const auto s = static_cast<std::uint64_t>(si);
    const Split sp = make_split(src, cfg, derive_seed(cfg.seed, {kFitSplit, s}));
    const Eigen::Index n_train = sp.x_train.rows();
    const auto n_tr = static_cast<std::int64_t>(n_train);
    const auto n_te = static_cast<std::int64_t>(sp.x_test.rows());

    std::optional<MatrixXd> noise_cov;
    MatrixXd structure = MatrixXd::Identity(n_train, n_train);
    if (cfg.noise_cov == NoiseCov::Block) structure = block_covariance_any(n_train, cfg.block_size, rho);
    if (cfg.noise_cov != NoiseCov::None) noise_cov = cfg.noise_scale * cfg.noise_scale * structure;
    VectorXd y_train = sp.y_train;
    if (cfg.noise_cov != NoiseCov::None && cfg.noise_scale > 0.0) {
      y_train += correlated_noise_for(y_train, structure, cfg.noise_scale, derive_seed(cfg.seed, {kFitNoise, s}))
                     .epsilon;
    }
    const Dataset train = Dataset::scalar(sp.x_train, y_train);

    const TransitionMatrix p =
        ptag == TransitionTag::CovInterp
            ? build_transition(train,
                               TransitionKind::cov_interp(
                                   cfg.noise_cov == NoiseCov::Block ? structure
                                                                    : block_covariance_any(n_train, cfg.block_size, rho),
                                   eta),
                               0)
            : build_transition(train, TransitionKind::of(ptag), derive_seed(cfg.seed, {kFitTransition, s}));

    Rows rows;
    const auto emit = [&](const std::string& name, const std::function<VectorXd()>& fit) {
      try {
        const VectorXd pred = fit();
        if (identity || link.tag() == LinkTag::Exp)
          rows.push_back({std::int64_t(si), name, std::string("rmse"), linalg::rmse(pred, sp.y_test), n_tr, n_te,
                          std::string()});
        else
          rows.push_back({std::int64_t(si), name, std::string("accuracy"), accuracy(pred, sp.y_test), n_tr, n_te,
                          std::string()});
      } catch (const std::exception& e) {
        rows.push_back({std::int64_t(si), name, std::string(identity ? "rmse" : "accuracy"), kNaN, n_tr, n_te,
                        describe(e)});
      }
    };
    const auto predict = [&](const VectorXd& w) -> VectorXd {
      VectorXd z = sp.x_test * w;
      if (!identity)
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = link.forward(z(i));
      return z;
    };
    const auto iterative = [&](double g) {
      return [&, g]() -> VectorXd {
        TDConfig td;
        td.gamma = g;
        td.link = link;
        td.steps = cfg.steps;
        td.step_size = 1.0 / sp.x_train.rowwise().squaredNorm().maxCoeff();
        td.projection_radius = default_projection_radius(train);
        td.rng_seed = derive_seed(cfg.seed, {kFitRun, s, seed_coord(g)});
        const TDTrajectory traj = run_td(train, p, td, 0);
        return predict(traj.final_weights.col(0));
      };
    };

    if (identity) {
      emit("td", [&] { return predict(td_closed_form(train, p, gamma).weights); });
      emit("ols", [&] { return predict(ols_min_norm(train)); });
      if (noise_cov && cfg.noise_scale > 0.0) emit("gls", [&] { return predict(gls(train, *noise_cov)); });
      if (n_train > train.d()) emit("fgls", [&] { return predict(fgls(train)); });
      emit("td_iter", iterative(gamma));
    } else {
      emit("td_iter", iterative(gamma));
      emit("sgd", iterative(0.0));
    }
    return rows;
  };
  run_cells(table, static_cast<std::size_t>(cfg.seeds), job, coords, cfg.threads);
  return table;
}

// ---------------------------------------------------------------- dispatch

ResultTable run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  ResultTable table = [&] {
    switch (cfg.experiment) {
      case ExperimentTag::MinNormTable: return run_min_norm_table(cfg);
      case ExperimentTag::GpSweep: return run_gp_sweep(cfg);
      case ExperimentTag::VarianceCheck: return run_variance_check(cfg);
      case ExperimentTag::Contraction: return run_contraction(cfg);
      case ExperimentTag::SampleRate: return run_sample_rate(cfg);
      case ExperimentTag::FitCsv: return fit_csv(cfg);
    }
    fail(ErrorKind::InvalidInput, "unknown experiment");
  }();
  auto& meta = table.meta();
  meta["experiment"] = std::string(to_string(cfg.experiment));
  meta["git_describe"] = TDSL_GIT_DESCRIBE;
  meta["seed_base"] = cfg.seed;
  meta["seeds"] = cfg.seeds;
  meta["kernels"] = kernels::active().name;
  meta["config"] = cfg.to_json();
  if (cfg.record_time) {
    meta["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return table;
}

void write_synthetic_csv(const std::string& path, int n, int d, double noise_sd, std::uint64_t seed) {
  require(n >= 2 && d >= 1, ErrorKind::Configuration, "synthetic CSV needs n >= 2 and d >= 1");
  const Dataset data = linear_dataset(n, d, noise_sd, seed);
  MatrixXd values(n, d + 1);
  values << data.features(), data.y();
  std::vector<std::string> header;
  for (int j = 0; j < d; ++j) header.push_back("x" + std::to_string(j));
  header.emplace_back("y");
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::InvalidInput, "cannot open '" + path + "' for writing");
  write_csv(f, header, values);
}

}  // namespace tdsl
