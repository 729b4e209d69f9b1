// SPDX-License-Identifier: Apache-2.0
// Command-line front end for the experiment harness.

#include <CLI11.hpp>
#include <cmath>
#include <iostream>
#include <limits>

#include "tdsl/error.hpp"
#include "tdsl/harness.hpp"
#include "tdsl/kernels.hpp"

namespace {

struct Options {
  tdsl::ExperimentConfig cfg;
  std::vector<std::string> gammas;
  std::string noise_cov = "none";
};

double parse_gamma(const std::string& s) {
  if (s == "auto") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size())
    tdsl::fail(tdsl::ErrorKind::InvalidInput, "--gamma expects numbers or 'auto', got '" + s + "'");
  return v;
}

CLI::App* add_experiment(CLI::App& app, tdsl::ExperimentTag tag, const std::string& help, Options& o) {
  o.cfg = tdsl::ExperimentConfig::defaults(tag);
  auto* sub = app.add_subcommand(std::string(tdsl::to_string(tag)), help);
  auto& c = o.cfg;
  sub->add_option("--seed", c.seed, "base seed")->capture_default_str();
  sub->add_option("--seeds", c.seeds, "repetitions per cell")->capture_default_str();
  sub->add_option("--out", c.output_path, "output CSV (default: stdout)");
  sub->add_option("--threads", c.threads, "worker threads (0 = all cores)")->capture_default_str();
  sub->add_flag("--record-time", c.record_time, "add wall time to the metadata header");

  using T = tdsl::ExperimentTag;
  if (tag == T::MinNormTable || tag == T::GpSweep)
    sub->add_option("--dims", c.dims, "feature dimensions")->delimiter(',')->capture_default_str();
  if (tag == T::GpSweep || tag == T::VarianceCheck || tag == T::FitCsv)
    sub->add_option("--rho", c.rhos, "correlation coefficients")->delimiter(',')->capture_default_str();
  if (tag == T::GpSweep || tag == T::FitCsv)
    sub->add_option("--eta", c.etas, "covariance interpolation weights")->delimiter(',')->capture_default_str();
  sub->add_option("--gamma", o.gammas, "discount factors ('auto' derives one below 1/L^2)")->delimiter(',');
  if (tag == T::MinNormTable || tag == T::Contraction || tag == T::SampleRate || tag == T::FitCsv)
    sub->add_option("--p", c.transitions, "transition designs: uniform|random|deficient|close|far|cov-interp")
        ->delimiter(',')
        ->capture_default_str();
  if (tag == T::Contraction || tag == T::SampleRate || tag == T::FitCsv)
    sub->add_option("--link", c.links, "link functions: identity|sigmoid|exp|softmax")
        ->delimiter(',')
        ->capture_default_str();
  if (tag == T::Contraction || tag == T::SampleRate) {
    sub->add_option("--radius", c.radius, "projection radius")->capture_default_str();
    sub->add_option("--trials", c.trials, "random pairs for the contraction check")->capture_default_str();
    sub->add_option("--starts", c.fixed_point_starts, "starts for the fixed-point check")->capture_default_str();
    sub->add_option("--horizons", c.horizons, "sample budgets T")->delimiter(',')->capture_default_str();
  }
  if (tag == T::VarianceCheck) {
    sub->add_option("--draws", c.draws, "Monte Carlo draws")->capture_default_str();
    sub->add_option("--sigma-eps", c.sigma_eps, "noise SD of the next-state estimate")->capture_default_str();
  }
  if (tag == T::FitCsv) {
    sub->add_option("--csv", c.csv_path, "input CSV with a header row")->required();
    sub->add_option("--target-col", c.target_col, "target column name (default: last column)");
    sub->add_option("--noise-scale", c.noise_scale, "scale of injected training-target noise")->capture_default_str();
    sub->add_option("--noise-cov", o.noise_cov, "injected noise covariance: none|iid|block")->capture_default_str();
    sub->add_option("--block-size", c.block_size, "block size for block noise")->capture_default_str();
    sub->add_option("--train-fraction", c.train_fraction, "training share")->capture_default_str();
    sub->add_option("--subsample", c.subsample, "maximum rows used")->capture_default_str();
    sub->add_option("--steps", c.steps, "iterative TD steps")->capture_default_str();
  }
  return sub;
}

int run(Options& o) {
  auto& c = o.cfg;
  if (!o.gammas.empty()) {
    c.gammas.clear();
    for (const auto& g : o.gammas) c.gammas.push_back(parse_gamma(g));
  }
  c.noise_cov = tdsl::parse_noise_cov(o.noise_cov);
  const tdsl::ResultTable table = tdsl::run_experiment(c);
  if (c.output_path.empty())
    table.write(std::cout);
  else
    table.write_file(c.output_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TD learning for supervised learning: experiment runner"};
  app.require_subcommand(1);
  std::string isa;
  app.add_option("--kernels", isa, "force a kernel set: scalar|avx2");

  Options min_norm, gp, variance, contraction, rate, fit;
  auto* s_min = add_experiment(app, tdsl::ExperimentTag::MinNormTable, "distance between TD and OLS min-norm solutions", min_norm);
  auto* s_gp = add_experiment(app, tdsl::ExperimentTag::GpSweep, "TD vs OLS under block-correlated GP noise", gp);
  auto* s_var = add_experiment(app, tdsl::ExperimentTag::VarianceCheck, "variance of the bootstrapped target vs gamma", variance);
  auto* s_con = add_experiment(app, tdsl::ExperimentTag::Contraction, "certify contraction of the expected update", contraction);
  auto* s_rate = add_experiment(app, tdsl::ExperimentTag::SampleRate, "certify the 1/sqrt(T) sample rate", rate);
  auto* s_fit = add_experiment(app, tdsl::ExperimentTag::FitCsv, "fit estimators to a CSV dataset", fit);

  auto* s_synth = app.add_subcommand("synth-csv", "write a synthetic linear dataset as CSV");
  std::string synth_out;
  int synth_n = 500, synth_d = 10;
  double synth_noise = 0.0;
  std::uint64_t synth_seed = 0;
  s_synth->add_option("--out", synth_out, "output path")->required();
  s_synth->add_option("--n", synth_n, "rows")->capture_default_str();
  s_synth->add_option("--d", synth_d, "feature columns")->capture_default_str();
  s_synth->add_option("--noise", synth_noise, "label noise SD")->capture_default_str();
  s_synth->add_option("--seed", synth_seed, "seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (!isa.empty()) tdsl::kernels::select(tdsl::kernels::parse_isa(isa));
    if (s_min->parsed()) return run(min_norm);
    if (s_gp->parsed()) return run(gp);
    if (s_var->parsed()) return run(variance);
    if (s_con->parsed()) return run(contraction);
    if (s_rate->parsed()) return run(rate);
    if (s_fit->parsed()) return run(fit);
    if (s_synth->parsed()) {
      tdsl::write_synthetic_csv(synth_out, synth_n, synth_d, synth_noise, synth_seed);
      return 0;
    }
  } catch (const tdsl::Error& e) {
    std::cerr << "error (" << tdsl::to_string(e.kind()) << "): " << e.what() << '\n';
    return e.is_numeric() ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
