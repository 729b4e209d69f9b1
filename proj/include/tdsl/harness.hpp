// SPDX-License-Identifier: Apache-2.0
#pragma once

// Declarative experiment sweeps. Each runner expands its configuration into
// independent cells, evaluates them (in parallel when threads allow) with a
// per-cell seed derived from the base seed and the cell coordinates, and
// returns the rows in a fixed order. A failing cell becomes a row carrying
// the error kind and message instead of aborting the sweep.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "tdsl/result_table.hpp"

namespace tdsl {

enum class ExperimentTag { MinNormTable, GpSweep, VarianceCheck, Contraction, SampleRate, FitCsv };

std::string_view to_string(ExperimentTag tag) noexcept;
ExperimentTag parse_experiment_tag(std::string_view name);

enum class NoiseCov { None, Iid, Block };

std::string_view to_string(NoiseCov cov) noexcept;
NoiseCov parse_noise_cov(std::string_view name);

struct ExperimentConfig {
  ExperimentTag experiment = ExperimentTag::MinNormTable;

  std::vector<int> dims;
  std::vector<double> rhos;
  std::vector<double> etas;
  std::vector<double> gammas;  // NaN entries mean "derive from the assumptions"
  std::vector<std::string> transitions;
  std::vector<std::string> links;

  int seeds = 10;
  std::uint64_t seed = 0;
  std::optional<std::string> csv_path;
  std::string target_col;
  std::string output_path;

  // fit
  NoiseCov noise_cov = NoiseCov::None;
  double noise_scale = 0.0;
  int block_size = 10;
  double train_fraction = 0.6;
  int subsample = 500;
  std::size_t steps = 100000;

  // certification
  int trials = 100;
  int fixed_point_starts = 10;
  double radius = 2.0;
  std::vector<std::size_t> horizons;

  // variance
  std::size_t draws = 100000;
  double sigma_eps = 0.5;

  bool record_time = false;
  unsigned threads = 0;  // 0 -> hardware concurrency

  /// Default sweep for one experiment.
  static ExperimentConfig defaults(ExperimentTag tag);

  void validate() const;
  nlohmann::json to_json() const;
};

/// Runs `count` jobs on up to `threads` workers; results come back in index
/// order regardless of scheduling.
template <class R>
std::vector<R> parallel_map(std::size_t count, const std::function<R(std::size_t)>& job, unsigned threads) {
  std::vector<R> out(count);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = job(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) out[i] = job(i);
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

ResultTable run_min_norm_table(const ExperimentConfig& cfg);
ResultTable run_gp_sweep(const ExperimentConfig& cfg);
ResultTable run_variance_check(const ExperimentConfig& cfg);
ResultTable run_contraction(const ExperimentConfig& cfg);
ResultTable run_sample_rate(const ExperimentConfig& cfg);
ResultTable fit_csv(const ExperimentConfig& cfg);

/// Validates, dispatches on cfg.experiment and fills the metadata header.
ResultTable run_experiment(const ExperimentConfig& cfg);

/// Noiseless or noisy linear data in CSV form (features x0..x{d-1}, target y).
void write_synthetic_csv(const std::string& path, int n, int d, double noise_sd, std::uint64_t seed);

}  // namespace tdsl
