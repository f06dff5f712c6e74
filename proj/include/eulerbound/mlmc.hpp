// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "eulerbound/chains.hpp"
#include "eulerbound/metrics.hpp"

namespace eb {

// h^l = h0 2^-l; T must be a multiple of h0
struct MlmcPlan {
  std::size_t max_level = 0;
  double h0 = 0.1;
  double T = 1.0;
  std::vector<std::size_t> samples;  // N_l, one per level
  Payoff payoff;
  InitialSpec init;
  CouplingParams coupling;
  std::uint64_t seed = 0;
  std::uint64_t experiment = 0;
};

struct McResult {
  double estimate = 0.0;
  double variance = 0.0;  // sample variance of g
  double se = 0.0;
  double cost = 0.0;  // N T/h drift-component evaluations
  std::size_t samples = 0;
};

McResult mc_estimate(const LevelDrift& drift, double h, double T, std::size_t N, const Payoff& g,
                     const InitialSpec& init, std::uint64_t seed, std::uint64_t experiment = 0);

struct MlmcLevel {
  std::size_t level = 0;
  double h = 0.0;
  std::size_t samples = 0;
  double mean = 0.0;
  double variance = 0.0;
  double cost = 0.0;
};

struct MlmcResult {
  double estimate = 0.0;
  double estimator_variance = 0.0;  // sum_l V_l / N_l
  double se = 0.0;
  double total_cost = 0.0;
  std::vector<MlmcLevel> levels;
};

std::uint64_t steps_for(double T, double h);

MlmcResult mlmc_estimate(const LevelDrift& drift, const MlmcPlan& plan);

// N_l = ceil(2/eps^2 sqrt(V_l/C_l) sum_k sqrt(V_k C_k)), at least 2
std::vector<std::size_t> allocate_levels(double eps, std::span<const double> variances, std::span<const double> costs);

struct SweepConfig {
  std::vector<double> eps;
  double h0 = 0.5;
  double lambda = 1.0;  // horizon T = log(1/eps)/lambda, rounded up to a multiple of h0
  std::size_t pilot_samples = 20000;
  std::size_t max_levels = 10;
  Payoff payoff;
  InitialSpec init;
  CouplingParams coupling;
  std::uint64_t seed = 0;
  std::uint64_t experiment = 0;
};

struct SweepRow {
  double eps = 0.0;
  double T = 0.0;
  std::size_t finest_level = 0;
  double cost_mlmc = 0.0;
  double cost_mc = 0.0;
  bool reachable = true;
  std::vector<MlmcLevel> pilot;  // per-level variance and cost per sample
};

struct SweepResult {
  std::vector<SweepRow> rows;
  RateFit mc_fit;
  RateFit mlmc_fit;
  bool fitted = false;
};

SweepResult complexity_sweep(const LevelDrift& drift, const SweepConfig& cfg);

}  // namespace eb
