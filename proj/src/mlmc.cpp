// SPDX-License-Identifier: Apache-2.0
#include "eulerbound/mlmc.hpp"

#include <algorithm>
#include <cmath>

#include "eulerbound/error.hpp"

namespace eb {

std::uint64_t steps_for(double T, double h) {
  if (!(T > 0.0) || !(h > 0.0)) fail(ErrorCode::Config, "horizon and step must be positive");
  const double q = T / h;
  const double k = std::round(q);
  if (k < 1.0 || std::fabs(q - k) > 1e-9 * std::max(1.0, q)) fail(ErrorCode::Config, "horizon must be a multiple of the step");
  return static_cast<std::uint64_t>(k);
}

namespace {

LevelConfig level_config(double h, std::uint64_t steps, std::size_t N, const Payoff& g, const InitialSpec& init,
                         const CouplingParams& coupling, std::uint64_t seed, std::uint64_t experiment, std::size_t level) {
  LevelConfig lc;
  lc.h = h;
  lc.steps = steps;
  lc.replicas = N;
  lc.payoff = g;
  lc.init = init;
  lc.coupling = coupling;
  lc.seed = seed;
  lc.experiment = experiment;
  lc.level = level;
  return lc;
}

LevelPairResult run_level(const LevelDrift& drift, double h0, double T, std::size_t level, std::size_t N,
                          const Payoff& g, const InitialSpec& init, const CouplingParams& coupling, std::uint64_t seed,
                          std::uint64_t experiment) {
  const double h = h0 * std::ldexp(1.0, -static_cast<int>(level));
  const auto lc = level_config(h, steps_for(T, h), N, g, init, coupling, seed, experiment, level);
  return level == 0 ? run_mlmc_level0(drift, lc) : run_mlmc_level_pair(drift, lc);
}

}  // namespace

McResult mc_estimate(const LevelDrift& drift, double h, double T, std::size_t N, const Payoff& g,
                     const InitialSpec& init, std::uint64_t seed, std::uint64_t experiment) {
  if (N < 2) fail(ErrorCode::Config, "need at least two samples");
  const auto lc = level_config(h, steps_for(T, h), N, g, init, CouplingParams{h}, seed, experiment, 0);
  const auto r = run_mlmc_level0(drift, lc);
  McResult out;
  out.estimate = r.mean_fine;
  out.variance = r.var_fine;
  out.se = r.se_diff;
  out.cost = r.cost;
  out.samples = N;
  return out;
}

MlmcResult mlmc_estimate(const LevelDrift& drift, const MlmcPlan& plan) {
  if (plan.samples.size() != plan.max_level + 1) fail(ErrorCode::Config, "need one sample count per level");
  MlmcResult out;
  for (std::size_t l = 0; l <= plan.max_level; ++l) {
    if (plan.samples[l] < 2) fail(ErrorCode::Config, "each level needs at least two samples");
    const auto r = run_level(drift, plan.h0, plan.T, l, plan.samples[l], plan.payoff, plan.init, plan.coupling,
                             plan.seed, plan.experiment);
    MlmcLevel lv;
    lv.level = l;
    lv.h = r.h;
    lv.samples = plan.samples[l];
    lv.mean = r.mean_diff;
    lv.variance = r.var_diff;
    lv.cost = r.cost;
    out.estimate += lv.mean;
    out.estimator_variance += lv.variance / static_cast<double>(lv.samples);
    out.total_cost += lv.cost;
    out.levels.push_back(lv);
  }
  out.se = std::sqrt(out.estimator_variance);
  return out;
}

std::vector<std::size_t> allocate_levels(double eps, std::span<const double> variances, std::span<const double> costs) {
  if (!(eps > 0.0)) fail(ErrorCode::Domain, "target accuracy must be positive");
  if (variances.empty() || variances.size() != costs.size()) fail(ErrorCode::Domain, "need matching variances and costs");
  double sum = 0.0;
  for (std::size_t l = 0; l < variances.size(); ++l) {
    if (!(variances[l] > 0.0) || !(costs[l] > 0.0)) fail(ErrorCode::Domain, "variances and costs must be positive");
    sum += std::sqrt(variances[l] * costs[l]);
  }
  std::vector<std::size_t> N(variances.size());
  for (std::size_t l = 0; l < variances.size(); ++l) {
    const double n = std::ceil(2.0 / (eps * eps) * std::sqrt(variances[l] / costs[l]) * sum);
    N[l] = std::max<std::size_t>(2, static_cast<std::size_t>(n));
  }
  return N;
}

SweepResult complexity_sweep(const LevelDrift& drift, const SweepConfig& cfg) {
  if (cfg.eps.empty()) fail(ErrorCode::Config, "empty accuracy grid");
  if (!(cfg.lambda > 0.0)) fail(ErrorCode::Config, "horizon rate must be positive");
  SweepResult out;
  std::vector<RatePoint> mc_pts, ml_pts;
  for (double eps : cfg.eps) {
    if (!(eps > 0.0 && eps < 1.0)) fail(ErrorCode::Config, "accuracy targets must lie in (0, 1)");
    SweepRow row;
    row.eps = eps;
    row.T = cfg.h0 * std::ceil(std::log(1.0 / eps) / cfg.lambda / cfg.h0);
    std::vector<double> means, vars, costs;
    double var_fine_last = 0.0;
    bool converged = false;
    for (std::size_t l = 0; l < cfg.max_levels; ++l) {
      const auto r = run_level(drift, cfg.h0, row.T, l, cfg.pilot_samples, cfg.payoff, cfg.init, cfg.coupling,
                               cfg.seed, cfg.experiment);
      MlmcLevel lv;
      lv.level = l;
      lv.h = r.h;
      lv.samples = cfg.pilot_samples;
      lv.mean = r.mean_diff;
      lv.variance = r.var_diff;
      lv.cost = r.cost / static_cast<double>(cfg.pilot_samples);
      row.pilot.push_back(lv);
      means.push_back(r.mean_diff);
      vars.push_back(std::max(r.var_diff, 1e-300));
      costs.push_back(lv.cost);
      var_fine_last = r.var_fine;
      // weak order one: m_j ~ C h_j, C fitted by least squares over the correction levels; the
      // remaining bias after level l is then about |C| h_l
      double num = 0.0, den = 0.0;
      for (std::size_t j = 1; j <= l; ++j) {
        num += means[j] * row.pilot[j].h;
        den += row.pilot[j].h * row.pilot[j].h;
      }
      if (l >= 2 && std::fabs(num / den) * row.pilot[l].h <= eps / std::sqrt(2.0)) {
        converged = true;
        break;
      }
    }
    row.reachable = converged;
    row.finest_level = row.pilot.size() - 1;
    const auto N = allocate_levels(eps, vars, costs);
    for (std::size_t l = 0; l < N.size(); ++l) row.cost_mlmc += static_cast<double>(N[l]) * costs[l];
    const double h_fine = row.pilot.back().h;
    const double n_mc = std::max(2.0, std::ceil(2.0 * var_fine_last / (eps * eps)));
    row.cost_mc = n_mc * static_cast<double>(steps_for(row.T, h_fine)) * drift.unit_cost();
    if (row.reachable) {
      mc_pts.push_back({eps, row.cost_mc});
      ml_pts.push_back({eps, row.cost_mlmc});
    }
    out.rows.push_back(std::move(row));
  }
  if (mc_pts.size() >= 3) {
    out.mc_fit = rate_fit(mc_pts);
    out.mlmc_fit = rate_fit(ml_pts);
    out.fitted = true;
  }
  return out;
}

}  // namespace eb
