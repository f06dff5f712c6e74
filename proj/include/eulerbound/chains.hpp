// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eulerbound/constants.hpp"
#include "eulerbound/coupling.hpp"
#include "eulerbound/drift.hpp"
#include "eulerbound/linalg.hpp"

namespace eb {

struct InitialSpec {
  enum class Kind { Point, Gaussian };
  Kind kind = Kind::Point;
  Vec mean;  // empty means the origin
  double stddev = 0.0;

  double second_moment(std::size_t d) const;
};

struct ChainConfig {
  double h = 0.1;
  std::uint64_t steps = 1;
  InitialSpec init;
  std::uint64_t seed = 0;
  std::uint64_t experiment = 0;
  std::uint64_t level = 0;
  std::size_t replicas = 1;
  // 0 records only k = 0 and the terminal step
  std::uint64_t record_every = 1;
};

// Fields that a runner does not compute stay at zero.
struct StepRecord {
  std::uint64_t k = 0;
  double t = 0.0;
  double mean = 0.0;           // ensemble mean of the first coordinate
  double second_moment = 0.0;  // E|X_k|^2
  double second_moment_se = 0.0;
  double ref_second_moment = 0.0;  // reference chain (SDE or exact-drift copy)
  double ref_second_moment_se = 0.0;
  double Ef_distance = 0.0;
  double Ef_se = 0.0;
  double coupled_W1 = 0.0;  // E|G - Y| under the coupling (upper bound on W1)
  double coupled_W2 = 0.0;
  double W1_hat = 0.0;  // empirical W between the two marginal ensembles
  double W2_hat = 0.0;
  double strong_error = 0.0;  // E|S_k - Y_{kh}|^2
  double strong_error_se = 0.0;
  double merge_fraction = 0.0;
  double bound_value = 0.0;
};

struct EnsembleRun {
  std::size_t dim = 1;
  std::size_t replicas = 0;
  std::vector<StepRecord> records;
  Vec terminal;            // replicas x dim, row major
  Vec reference_terminal;  // coupled runs only
  std::string w_estimator = "sorted";
};

// single steps for tests and examples
Vec euler_step(const DriftModel& model, std::span<const double> x, double h, std::span<const double> xi);
Vec randomised_euler_step(const InaccurateDrift& model, std::span<const double> x, const SubsampleDraw& u, double h,
                          std::span<const double> xi);

EnsembleRun run_euler(const DriftModel& model, const ChainConfig& cfg);
EnsembleRun run_randomised_euler(const InaccurateDrift& model, const ChainConfig& cfg);

struct CoupledOptions {
  std::optional<CouplingParams> coupling;  // m, H default to the ledger values when absent
  const ContractionLedger* ledger = nullptr;
  std::optional<DistanceFn> f;  // defaults to the ledger f
  unsigned refinement = 4;      // reference chain step h / 2^refinement
};

// G_k coupled to the reference Y through psi_{m,H}(Y_{kh}, G_k, Z_{k+1}); G_0 = Y_0
EnsembleRun run_coupled_ula_vs_sde(const DriftModel& model, const ChainConfig& cfg, const CoupledOptions& opt);

// G_k (exact drift) coupled to the randomised chain; G_0 = X_0
EnsembleRun run_coupled_sg_pair(const InaccurateDrift& model, const ChainConfig& cfg, const CoupledOptions& opt);

// decreasing step schedule; the reference runs at h_k / 2^refinement
EnsembleRun run_varying_step(const DriftModel& model, const ChainConfig& cfg, std::span<const double> schedule,
                             const CoupledOptions& opt);

// ---- MLMC level pair ----------------------------------------------------------

enum class PayoffKind { Identity, ClampedIdentity, SqrtOnePlusSquare, Square };

struct Payoff {
  PayoffKind kind = PayoffKind::SqrtOnePlusSquare;
  double clamp = 1.0;
  double operator()(std::span<const double> x) const;
};

std::string payoff_name(PayoffKind k);

// Either drift may be used; inaccurate takes precedence when set.
struct LevelDrift {
  const DriftModel* exact = nullptr;
  const InaccurateDrift* inaccurate = nullptr;
  const DriftModel& model() const;
  // drift-component evaluations per drift call
  double unit_cost() const;
};

struct LevelConfig {
  double h = 0.1;  // fine step; the coarse step is 2h
  std::uint64_t steps = 2;  // fine steps, even
  InitialSpec init;
  std::uint64_t seed = 0;
  std::uint64_t experiment = 0;
  std::uint64_t level = 1;
  std::size_t replicas = 1;
  CouplingParams coupling;  // coupling.h is overwritten with h
  Payoff payoff;
  std::optional<DistanceFn> f;
  std::uint64_t record_every = 0;  // fine steps; 0 records k = 0 and the terminal step
  bool keep_terminal = false;
};

struct LevelRecord {
  std::uint64_t k = 0;
  double var_diff = 0.0;       // Var[g(G_k) - g(Xc_k)]
  double var_sync_diff = 0.0;  // Var[g(Xf_k) - g(Xc_k)]
  double mean_distance = 0.0;     // E|G_k - Xc_k|
  double mean_sq_distance = 0.0;  // E|G_k - Xc_k|^2
  double Ef_distance = 0.0;
};

struct LevelPairResult {
  std::uint64_t level = 0;
  double h = 0.0;
  std::size_t replicas = 0;
  double mean_fine = 0.0;
  double mean_coarse = 0.0;
  double mean_diff = 0.0;
  double var_diff = 0.0;
  double se_diff = 0.0;
  double var_sync_diff = 0.0;
  double var_fine = 0.0;
  double mean_sq_distance = 0.0;
  double cost = 0.0;  // drift-component evaluations for G, S and the coarse chain
  std::vector<LevelRecord> records;
  Vec fine_terminal;  // G, replicas x dim (keep_terminal)
  Vec coarse_terminal;
};

// Fine chain G coupled via the inaccurate mirror coupling to the auxiliary S
// that restarts from the coarse chain at every even step.
LevelPairResult run_mlmc_level_pair(const LevelDrift& drift, const LevelConfig& cfg);

// Level 0 of the telescope: a single Euler chain with step h.
LevelPairResult run_mlmc_level0(const LevelDrift& drift, const LevelConfig& cfg);

}  // namespace eb
