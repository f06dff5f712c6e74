#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "eulerbound/chains.hpp"
#include "eulerbound/error.hpp"
#include "eulerbound/metrics.hpp"

using namespace eb;

namespace {

DriftModel dw_model() {
  GridSpec g;
  return certify_constants(make_double_well(0.002, std::sqrt(0.002), 1, 1.0, 0.002, 0.0), 0.002, g);
}

DriftModel dw_sum() {
  std::vector<Component> comps;
  for (int i = 0; i < 4; ++i) comps.push_back({0.25, 0.0, {i % 2 ? -0.001 : 0.001}});
  GridSpec g;
  return certify_constants(make_finite_sum(BaseDrift::TruncatedDoubleWell, 0.002, std::sqrt(0.002), 1, comps, 1, 0.002, 0),
                           0.002, g);
}

ChainConfig config(double h, std::uint64_t steps, std::size_t replicas) {
  ChainConfig c;
  c.h = h;
  c.steps = steps;
  c.replicas = replicas;
  c.seed = 42;
  c.record_every = 0;
  return c;
}

}  // namespace

TEST_CASE("single Euler step") {
  CHECK(euler_step(make_ou(1), Vec{0.0}, 0.1, Vec{0.0})[0] == 0.0);
  CHECK(euler_step(make_ou(1), Vec{1.0}, 0.1, Vec{1.0})[0] == doctest::Approx(0.9 + std::sqrt(0.1)));
}

TEST_CASE("OU stationary variance") {
  const double h = 0.1;
  const auto run = run_euler(make_ou(1), config(h, 300, 100000));
  Vec sq(run.terminal.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = run.terminal[i] * run.terminal[i];
  const auto s = summarize(sq);
  CHECK(std::fabs(s.mean - 1.0 / (2.0 - h)) <= 3.0 * s.se);
}

TEST_CASE("runs are deterministic") {
  const auto a = run_euler(dw_model(), config(0.003, 50, 1000));
  const auto b = run_euler(dw_model(), config(0.003, 50, 1000));
  CHECK(std::memcmp(a.terminal.data(), b.terminal.data(), a.terminal.size() * sizeof(double)) == 0);
}

TEST_CASE("full subsample is pathwise identical to the exact chain") {
  InaccurateDrift in;
  in.base = dw_sum();
  in.scheme = Scheme::WithoutReplacement;
  in.s = in.base.m();
  const auto a = run_randomised_euler(in, config(0.003, 100, 500));
  const auto b = run_euler(in.base, config(0.003, 100, 500));
  CHECK(std::memcmp(a.terminal.data(), b.terminal.data(), a.terminal.size() * sizeof(double)) == 0);
}

TEST_CASE("randomised drift is unbiased at simulated states") {
  GridSpec g;
  const auto in = certify_inaccurate(dw_sum(), Scheme::WithReplacement, 1, 1.0, 0.003, g);
  const auto run = run_randomised_euler(in, config(0.003, 50, 20000));
  const Stream st(StreamId{7, 0, 0, 0});
  Vec res(20000);
  for (std::size_t r = 0; r < res.size(); ++r) {
    const Vec x{run.terminal[r]};
    res[r] = eval_inaccurate_drift(in, x, draw_subsample(in, st, r, tag::subsample))[0] - eval_drift(in.base, x)[0];
  }
  const auto s = summarize(res);
  CHECK(std::fabs(s.mean) <= 3.0 * s.se);
}

TEST_CASE("coupled ULA against the refined chain") {
  const DriftModel dw = dw_model();
  MomentInputs mi;
  const auto g = build_ledger(dw, std::nullopt, mi);
  auto cfg = config(0.25 * g.h0, 400, 2000);
  cfg.record_every = 100;
  CoupledOptions opt;
  opt.ledger = &g;
  const auto run = run_coupled_ula_vs_sde(dw, cfg, opt);
  REQUIRE(run.records.size() >= 2);
  CHECK(run.records.front().Ef_distance == 0.0);
  for (const auto& r : run.records) {
    CHECK(r.Ef_distance <= r.bound_value + 3.0 * r.Ef_se);
    CHECK(std::isfinite(r.W2_hat));
  }
  auto bad = cfg;
  bad.h = 2.0 * g.h0;
  CHECK_THROWS_AS(run_coupled_ula_vs_sde(dw, bad, opt), Error);
}

TEST_CASE("constant schedule reproduces the fixed-step bound") {
  const DriftModel dw = dw_model();
  MomentInputs mi;
  const auto g = build_ledger(dw, std::nullopt, mi);
  const double h = 0.25 * g.h0;
  auto cfg = config(h, 40, 200);
  cfg.record_every = 10;
  CoupledOptions opt;
  opt.ledger = &g;
  const std::vector<double> sched(40, h);
  const auto a = run_varying_step(dw, cfg, sched, opt);
  const auto b = run_coupled_ula_vs_sde(dw, cfg, opt);
  REQUIRE(a.records.size() == b.records.size());
  const double ef0 = b.records.front().Ef_distance;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const double k = static_cast<double>(a.records[i].k);
    const double q = std::pow(1.0 - g.c * h, k);
    // finite geometric sum; the fixed-step bound uses its limit sqrt(h)/c
    const double finite = q * ef0 + g.C_ult * std::pow(h, 1.5) * (1.0 - q) / (g.c * h);
    CHECK(a.records[i].bound_value == doctest::Approx(finite).epsilon(1e-10));
    CHECK(a.records[i].bound_value <= b.records[i].bound_value * (1.0 + 1e-12));
  }
  const auto rec = varying_step_bound(g, sched, 1.0);
  CHECK(rec.back().contraction_product == doctest::Approx(std::pow(1.0 - g.c * h, 40.0)).epsilon(1e-13));
}

TEST_CASE("SG pair with zero estimator variance stays merged") {
  InaccurateDrift in;
  in.base = dw_sum();
  in.scheme = Scheme::WithoutReplacement;
  in.s = in.base.m();
  in.sigma = 0.0;
  in.alpha = 1.0;
  in.alpha_c = 1.0;
  in.bar_L = in.base.lipschitz_L;
  in.bar_K = in.base.contraction_K;
  in.bar_R = in.base.radius_R;
  MomentInputs mi;
  const auto g = build_ledger(in.base, extras_from(in), mi);
  auto cfg = config(0.25 * g.h0, 200, 500);
  cfg.record_every = 50;
  CoupledOptions opt;
  opt.ledger = &g;
  const auto run = run_coupled_sg_pair(in, cfg, opt);
  for (const auto& r : run.records) CHECK(r.Ef_distance == 0.0);
}

TEST_CASE("coarse increment") {
  const Stream st(StreamId{3, 0, 0, 0});
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const double z1 = st.normal(k, 0, tag::noise), z2 = st.normal(k, 1, tag::noise);
    const double zc = (z1 + z2) * (1.0 / std::sqrt(2.0));
    CHECK(std::fabs(zc * std::sqrt(2.0) - (z1 + z2)) <= 4.0 * std::numeric_limits<double>::epsilon() * std::fabs(z1 + z2));
  }
}

TEST_CASE("level pair starts merged and its fine law matches a plain run") {
  const DriftModel dw = dw_model();
  LevelDrift src;
  src.exact = &dw;
  LevelConfig lc;
  lc.h = 0.004;
  lc.steps = 100;
  lc.replicas = 20000;
  lc.seed = 5;
  lc.coupling = CouplingParams{lc.h, 0.05, 0.2};
  lc.record_every = 10;
  lc.keep_terminal = true;
  const auto r = run_mlmc_level_pair(src, lc);
  REQUIRE(!r.records.empty());
  CHECK(r.records.front().mean_distance == 0.0);
  auto cc = config(lc.h, lc.steps, 20000);
  cc.seed = 99;
  const auto plain = run_euler(dw, cc);
  CHECK(ks_two_sample(r.fine_terminal, plain.terminal).pass);
  lc.steps = 101;
  CHECK_THROWS_AS(run_mlmc_level_pair(src, lc), Error);
}
