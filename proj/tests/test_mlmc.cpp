#include <cmath>
#include <vector>

#include "doctest.h"
#include "eulerbound/error.hpp"
#include "eulerbound/mlmc.hpp"

using namespace eb;

TEST_CASE("allocation") {
  const std::vector<double> v{3.0}, c{1.0};
  CHECK(allocate_levels(0.1, v, c)[0] == 600);
  const std::vector<double> v2{1.0, 0.5}, c2{1.0, 2.0};
  const auto N = allocate_levels(0.01, v2, c2);
  CHECK(double(N[1]) / double(N[0]) == doctest::Approx(0.5).epsilon(1e-4));
  CHECK_THROWS_AS(allocate_levels(0.1, std::vector<double>{0.0}, c), Error);
}

TEST_CASE("synthetic complexity exponent") {
  // V_l = 2^{-beta l}, C_l = 2^l, L chosen by weak order one
  const double beta = 0.5;
  std::vector<RatePoint> pts;
  for (double eps : {1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4}) {
    const int L = static_cast<int>(std::ceil(std::log2(1.0 / eps)));
    std::vector<double> v, c;
    for (int l = 0; l <= L; ++l) {
      v.push_back(std::pow(2.0, -beta * l));
      c.push_back(std::pow(2.0, l));
    }
    const auto N = allocate_levels(eps, v, c);
    double cost = 0;
    for (std::size_t l = 0; l < N.size(); ++l) cost += N[l] * c[l];
    pts.push_back({eps, cost});
  }
  const auto f = rate_fit(pts);
  CHECK(f.slope == doctest::Approx(-(2.0 + (1.0 - beta))).epsilon(0.05));
}

TEST_CASE("Monte Carlo estimator") {
  const DriftModel ou = make_ou(1);
  LevelDrift src;
  src.exact = &ou;
  InitialSpec init;
  const auto r = mc_estimate(src, 0.1, 20.0, 100000, Payoff{PayoffKind::Square}, init, 3);
  CHECK(std::fabs(r.estimate - 1.0 / 1.9) <= 3.0 * r.se);
  CHECK(r.cost == doctest::Approx(100000.0 * 200.0));
  const auto cst = mc_estimate(src, 0.1, 1.0, 100, Payoff{PayoffKind::ClampedIdentity, 0.0}, init, 3);
  CHECK(cst.estimate == 0.0);
  CHECK(cst.variance == 0.0);
  CHECK_THROWS_AS(mc_estimate(src, 0.3, 1.0, 100, Payoff{}, init, 3), Error);
}

TEST_CASE("telescope") {
  const DriftModel ou = make_ou(1);
  LevelDrift src;
  src.exact = &ou;
  MlmcPlan plan;
  plan.h0 = 0.2;
  plan.T = 1.0;
  plan.payoff = Payoff{PayoffKind::Square};
  plan.seed = 8;
  plan.max_level = 0;
  plan.samples = {20000};
  const auto l0 = mlmc_estimate(src, plan);
  const auto mc = mc_estimate(src, 0.2, 1.0, 20000, plan.payoff, plan.init, 8);
  CHECK(l0.estimate == doctest::Approx(mc.estimate).epsilon(1e-12));
  plan.max_level = 3;
  plan.samples = {40000, 20000, 10000, 5000};
  const auto ml = mlmc_estimate(src, plan);
  const auto fine = mc_estimate(src, 0.025, 1.0, 40000, plan.payoff, plan.init, 9);
  CHECK(std::fabs(ml.estimate - fine.estimate) <= 3.0 * std::sqrt(ml.se * ml.se + fine.se * fine.se));
  CHECK(ml.levels.size() == 4);
}
