#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "eulerbound/constants.hpp"
#include "eulerbound/error.hpp"

using namespace eb;

namespace {

double simpson(double (*f)(double), double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

double phi(double u) { return std::exp(-u * u / 2.0) / std::sqrt(2.0 * std::numbers::pi); }

DriftModel certified_dw() {
  GridSpec g;
  return certify_constants(make_double_well(0.002, std::sqrt(0.002), 1, 1.0, 0.002, 0.0), 0.002, g);
}

MomentInputs point_start() {
  MomentInputs m;
  m.d = 1;
  return m;
}

}  // namespace

TEST_CASE("c0 against composite Simpson") {
  const double i1 = simpson([](double u) { return u * u * (1.0 - std::exp(u - 0.5)) * phi(u); }, 0.0, 0.5, 2000);
  const double i2 = (1.0 - std::exp(-1.0)) * simpson([](double u) { return u * u * u * phi(u); }, 0.0, 0.5, 2000);
  CHECK(c0_report().first_integral == doctest::Approx(i1).epsilon(1e-12));
  CHECK(c0_report().second_integral == doctest::Approx(i2).epsilon(1e-12));
  CHECK(compute_c0() == doctest::Approx(4.0 * std::min(i1, i2)).epsilon(1e-12));
  CHECK(i1 < i2);
}

TEST_CASE("ledger recomputed independently for the certified double well") {
  const DriftModel dw = certified_dw();
  const ContractionLedger g = build_ledger(dw, std::nullopt, point_start());
  const double L = dw.lipschitz_L, K = dw.contraction_K, R = dw.radius_R, c0 = compute_c0();
  const double terms[6] = {K / (L * L),
                           4.0 / K,
                           1.0 / (2.0 * L),
                           2.0 * c0 * std::log(1.5) / (27.0 * L * L * R * R),
                           R * R / 4.0,
                           c0 * c0 * std::log(2.0) * std::log(2.0) / (144.0 * L * L * R * R)};
  for (int i = 0; i < 6; ++i) CHECK(g.h0_terms[i] == doctest::Approx(terms[i]).epsilon(1e-12));
  const double h0 = *std::min_element(terms, terms + 6);
  CHECK(g.h0 == doctest::Approx(h0).epsilon(1e-12));
  const double r1 = (1.0 + h0 * L) * R, r2 = r1 + std::sqrt(h0), a = 6.0 * L * r1 / c0;
  CHECK(g.r1 == doctest::Approx(r1).epsilon(1e-12));
  CHECK(g.r2 - g.r1 == doctest::Approx(std::sqrt(g.h0)).epsilon(1e-14));
  CHECK(g.a == doctest::Approx(a).epsilon(1e-12));
  const double e = std::exp(-a * r2);
  const double c = std::min({e * K / 4.0, 0.5 * e * r2 / ((1.0 - e) / a) * K / 4.0,
                             9.0 * L * L * r1 * r1 / (2.0 * c0) * std::exp(-6.0 * L * r1 * r1 / c0),
                             3.0 * L * r1 / (16.0 * std::sqrt(h0))});
  CHECK(g.c == doctest::Approx(c).epsilon(1e-12));
  CHECK(g.A == doctest::Approx(std::max(a * r2 * r2 / (1.0 - e), 2.0 * r2 / e)).epsilon(1e-12));
  const double h01 = std::min({1.0 / 6.0, K / L, L * R * R / 3.0, c0 * c0 / (970.0 * L * R * R)}) / L;
  CHECK(g.h0_1 == doctest::Approx(h01).epsilon(1e-12));
}

TEST_CASE("globally contractive model has no ledger") {
  CHECK_THROWS_AS(build_ledger(make_ou(1), std::nullopt, point_start()), Error);
}

TEST_CASE("distance function shape") {
  const ContractionLedger g = build_ledger(certified_dw(), std::nullopt, point_start());
  const DistanceFn f = distance_f(g);
  CHECK(f(0.0) == 0.0);
  const auto lo = f.eval(g.r2 * (1 - 1e-12)), hi = f.eval(g.r2 * (1 + 1e-12));
  CHECK(lo.d1 == doctest::Approx(std::exp(-g.a * g.r2)).epsilon(1e-9));
  CHECK(hi.d1 == doctest::Approx(std::exp(-g.a * g.r2)).epsilon(1e-9));
  CHECK(4.0 * g.r2 * g.r2 <= g.A * f(2.0 * g.r2));
  for (int i = 1; i <= 10000; ++i) {
    const double r = 10.0 * g.r2 * i / 10000.0;
    REQUIRE(r <= std::exp(g.a * g.r2) * f(r) * (1 + 1e-12));
    REQUIRE(r * r <= g.A * f(r) * (1 + 1e-12));
  }
}

TEST_CASE("theorem bounds") {
  const ContractionLedger g = build_ledger(certified_dw(), std::nullopt, point_start());
  const double h = 0.25 * g.h0;
  const double lim = std::sqrt(g.A * g.C_ult / g.c) * std::pow(h, 0.25);
  CHECK(theorem_bound(BoundKind::ULA_W2, g, h, 100000000000ULL, 1.0) == doctest::Approx(lim).epsilon(1e-9));
  const double h1 = 0.5 * g.h0_1;
  CHECK(theorem_bound(BoundKind::ULA_W1, g, h1, 0, 0.0) ==
        doctest::Approx(std::exp(g.q * g.r1_1) * std::sqrt(g.C_dif) * std::sqrt(h1) / g.c1).epsilon(1e-12));
  double prev = INFINITY;
  for (std::uint64_t k = 0; k < 100000; k += 5000) {
    const double b = theorem_bound(BoundKind::ULA_W2, g, h, k, 3.0);
    CHECK(b <= prev);
    prev = b;
  }
  CHECK_THROWS_AS(theorem_bound(BoundKind::ULA_W2, g, 2.0 * g.h0, 1, 0.0), Error);
  CHECK_THROWS_AS(theorem_bound(BoundKind::SG_W1, g, h, 1, 0.0), Error);
}

TEST_CASE("varying step bound") {
  const ContractionLedger g = build_ledger(certified_dw(), std::nullopt, point_start());
  const double h = 0.25 * g.h0;
  CHECK(varying_step_bound(g, {}, 2.0).size() == 1);
  std::vector<double> sched(50, h);
  const auto rec = varying_step_bound(g, sched, 2.0);
  REQUIRE(rec.size() == 51);
  CHECK(rec.back().contraction_product == doctest::Approx(std::pow(1.0 - g.c * h, 50)).epsilon(1e-12));
  std::vector<double> dec;
  for (int k = 0; k < 200; ++k) dec.push_back(0.5 * g.h0 / (k + 1));
  const auto r2 = varying_step_bound(g, dec, 0.0);
  for (const auto& r : r2) CHECK(std::isfinite(r.ef_bound));
  std::vector<double> inc{h / 2, h};
  CHECK_THROWS_AS(varying_step_bound(g, inc, 0.0), Error);
}

TEST_CASE("inaccurate ledger with exact drift extras") {
  const DriftModel dw = certified_dw();
  InaccurateExtras ex;
  ex.sigma = 0.0;
  ex.alpha = ex.alpha_c = INFINITY;
  ex.bar_L = dw.lipschitz_L;
  ex.bar_K = dw.contraction_K;
  ex.bar_R = dw.radius_R;
  const ContractionLedger g = build_ledger(dw, ex, point_start());
  REQUIRE(g.inaccurate);
  CHECK(std::isfinite(g.inaccurate->C_IMLult));
  CHECK(g.inaccurate->C_IMLult > 0.0);
  const double h = 0.25 * g.h0;
  CHECK(theorem_bound(BoundKind::MLMC_VAR, g, h, 10, 0.0) ==
        doctest::Approx(g.A * g.inaccurate->C_IMLult * std::sqrt(h) / g.c).epsilon(1e-12));
}
