#include <cmath>
#include <vector>

#include "doctest.h"
#include "eulerbound/drift.hpp"
#include "eulerbound/error.hpp"
#include "eulerbound/oracles.hpp"

using namespace eb;

namespace {

DriftModel offsets_model(std::vector<double> vals) {
  std::vector<Component> comps;
  for (double v : vals) comps.push_back({0.0, 0.0, {v}});
  return make_finite_sum(BaseDrift::Zero, 1.0, 1.0, 1, comps, 1.0, 1.0, 1.0);
}

InaccurateDrift subsampled(DriftModel base, Scheme sc, std::size_t s) {
  InaccurateDrift m;
  m.base = std::move(base);
  m.scheme = sc;
  m.s = s;
  return m;
}

}  // namespace

TEST_CASE("drift examples") {
  const Vec zero{0.0}, one{1.0}, half{0.5};
  CHECK(eval_drift(make_ou(1), zero)[0] == 0.0);
  const DriftModel dw = make_double_well(1.0, 10.0, 1, 1.0, 1.0, 1.0);
  CHECK(eval_drift(dw, one)[0] == 0.0);
  CHECK(eval_drift(dw, half)[0] == doctest::Approx(1.5).epsilon(1e-15));
  // central difference of -U with U = (x^2 - 1)^2
  const auto U = [](double x) { return (x * x - 1.0) * (x * x - 1.0); };
  CHECK(eval_drift(dw, half)[0] == doctest::Approx(-(U(0.5 + 1e-6) - U(0.5 - 1e-6)) / 2e-6).epsilon(1e-8));
}

TEST_CASE("truncated double well is C1 across the truncation point") {
  const double a = 0.002, n = std::sqrt(a);
  const double lo = double_well_1d(n * (1 - 1e-9), a, n), hi = double_well_1d(n * (1 + 1e-9), a, n);
  CHECK(std::fabs(lo - hi) < 1e-10);
  CHECK(double_well_1d(-0.3, a, n) == doctest::Approx(-double_well_1d(0.3, a, n)));
}

TEST_CASE("randomised drift examples") {
  const Vec x{0.0};
  auto with2 = subsampled(offsets_model({1, 3}), Scheme::WithReplacement, 2);
  CHECK(eval_inaccurate_drift(with2, x, {0, 1})[0] == 4.0);
  auto with1 = subsampled(offsets_model({1, 3}), Scheme::WithReplacement, 1);
  CHECK(eval_inaccurate_drift(with1, x, {1})[0] == 6.0);
  auto wo = subsampled(offsets_model({1, 2, 6}), Scheme::WithoutReplacement, 2);
  CHECK(eval_inaccurate_drift(wo, x, {0, 2})[0] == 10.5);
  CHECK_THROWS_AS(eval_inaccurate_drift(wo, x, {0, 0}), Error);
  CHECK_THROWS_AS(eval_inaccurate_drift(wo, x, {0, 3}), Error);
}

TEST_CASE("subsampling variance examples") {
  const Vec x{0.0};
  CHECK(subsampling_variance(subsampled(offsets_model({1, 3}), Scheme::WithReplacement, 1), x) ==
        doctest::Approx(4.0).epsilon(1e-15));
  CHECK(subsampling_variance(subsampled(offsets_model({1, 2, 6}), Scheme::WithoutReplacement, 2), x) ==
        doctest::Approx(10.5).epsilon(1e-15));
  CHECK(subsampling_variance(subsampled(offsets_model({1, 2, 6}), Scheme::WithoutReplacement, 3), x) == 0.0);
  const auto en = enumerate_subsampling(subsampled(offsets_model({1, 2, 6}), Scheme::WithReplacement, 3), x);
  CHECK(subsampling_variance(subsampled(offsets_model({1, 2, 6}), Scheme::WithReplacement, 3), x) ==
        doctest::Approx(en.variance).epsilon(1e-13));
}

TEST_CASE("draws respect the scheme") {
  const auto wo = subsampled(offsets_model({1, 2, 3, 4, 5}), Scheme::WithoutReplacement, 4);
  const Stream st(StreamId{1, 2, 3, 4});
  for (std::uint64_t k = 0; k < 200; ++k) {
    const auto u = draw_subsample(wo, st, k, tag::subsample);
    REQUIRE(u.size() == 4);
    std::vector<int> seen(5, 0);
    for (auto i : u) ++seen.at(i);
    for (int c : seen) CHECK(c <= 1);
  }
}

TEST_CASE("lyapunov constants") {
  DriftModel m = make_ou(1);
  auto l = lyapunov_constants(m);
  CHECK(l.M1 == 0.5);
  CHECK(l.M2 == 0.0);
  m.radius_R = 2.0;
  l = lyapunov_constants(m);
  CHECK(l.M1 == 0.5);
  CHECK(l.M2 == 4.0);
  m.lipschitz_L = 2.0;
  m.radius_R = 1.0;
  m.b_at_zero_norm = 1.0;
  l = lyapunov_constants(m);
  CHECK(l.M1 == 0.5);
  CHECK(l.M2 == 10.0);
}

TEST_CASE("lyapunov inequality holds on a grid for the certified double well") {
  GridSpec g;
  const DriftModel dw = certify_constants(make_double_well(0.002, std::sqrt(0.002), 1, 1.0, 0.002, 0.0), 0.002, g);
  const auto l = lyapunov_constants(dw);
  for (int i = -2000; i <= 2000; ++i) {
    const Vec x{i * 0.005};
    CHECK(eval_drift(dw, x)[0] * x[0] <= l.M2 - l.M1 * x[0] * x[0] + 1e-15);
  }
}

TEST_CASE("assumption verification") {
  GridSpec g;
  CHECK(verify_assumptions(make_ou(2), g).pass);
  g.scan_radius = 12.0;
  g.box_radius = 12.0;
  // sup |b'| on |x| <= 10 is 1196
  CHECK_FALSE(verify_assumptions(make_double_well(1.0, 10.0, 1, 100.0, 1.0, 30.0), g).pass);
  const DriftModel cert = certify_constants(make_double_well(1.0, 10.0, 1, 1.0, 1.0, 0.0), 1.0, g);
  CHECK(cert.lipschitz_L >= 1196.0);
  CHECK(verify_assumptions(cert, g).pass);
}

TEST_CASE("invalid input is rejected") {
  CHECK_THROWS_AS(make_double_well(-1.0, 1.0, 1, 1, 1, 1), Error);
  const DriftModel ou = make_ou(2);
  CHECK_THROWS_AS(eval_drift(ou, Vec{1.0}), Error);
  CHECK_THROWS_AS(eval_drift(ou, Vec{1.0, NAN}), Error);
}
