#include <cmath>

#include "doctest.h"
#include "eulerbound/error.hpp"
#include "eulerbound/oracles.hpp"

using namespace eb;

TEST_CASE("first moment identity") {
  CHECK(std::fabs(quadrature_first_moment(0.0, 0.01, 0.05)) <= 1e-12);
  CHECK(std::fabs(quadrature_first_moment(0.1, 0.01, 0.05)) <= 1e-10);
  CHECK(quadrature_first_moment(0.1, 0.01, INFINITY, false) > 0.0);
}

TEST_CASE("always-reflect defect matches the folded normal") {
  // E|r + 2 sqrt(h) Z| - r for the pure reflection
  const double r = 0.1, h = 0.01, s = 2.0 * std::sqrt(h);
  const double folded = s * std::sqrt(2.0 / M_PI) * std::exp(-r * r / (2 * s * s)) + r * std::erf(r / (s * std::sqrt(2.0)));
  CHECK(quadrature_first_moment(r, h, INFINITY, false) == doctest::Approx(folded - r).epsilon(1e-9));
}

TEST_CASE("second moment lower bound") {
  const double h = 0.01, m = 0.05;
  for (double q : {0.2, 1.0, 5.0}) {
    const auto res = quadrature_second_moment_lower(q * std::sqrt(h), h, m);
    CHECK(res.lhs >= res.alpha_bar);
  }
  CHECK(quadrature_second_moment_lower(1e-9, h, m).alpha_bar < 1e-10);
  CHECK_THROWS_AS(quadrature_second_moment_lower(0.1, h, 0.04), Error);
}

TEST_CASE("branch probabilities edge cases") {
  const auto z = branch_probabilities(0.0, 0.01, 0.05, 1.0);
  CHECK(z.merge == doctest::Approx(std::erf(0.05 / std::sqrt(0.02))).epsilon(1e-10));
  CHECK(z.reflect == doctest::Approx(0.0).epsilon(1e-12));
  const auto far = branch_probabilities(2.0, 0.01, 0.05, 1.0);
  CHECK(far.sync == 1.0);
  CHECK(far.merge == 0.0);
}

TEST_CASE("subsampling enumeration") {
  auto model = [](std::vector<double> v, Scheme sc, std::size_t s) {
    std::vector<Component> comps;
    for (double x : v) comps.push_back({0.0, 0.0, {x}});
    InaccurateDrift in;
    in.base = make_finite_sum(BaseDrift::Zero, 1, 1, 1, comps, 1, 1, 1);
    in.scheme = sc;
    in.s = s;
    return in;
  };
  const Vec x{0.0};
  auto a = enumerate_subsampling(model({1, 3}, Scheme::WithReplacement, 1), x);
  CHECK(a.mean[0] == doctest::Approx(4.0));
  CHECK(a.variance == doctest::Approx(4.0));
  auto b = enumerate_subsampling(model({1, 2, 6}, Scheme::WithoutReplacement, 2), x);
  CHECK(b.mean[0] == doctest::Approx(9.0));
  CHECK(b.variance == doctest::Approx(10.5));
  CHECK(b.draws == 3);
  CHECK_THROWS_AS(enumerate_subsampling(model({1, 2, 3, 4, 5, 6, 7, 8, 9}, Scheme::WithReplacement, 2), x), Error);
}
