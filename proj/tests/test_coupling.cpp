#include <cmath>
#include <vector>

#include "doctest.h"
#include "eulerbound/coupling.hpp"
#include "eulerbound/error.hpp"
#include "eulerbound/metrics.hpp"
#include "eulerbound/oracles.hpp"
#include "eulerbound/rng.hpp"

using namespace eb;

TEST_CASE("reflection") {
  CHECK(reflect(Vec{0.0}, Vec{1.0}, Vec{0.7})[0] == -0.7);
  const Vec xh{0.0, 0.0}, yh{1.0, 2.0};
  const Vec r = reflect(xh, yh, Vec{1.0, 2.0});
  CHECK(r[0] == doctest::Approx(-1.0));
  CHECK(r[1] == doctest::Approx(-2.0));
  const Vec o = reflect(xh, yh, Vec{2.0, -1.0});
  CHECK(o[0] == doctest::Approx(2.0));
  CHECK(o[1] == doctest::Approx(-1.0));
}

TEST_CASE("coupling branches") {
  const DriftModel ou = make_ou(2);
  const CouplingParams p{0.01, 0.05, 1.0};
  const Vec x{0.1, -0.2};
  auto o = truncated_mirror_step(x, x, ou, p, Vec{0.3, 0.1}, 0.5);
  CHECK(o.branch == Branch::Merged);
  CHECK(o.x_next == o.y_next);
  // |sqrt(h) z| = 0.1 >= m
  o = truncated_mirror_step(x, Vec{0.2, 0.1}, ou, p, Vec{1.0, 0.0}, 0.5);
  CHECK(o.branch == Branch::Synchronous);
  CHECK(dist(o.x_next, o.y_next) == doctest::Approx(o.r_hat).epsilon(1e-14));
  // r_hat > H
  o = truncated_mirror_step(x, Vec{3.0, 0.0}, ou, p, Vec{0.0, 0.0}, 0.5);
  CHECK(o.branch == Branch::Synchronous);
  CHECK_THROWS_AS(truncated_mirror_step(x, x, ou, CouplingParams{-1.0}, Vec{0, 0}, 0.5), Error);
}

TEST_CASE("full subsample reproduces the exact coupling") {
  std::vector<Component> comps = {{0.5, 0.1, {0.2}}, {0.5, -0.1, {-0.2}}};
  const DriftModel fs = make_finite_sum(BaseDrift::TruncatedDoubleWell, 0.002, std::sqrt(0.002), 1, comps, 1, 1, 1);
  InaccurateDrift in;
  in.base = fs;
  in.scheme = Scheme::WithoutReplacement;
  in.s = 2;
  const CouplingParams p{0.01, 0.1, 1.0};
  const Stream st(StreamId{1, 0, 0, 0});
  for (std::uint64_t k = 0; k < 100; ++k) {
    const Vec x{st.normal(k, 0, tag::aux)}, y{st.normal(k, 1, tag::aux)}, z{st.normal(k, 2, tag::aux)};
    const double zeta = st.uniform(k, 3, tag::aux);
    const auto a = truncated_mirror_step(x, y, fs, p, z, zeta);
    const auto b = inaccurate_truncated_mirror_step(x, y, in, {1, 0}, p, z, zeta);
    CHECK(a.branch == b.branch);
    CHECK(a.x_next[0] == doctest::Approx(b.x_next[0]).epsilon(1e-14));
    CHECK(a.y_next[0] == doctest::Approx(b.y_next[0]).epsilon(1e-14));
  }
}

TEST_CASE("branch frequencies match quadrature") {
  const double r_hat = 0.1, h = 0.01, m = 0.05;
  const auto pr = branch_probabilities(r_hat, h, m, 1.0);
  CHECK(pr.merge + pr.reflect + pr.sync == doctest::Approx(1.0).epsilon(1e-10));
  const Stream st(StreamId{11, 0, 0, 0});
  const std::size_t n = 1000000;
  std::size_t cnt[3] = {0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    double xn, yn;
    ++cnt[int(couple_from_hat_1d(0.0, r_hat, {h, m, 1.0}, st.normal(i, 0, tag::noise), st.uniform(i, 0, tag::zeta), xn, yn))];
  }
  const double p[3] = {pr.merge, pr.reflect, pr.sync};
  for (int b = 0; b < 3; ++b) {
    const double f = double(cnt[b]) / n, se = std::sqrt(std::max(p[b] * (1 - p[b]), 1e-300) / n);
    CHECK(std::fabs(f - p[b]) <= 3 * se + 1e-12);
  }
}

TEST_CASE("conditional marginal is Gaussian") {
  const Vec xh{0.0, 0.1}, yh{0.05, -0.02};
  const CouplingParams p{0.01, 0.08, 1.0};
  const Stream st(StreamId{12, 0, 0, 0});
  const std::size_t n = 100000;
  Vec y0(n), x1(n), z(2), xn(2), yn(2);
  for (std::size_t i = 0; i < n; ++i) {
    st.normals(i, tag::noise, z.data(), 2);
    couple_from_hat(xh, yh, p, z, st.uniform(i, 0, tag::zeta), xn, yn);
    y0[i] = yn[0];
    x1[i] = xn[1];
  }
  CHECK(ks_one_sample(y0, [&](double v) { return normal_cdf(v, yh[0], p.h); }).pass);
  CHECK(ks_one_sample(x1, [&](double v) { return normal_cdf(v, xh[1], p.h); }).pass);
}
