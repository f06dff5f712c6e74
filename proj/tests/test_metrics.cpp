#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "eulerbound/error.hpp"
#include "eulerbound/metrics.hpp"
#include "eulerbound/rng.hpp"

using namespace eb;

namespace {

Vec gaussian(std::size_t n, double sd, std::uint64_t seed) {
  Vec v(n);
  Stream(StreamId{seed, 0, 0, 0}).normals(0, tag::aux, v.data(), n);
  for (double& x : v) x *= sd;
  return v;
}

// minimum over all permutations
double brute_force(const Vec& a, const Vec& b, std::size_t dim, int p) {
  const std::size_t n = a.size() / dim;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = a[i * dim + k] - b[perm[i] * dim + k];
        d2 += d * d;
      }
      c += std::pow(std::sqrt(d2), p);
    }
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(best / n, 1.0 / p);
}

}  // namespace

TEST_CASE("summary") {
  const Vec v{1, 2, 3, 4};
  const auto s = summarize(v);
  CHECK(s.mean == 2.5);
  CHECK(s.variance == doctest::Approx(5.0 / 3.0));
  CHECK(s.se == doctest::Approx(std::sqrt(5.0 / 12.0)));
}

TEST_CASE("one-dimensional Wasserstein") {
  const Vec a{0.3, -1.0, 2.0};
  CHECK(w_p_1d(a, a, 1) == 0.0);
  CHECK(w_p_1d(Vec{0, 0}, Vec{1, 1}, 1) == 1.0);
  const Vec b{1.0, 0.5, -0.2};
  CHECK(w_p_1d(a, b, 2) == w_p_1d(b, a, 2));
  const Vec c{0.1, 0.2, 3.0};
  CHECK(w_p_1d(a, c, 1) <= w_p_1d(a, b, 1) + w_p_1d(b, c, 1) + 1e-12);
}

TEST_CASE("gaussian W2 gap within bootstrap error") {
  const double s1 = 1.0, s2 = 1.1;
  const Vec a = gaussian(100000, s1, 1), b = gaussian(100000, s2, 2);
  const auto est = w_p_1d_bootstrap(a, b, 2, 200, 3);
  CHECK(std::fabs(est.value - 0.1) <= 3.0 * est.se + 0.003);
  const auto law = w_p_1d_to_law_bootstrap(b, [](double u) { return normal_quantile(u, 0.0, 1.0); }, 2, 200, 4);
  CHECK(std::fabs(law.value - 0.1) <= 3.0 * law.se);
}

TEST_CASE("assignment matches brute force") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const std::size_t n = 2 + seed % 6;
    const Vec a = gaussian(2 * n, 1.0, seed), b = gaussian(2 * n, 1.0, seed + 100);
    for (int p : {1, 2}) CHECK(w_p_assignment(a, b, 2, p) == doctest::Approx(brute_force(a, b, 2, p)).epsilon(1e-12));
  }
  // cross pairing is cheaper here
  CHECK(w_p_assignment(Vec{0, 0, 1, 0}, Vec{1, 0, 0, 0}, 2, 1) == 0.0);
  const Vec a = gaussian(40, 1.0, 7), b = gaussian(40, 1.0, 8);
  Vec a2, b2;
  for (std::size_t i = 0; i < 40; ++i) {
    a2.insert(a2.end(), {a[i], 0.0});
    b2.insert(b2.end(), {b[i], 0.0});
  }
  CHECK(w_p_assignment(a2, b2, 2, 2) == doctest::Approx(w_p_1d(a, b, 2)).epsilon(1e-12));
  CHECK_THROWS_AS(w_p_assignment(Vec(2 * 600), Vec(2 * 600), 2, 1), Error);
}

TEST_CASE("projected distance is a lower bound") {
  const Vec a = gaussian(2 * 60, 1.0, 9), b = gaussian(2 * 60, 1.3, 10);
  CHECK(w_p_projected(a, b, 2, 2, 32, 1) <= w_p_assignment(a, b, 2, 2) + 1e-12);
}

TEST_CASE("Kolmogorov-Smirnov") {
  const Vec a = gaussian(20000, 1.0, 11);
  CHECK(ks_one_sample(a, [](double x) { return normal_cdf(x, 0.0, 1.0); }).pass);
  CHECK_FALSE(ks_one_sample(Vec(1000, 0.0), [](double x) { return normal_cdf(x, 0.0, 1.0); }).pass);
  const auto one = ks_one_sample(Vec{0.3}, [](double x) { return normal_cdf(x, 0.0, 1.0); });
  CHECK(one.statistic >= 0.0);
  CHECK(one.statistic <= 1.0);
  CHECK(ks_two_sample(a, gaussian(20000, 1.0, 12)).pass);
  CHECK_FALSE(ks_two_sample(a, gaussian(20000, 1.5, 12)).pass);
}

TEST_CASE("KS calibration") {
  int rejections = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Vec a = gaussian(2000, 1.0, 1000 + s);
    rejections += !ks_one_sample(a, [](double x) { return normal_cdf(x, 0.0, 1.0); }, 1e-3).pass;
  }
  CHECK(rejections <= 2);
}

TEST_CASE("rate fit") {
  std::vector<RatePoint> pts{{0.1, 0.1}, {0.05, 0.05}, {0.025, 0.025}};
  CHECK(rate_fit(pts).slope == doctest::Approx(1.0).epsilon(1e-12));
  for (auto& p : pts) p.value = std::sqrt(p.h);
  CHECK(rate_fit(pts).slope == doctest::Approx(0.5).epsilon(1e-12));
  const Stream st(StreamId{13, 0, 0, 0});
  std::vector<RatePoint> noisy;
  for (int i = 0; i < 8; ++i) {
    const double h = std::ldexp(1.0, -i);
    noisy.push_back({h, h * (1.0 + 0.05 * st.normal(i, 0, tag::aux))});
  }
  const auto f = rate_fit(noisy);
  CHECK(std::fabs(f.slope - 1.0) <= 3.0 * f.se);
  CHECK_THROWS_AS(rate_fit(std::vector<RatePoint>{{0.1, 1}, {0.2, 2}}), Error);
  CHECK_THROWS_AS(rate_fit(std::vector<RatePoint>{{0.1, 1}, {0.2, 0}, {0.3, 1}}), Error);
}
