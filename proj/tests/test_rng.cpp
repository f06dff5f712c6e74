#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "eulerbound/rng.hpp"

using namespace eb;

TEST_CASE("philox4x32-10 known answers") {
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are pure functions of their id and counter") {
  const Stream a(StreamId{1, 2, 3, 4}), b(StreamId{1, 2, 3, 4}), c(StreamId{1, 2, 4, 3});
  CHECK(a.key() == b.key());
  CHECK(a.key() != c.key());
  CHECK(a.uniform(7, 0, tag::noise) == b.uniform(7, 0, tag::noise));
  CHECK(a.uniform(7, 0, tag::noise) != a.uniform(7, 0, tag::zeta));
  CHECK(a.uniform(7, 0, tag::noise) != a.uniform(8, 0, tag::noise));
}

TEST_CASE("uniforms lie in the open unit interval") {
  CHECK(bits_to_open01(0, 0) > 0.0);
  CHECK(bits_to_open01(0xffffffff, 0xffffffff) < 1.0);
}

TEST_CASE("normals: batch and scalar draws agree, odd lengths handled") {
  const Stream s(StreamId{9, 1, 0, 0});
  std::vector<double> v(7);
  s.normals(3, tag::noise, v.data(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::isfinite(v[i]));
  std::vector<double> w(8);
  s.normals(3, tag::noise, w.data(), w.size());
  for (std::size_t i = 0; i < 7; ++i) CHECK(v[i] == w[i]);
}

TEST_CASE("normal moments") {
  const Stream s(StreamId{5, 0, 0, 0});
  const std::size_t n = 200000;
  std::vector<double> v(n);
  s.normals(0, tag::noise, v.data(), n);
  double m = 0, m2 = 0;
  for (double x : v) {
    m += x;
    m2 += x * x;
  }
  m /= n;
  m2 /= n;
  CHECK(std::fabs(m) < 4.0 / std::sqrt(double(n)));
  CHECK(std::fabs(m2 - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("below is in range and roughly uniform") {
  const Stream s(StreamId{3, 0, 0, 0});
  std::vector<int> counts(6, 0);
  for (std::uint64_t k = 0; k < 60000; ++k) {
    const auto v = s.below(k, 0, tag::subsample, 6);
    REQUIRE(v < 6);
    ++counts[v];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}
