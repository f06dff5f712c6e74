// SPDX-License-Identifier: Apache-2.0
#include "eulerbound/rng.hpp"

#include <cmath>
#include <numbers>

namespace eb {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline PhiloxCounter round(const PhiloxCounter& c, const PhiloxKey& k) noexcept {
  std::uint32_t hi0, lo0, hi1, lo1;
  mulhilo(kM0, c[0], hi0, lo0);
  mulhilo(kM1, c[2], hi1, lo1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) noexcept {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    ctr = round(ctr, key);
  }
  return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

Stream::Stream(const StreamId& id) noexcept {
  std::uint64_t h = splitmix64(id.seed);
  h = splitmix64(h ^ id.experiment);
  h = splitmix64(h ^ id.replica);
  h = splitmix64(h ^ (id.level * 0x9E3779B97F4A7C15ull));
  key_ = {static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
}

void box_muller(double u1, double u2, double& z0, double& z1) noexcept {
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  z0 = r * std::cos(t);
  z1 = r * std::sin(t);
}

double Stream::uniform(std::uint64_t step, std::uint32_t index, std::uint32_t tg) const noexcept {
  const auto b = block(step, index, tg);
  return bits_to_open01(b[0], b[1]);
}

void Stream::uniforms(std::uint64_t step, std::uint32_t tg, double* out, std::size_t n) const noexcept {
  for (std::size_t i = 0; i < n; i += 2) {
    const auto b = block(step, static_cast<std::uint32_t>(i / 2), tg);
    out[i] = bits_to_open01(b[0], b[1]);
    if (i + 1 < n) out[i + 1] = bits_to_open01(b[2], b[3]);
  }
}

void Stream::normals(std::uint64_t step, std::uint32_t tg, double* out, std::size_t n) const noexcept {
  for (std::size_t i = 0; i < n; i += 2) {
    const auto b = block(step, static_cast<std::uint32_t>(i / 2), tg);
    double z0, z1;
    box_muller(bits_to_open01(b[0], b[1]), bits_to_open01(b[2], b[3]), z0, z1);
    out[i] = z0;
    if (i + 1 < n) out[i + 1] = z1;
  }
}

double Stream::normal(std::uint64_t step, std::uint32_t index, std::uint32_t tg) const noexcept {
  const auto b = block(step, index, tg);
  double z0, z1;
  box_muller(bits_to_open01(b[0], b[1]), bits_to_open01(b[2], b[3]), z0, z1);
  return z0;
}

std::uint64_t Stream::below(std::uint64_t step, std::uint32_t index, std::uint32_t tg, std::uint64_t n) const noexcept {
  // 64-bit multiply-shift; bias is below 2^-32 for the small n used here
  const auto b = block(step, index, tg);
  const std::uint64_t v = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(v) * n) >> 64);
}

}  // namespace eb
