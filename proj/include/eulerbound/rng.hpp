// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace eb {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

// Philox4x32 with 10 rounds (Salmon et al. 2011)
PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view s) noexcept;

// purpose tags stored in the last counter word
namespace tag {
inline constexpr std::uint32_t noise = 1;
inline constexpr std::uint32_t zeta = 2;
inline constexpr std::uint32_t subsample = 3;
inline constexpr std::uint32_t init = 4;
inline constexpr std::uint32_t fine_noise = 5;
inline constexpr std::uint32_t coarse_subsample = 6;
inline constexpr std::uint32_t aux = 7;
}  // namespace tag

struct StreamId {
  std::uint64_t seed = 0;
  std::uint64_t experiment = 0;
  std::uint64_t replica = 0;
  std::uint64_t level = 0;
};

// Counter-based stream: every draw is addressed by (step, index, tag), so the
// value never depends on the order in which draws are consumed.
class Stream {
 public:
  Stream() = default;
  explicit Stream(const StreamId& id) noexcept;
  explicit Stream(PhiloxKey key) noexcept : key_(key) {}

  PhiloxKey key() const noexcept { return key_; }

  PhiloxCounter block(std::uint64_t step, std::uint32_t index, std::uint32_t tg) const noexcept {
    return philox4x32({static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32), index, tg}, key_);
  }

  // uniform on the open interval (0,1)
  double uniform(std::uint64_t step, std::uint32_t index, std::uint32_t tg) const noexcept;
  void uniforms(std::uint64_t step, std::uint32_t tg, double* out, std::size_t n) const noexcept;
  void normals(std::uint64_t step, std::uint32_t tg, double* out, std::size_t n) const noexcept;
  double normal(std::uint64_t step, std::uint32_t index, std::uint32_t tg) const noexcept;
  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t step, std::uint32_t index, std::uint32_t tg, std::uint64_t n) const noexcept;

 private:
  PhiloxKey key_{0, 0};
};

inline double bits_to_open01(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t v = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
  return (static_cast<double>(v) + 0.5) * 0x1.0p-52;
}

void box_muller(double u1, double u2, double& z0, double& z1) noexcept;

}  // namespace eb
