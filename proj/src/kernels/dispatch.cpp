// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cstdlib>

#include "eulerbound/error.hpp"
#include "eulerbound/kernels.hpp"

namespace eb::kernels {

#if defined(EULERBOUND_HAVE_AVX2)
const Ops* avx2_ops_impl() noexcept;
#endif

bool avx2_available() noexcept {
#if defined(EULERBOUND_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const char* backend_name(Backend b) noexcept { return b == Backend::Avx2 ? "avx2" : "scalar"; }

const Ops* avx2_ops() noexcept {
#if defined(EULERBOUND_HAVE_AVX2)
  return avx2_ops_impl();
#else
  return nullptr;
#endif
}

namespace {

const Ops* select() noexcept {
  const char* force = std::getenv("EULERBOUND_FORCE_SCALAR");
  if (force && *force && *force != '0') return &scalar_ops();
  if (avx2_available()) return avx2_ops();
  return &scalar_ops();
}

std::atomic<const Ops*>& slot() noexcept {
  static std::atomic<const Ops*> current{select()};
  return current;
}

}  // namespace

const Ops& active() noexcept { return *slot().load(std::memory_order_acquire); }

void override_backend(Backend b) {
  if (b == Backend::Scalar) {
    slot().store(&scalar_ops(), std::memory_order_release);
    return;
  }
  if (!avx2_available()) fail(ErrorCode::Config, "avx2 backend not available on this machine");
  slot().store(avx2_ops(), std::memory_order_release);
}

}  // namespace eb::kernels
