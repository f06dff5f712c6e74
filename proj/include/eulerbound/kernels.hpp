// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

namespace eb::kernels {

enum class Backend { Scalar, Avx2 };

// Elementwise ensemble kernels. Every backend performs the same IEEE operations
// in the same order, so results are bitwise identical across backends.
struct Ops {
  Backend backend;
  // out = -x
  void (*drift_ou)(const double* x, double* out, std::size_t n);
  // truncated double-well drift applied per element
  void (*drift_double_well)(const double* x, double* out, std::size_t n, double a, double nn);
  // x = (x + h*b) + sh*z
  void (*euler_update)(double* x, const double* b, const double* z, double h, double sh, std::size_t n);
  // out = (w*base - lam*x) + th
  void (*affine_drift)(const double* base, const double* x, const double* w, const double* lam, const double* th,
                       double* out, std::size_t n);
  // four-lane striped sums of x and x*x, lanes combined as (l0+l1)+(l2+l3)
  void (*sum_moments)(const double* x, std::size_t n, double* sum, double* sum_sq);
  // striped sum of (x-y)^2
  double (*sum_sq_diff)(const double* x, const double* y, std::size_t n);
  // striped sum of |x-y|
  double (*sum_abs_diff)(const double* x, const double* y, std::size_t n);
};

bool avx2_available() noexcept;
const char* backend_name(Backend b) noexcept;

const Ops& scalar_ops() noexcept;
// nullptr when the build has no AVX2 translation unit
const Ops* avx2_ops() noexcept;

// Selected once: AVX2 when the CPU supports it, unless EULERBOUND_FORCE_SCALAR is set.
const Ops& active() noexcept;
void override_backend(Backend b);

}  // namespace eb::kernels
