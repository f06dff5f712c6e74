// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "eulerbound/kernels.hpp"

namespace eb::kernels {

namespace {

void drift_ou(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = -x[i];
}

void drift_double_well(const double* x, double* out, std::size_t n, double a, double nn) {
  const double c1 = 2.0 * nn * nn;
  const double c2 = 2.0 * a * nn;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x[i];
    if (std::fabs(v) <= nn) {
      out[i] = (-4.0 * v) * (v * v - a);
    } else {
      const double s = v > 0.0 ? 1.0 : -1.0;
      out[i] = s * c2 - c1 * v;
    }
  }
}

void euler_update(double* x, const double* b, const double* z, double h, double sh, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = (x[i] + h * b[i]) + sh * z[i];
}

void affine_drift(const double* base, const double* x, const double* w, const double* lam, const double* th,
                  double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = (w[i] * base[i] - lam[i] * x[i]) + th[i];
}

void sum_moments(const double* x, std::size_t n, double* sum, double* sum_sq) {
  double s[4] = {0, 0, 0, 0};
  double q[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    s[i & 3] += x[i];
    q[i & 3] += x[i] * x[i];
  }
  *sum = (s[0] + s[1]) + (s[2] + s[3]);
  *sum_sq = (q[0] + q[1]) + (q[2] + q[3]);
}

double sum_sq_diff(const double* x, const double* y, std::size_t n) {
  double s[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i];
    s[i & 3] += d * d;
  }
  return (s[0] + s[1]) + (s[2] + s[3]);
}

double sum_abs_diff(const double* x, const double* y, std::size_t n) {
  double s[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) s[i & 3] += std::fabs(x[i] - y[i]);
  return (s[0] + s[1]) + (s[2] + s[3]);
}

const Ops kScalar{Backend::Scalar, drift_ou, drift_double_well, euler_update, affine_drift,
                  sum_moments, sum_sq_diff, sum_abs_diff};

}  // namespace

const Ops& scalar_ops() noexcept { return kScalar; }

}  // namespace eb::kernels
