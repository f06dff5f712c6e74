// SPDX-License-Identifier: Apache-2.0
// Built with -mavx2 -mno-fma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <cmath>

#include "eulerbound/kernels.hpp"

namespace eb::kernels {

namespace {

inline __m256d abs_pd(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }

void drift_ou(const double* x, double* out, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, _mm256_sub_pd(zero, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = -x[i];
}

void drift_double_well(const double* x, double* out, std::size_t n, double a, double nn) {
  const double c1 = 2.0 * nn * nn;
  const double c2 = 2.0 * a * nn;
  const __m256d va = _mm256_set1_pd(a), vn = _mm256_set1_pd(nn), m4 = _mm256_set1_pd(-4.0);
  const __m256d vc1 = _mm256_set1_pd(c1), vc2 = _mm256_set1_pd(c2);
  const __m256d one = _mm256_set1_pd(1.0), mone = _mm256_set1_pd(-1.0), zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d inner = _mm256_mul_pd(_mm256_mul_pd(m4, v), _mm256_sub_pd(_mm256_mul_pd(v, v), va));
    const __m256d s = _mm256_blendv_pd(mone, one, _mm256_cmp_pd(v, zero, _CMP_GT_OQ));
    const __m256d outer = _mm256_sub_pd(_mm256_mul_pd(s, vc2), _mm256_mul_pd(vc1, v));
    const __m256d in = _mm256_cmp_pd(abs_pd(v), vn, _CMP_LE_OQ);
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(outer, inner, in));
  }
  for (; i < n; ++i) {
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
  const __m256d vh = _mm256_set1_pd(h), vs = _mm256_set1_pd(sh);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_mul_pd(vh, _mm256_loadu_pd(b + i)));
    _mm256_storeu_pd(x + i, _mm256_add_pd(v, _mm256_mul_pd(vs, _mm256_loadu_pd(z + i))));
  }
  for (; i < n; ++i) x[i] = (x[i] + h * b[i]) + sh * z[i];
}

void affine_drift(const double* base, const double* x, const double* w, const double* lam, const double* th,
                  double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d p = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(base + i));
    const __m256d q = _mm256_mul_pd(_mm256_loadu_pd(lam + i), _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_sub_pd(p, q), _mm256_loadu_pd(th + i)));
  }
  for (; i < n; ++i) out[i] = (w[i] * base[i] - lam[i] * x[i]) + th[i];
}


void sum_moments(const double* x, std::size_t n, double* sum, double* sum_sq) {
  __m256d s = _mm256_setzero_pd(), q = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    s = _mm256_add_pd(s, v);
    q = _mm256_add_pd(q, _mm256_mul_pd(v, v));
  }
  alignas(32) double ls[4], lq[4];
  _mm256_store_pd(ls, s);
  _mm256_store_pd(lq, q);
  for (; i < n; ++i) {
    ls[i & 3] += x[i];
    lq[i & 3] += x[i] * x[i];
  }
  *sum = (ls[0] + ls[1]) + (ls[2] + ls[3]);
  *sum_sq = (lq[0] + lq[1]) + (lq[2] + lq[3]);
}

double sum_sq_diff(const double* x, const double* y, std::size_t n) {
  __m256d s = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    s = _mm256_add_pd(s, _mm256_mul_pd(d, d));
  }
  alignas(32) double l[4];
  _mm256_store_pd(l, s);
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    l[i & 3] += d * d;
  }
  return (l[0] + l[1]) + (l[2] + l[3]);
}

double sum_abs_diff(const double* x, const double* y, std::size_t n) {
  __m256d s = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    s = _mm256_add_pd(s, abs_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i))));
  alignas(32) double l[4];
  _mm256_store_pd(l, s);
  for (; i < n; ++i) l[i & 3] += std::fabs(x[i] - y[i]);
  return (l[0] + l[1]) + (l[2] + l[3]);
}

const Ops kAvx2{Backend::Avx2, drift_ou, drift_double_well, euler_update, affine_drift,
                sum_moments, sum_sq_diff, sum_abs_diff};

}  // namespace

const Ops* avx2_ops_impl() noexcept { return &kAvx2; }

}  // namespace eb::kernels
