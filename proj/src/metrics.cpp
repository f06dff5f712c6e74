// SPDX-License-Identifier: Apache-2.0
#include "eulerbound/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "eulerbound/error.hpp"
#include "eulerbound/rng.hpp"

namespace eb {

Summary summarize(std::span<const double> v) {
  Summary s;
  s.n = v.size();
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n < 2) return s;
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.variance = ss / static_cast<double>(s.n - 1);
  s.se = std::sqrt(s.variance / static_cast<double>(s.n));
  return s;
}

namespace {

void check_p(int p) {
  if (p != 1 && p != 2) fail(ErrorCode::Domain, "p must be 1 or 2");
}

double pow_p(double d, int p) { return p == 1 ? std::fabs(d) : d * d; }
double root_p(double v, int p) { return p == 1 ? v : std::sqrt(v); }

double sorted_distance(const std::vector<double>& sa, const std::vector<double>& sb, int p) {
  const std::vector<double>* small = &sa;
  const std::vector<double>* large = &sb;
  if (sa.size() > sb.size()) std::swap(small, large);
  const std::size_t n = small->size(), N = large->size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = n == N ? i : static_cast<std::size_t>((static_cast<double>(i) + 0.5) * N / n);
    acc += pow_p((*small)[i] - (*large)[std::min(j, N - 1)], p);
  }
  return root_p(acc / static_cast<double>(n), p);
}

}  // namespace

double w_p_1d(std::span<const double> a, std::span<const double> b, int p) {
  check_p(p);
  if (a.empty() || b.empty()) fail(ErrorCode::Domain, "empty ensemble");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return sorted_distance(sa, sb, p);
}

double w_p_assignment(std::span<const double> a, std::span<const double> b, std::size_t dim, int p) {
  check_p(p);
  if (dim == 0 || a.size() % dim != 0 || a.size() != b.size()) fail(ErrorCode::Domain, "point clouds must match in size");
  const std::size_t n = a.size() / dim;
  if (n == 0) fail(ErrorCode::Domain, "empty ensemble");
  if (n > kAssignmentCap) fail(ErrorCode::Size, "exact matching is capped at 512 points; use w_p_projected");
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double d2 = dist_sq(a.subspan(i * dim, dim), b.subspan(j * dim, dim));
      cost[i * n + j] = p == 1 ? std::sqrt(d2) : d2;
    }
  // Hungarian algorithm with potentials, 1-based arrays
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (std::size_t j = 1; j <= n; ++j) total += cost[(match[j] - 1) * n + (j - 1)];
  return root_p(total / static_cast<double>(n), p);
}

double w_p_projected(std::span<const double> a, std::span<const double> b, std::size_t dim, int p,
                     std::size_t directions, std::uint64_t seed) {
  check_p(p);
  if (dim == 0 || a.size() % dim != 0 || b.size() % dim != 0) fail(ErrorCode::Domain, "bad point cloud shape");
  if (directions == 0) fail(ErrorCode::Domain, "need at least one direction");
  const Stream st(StreamId{seed, fnv1a64("projection"), 0, 0});
  std::vector<double> dir(dim + (dim % 2)), pa(a.size() / dim), pb(b.size() / dim);
  double acc = 0.0;
  for (std::size_t k = 0; k < directions; ++k) {
    st.normals(k, tag::aux, dir.data(), dim);
    const double nn = norm(std::span<const double>(dir.data(), dim));
    for (std::size_t j = 0; j < dim; ++j) dir[j] /= nn;
    const std::span<const double> e(dir.data(), dim);
    for (std::size_t i = 0; i < pa.size(); ++i) pa[i] = dot(a.subspan(i * dim, dim), e);
    for (std::size_t i = 0; i < pb.size(); ++i) pb[i] = dot(b.subspan(i * dim, dim), e);
    acc += w_p_1d(pa, pb, p);
  }
  return acc / static_cast<double>(directions);
}

Estimate w_p_1d_bootstrap(std::span<const double> a, std::span<const double> b, int p, std::size_t resamples,
                          std::uint64_t seed) {
  Estimate e;
  e.value = w_p_1d(a, b, p);
  if (resamples < 2) return e;
  const Stream st(StreamId{seed, fnv1a64("bootstrap"), 0, 0});
  std::vector<double> ra(a.size()), rb(b.size()), stats(resamples);
  for (std::size_t r = 0; r < resamples; ++r) {
    for (std::size_t i = 0; i < a.size(); ++i) ra[i] = a[st.below(r, static_cast<std::uint32_t>(i), 1, a.size())];
    for (std::size_t i = 0; i < b.size(); ++i) rb[i] = b[st.below(r, static_cast<std::uint32_t>(i), 2, b.size())];
    stats[r] = w_p_1d(ra, rb, p);
  }
  e.se = std::sqrt(summarize(stats).variance);
  return e;
}

Estimate bootstrap_mean_pow(std::span<const double> v, int p, std::size_t resamples, std::uint64_t seed) {
  check_p(p);
  if (v.empty()) fail(ErrorCode::Domain, "empty ensemble");
  auto stat = [&](auto&& at) {
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) acc += pow_p(at(i), p);
    return root_p(acc / static_cast<double>(v.size()), p);
  };
  Estimate e;
  e.value = stat([&](std::size_t i) { return v[i]; });
  if (resamples < 2) return e;
  const Stream st(StreamId{seed, fnv1a64("bootstrap-mean"), 0, 0});
  std::vector<double> stats(resamples);
  for (std::size_t r = 0; r < resamples; ++r)
    stats[r] = stat([&](std::size_t i) { return v[st.below(r, static_cast<std::uint32_t>(i), 1, v.size())]; });
  e.se = std::sqrt(summarize(stats).variance);
  return e;
}

namespace {

double sorted_to_law(const std::vector<double>& s, const std::function<double(double)>& quantile, int p) {
  const double n = static_cast<double>(s.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) acc += pow_p(s[i] - quantile((static_cast<double>(i) + 0.5) / n), p);
  return root_p(acc / n, p);
}

}  // namespace

double w_p_1d_to_law(std::span<const double> a, const std::function<double(double)>& quantile, int p) {
  check_p(p);
  if (a.empty()) fail(ErrorCode::Domain, "empty ensemble");
  std::vector<double> s(a.begin(), a.end());
  std::sort(s.begin(), s.end());
  return sorted_to_law(s, quantile, p);
}

Estimate w_p_1d_to_law_bootstrap(std::span<const double> a, const std::function<double(double)>& quantile, int p,
                                 std::size_t resamples, std::uint64_t seed) {
  Estimate e;
  e.value = w_p_1d_to_law(a, quantile, p);
  if (resamples < 2) return e;
  // the law's quantiles are shared by every resample
  const double n = static_cast<double>(a.size());
  std::vector<double> q(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) q[i] = quantile((static_cast<double>(i) + 0.5) / n);
  const Stream st(StreamId{seed, fnv1a64("bootstrap-law"), 0, 0});
  std::vector<double> ra(a.size()), stats(resamples);
  for (std::size_t r = 0; r < resamples; ++r) {
    for (std::size_t i = 0; i < a.size(); ++i) ra[i] = a[st.below(r, static_cast<std::uint32_t>(i), 1, a.size())];
    std::sort(ra.begin(), ra.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) acc += pow_p(ra[i] - q[i], p);
    stats[r] = root_p(acc / n, p);
  }
  e.se = std::sqrt(summarize(stats).variance);
  return e;
}

double normal_quantile(double u, double mean, double sd) {
  return boost::math::quantile(boost::math::normal(mean, sd), u);
}

double normal_cdf(double x, double mean, double variance) {
  return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * variance));
}

double kolmogorov_tail(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double critical_lambda(double level) { return std::sqrt(-0.5 * std::log(level / 2.0)); }

}  // namespace

KsResult ks_one_sample(std::span<const double> a, const std::function<double(double)>& cdf, double level) {
  if (a.empty()) fail(ErrorCode::Domain, "empty ensemble");
  std::vector<double> s(a.begin(), a.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  KsResult r;
  r.statistic = d;
  r.critical = critical_lambda(level) / std::sqrt(n);
  r.p_value = kolmogorov_tail(std::sqrt(n) * d);
  r.pass = d <= r.critical;
  return r;
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b, double level) {
  if (a.empty() || b.empty()) fail(ErrorCode::Domain, "empty ensemble");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  KsResult r;
  r.statistic = d;
  r.critical = critical_lambda(level) / std::sqrt(ne);
  r.p_value = kolmogorov_tail(std::sqrt(ne) * d);
  r.pass = d <= r.critical;
  return r;
}

RateFit rate_fit(std::span<const RatePoint> points) {
  if (points.size() < 3) fail(ErrorCode::Domain, "rate fit needs at least three points");
  std::vector<double> xs, ys;
  for (const auto& pt : points) {
    if (!(pt.h > 0.0) || !(pt.value > 0.0)) fail(ErrorCode::Domain, "rate fit needs positive h and values");
    xs.push_back(std::log(pt.h));
    ys.push_back(std::log(pt.value));
  }
  const double n = static_cast<double>(xs.size());
  const double mx = summarize(xs).mean, my = summarize(ys).mean;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) fail(ErrorCode::Domain, "rate fit needs distinct h values");
  RateFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - f.intercept - f.slope * xs[i];
    rss += e * e;
  }
  f.se = std::sqrt(rss / (n - 2.0) / sxx);
  return f;
}

}  // namespace eb
