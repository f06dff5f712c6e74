// SPDX-License-Identifier: Apache-2.0
#include "eulerbound/oracles.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "eulerbound/constants.hpp"
#include "eulerbound/error.hpp"

namespace eb {

namespace {

double normal_pdf(double t, double h) {
  return std::exp(-t * t / (2.0 * h)) / std::sqrt(2.0 * std::numbers::pi * h);
}

// merge probability given t, with |t| < m assumed by the caller
double merge_ratio(double t, double r_hat, double h, double m) {
  if (std::fabs(t - r_hat) > m) return 0.0;
  return std::exp(std::min(0.0, (t * t - (t - r_hat) * (t - r_hat)) / (2.0 * h)));
}

// integrate g over (lo, hi) split at the sorted breakpoints inside it
double integrate_pieces(const std::function<double(double)>& g, double lo, double hi, std::vector<double> cuts) {
  using boost::math::quadrature::gauss_kronrod;
  cuts.push_back(lo);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = std::max(cuts[i], lo), b = std::min(cuts[i + 1], hi);
    if (!(b > a)) continue;
    double err = 0.0, l1 = 0.0;
    const double v = gauss_kronrod<double, 31>::integrate(g, a, b, 20, 1e-13, &err, &l1);
    // boost reports leaf errors on the reference interval [-1, 1]
    err *= (b - a) / 2.0;
    if (err > 1e-9 * std::max(1.0, l1)) fail(ErrorCode::Quadrature, "oracle quadrature did not converge");
    total += v;
  }
  return total;
}

double effective_limit(double h, double m) { return std::min(m, 14.0 * std::sqrt(h)); }

}  // namespace

double quadrature_first_moment(double r_hat, double h, double m, bool with_merge) {
  if (!(h > 0.0) || !(m > 0.0) || r_hat < 0.0) fail(ErrorCode::Domain, "first-moment oracle needs h, m > 0, r_hat >= 0");
  if (r_hat == 0.0) return 0.0;
  const double lim = effective_limit(h, m);
  auto g = [&](double t) {
    const double ratio = with_merge ? merge_ratio(t, r_hat, h, m) : 0.0;
    const double reflected = std::fabs(2.0 * t - r_hat);
    return (ratio * (0.0 - r_hat) + (1.0 - ratio) * (reflected - r_hat)) * normal_pdf(t, h);
  };
  return integrate_pieces(g, -lim, lim, {r_hat - m, r_hat / 2.0, 0.0});
}

SecondMomentLower quadrature_second_moment_lower(double r_hat, double h, double m) {
  if (!(h > 0.0) || !(m > 0.0) || r_hat < 0.0) fail(ErrorCode::Domain, "second-moment oracle needs h, m > 0, r_hat >= 0");
  if (h > 4.0 * m * m) fail(ErrorCode::Domain, "precondition h <= 4 m^2 violated");
  const double sh = std::sqrt(h);
  SecondMomentLower out;
  if (r_hat <= sh) {
    out.interval_lo = 0.0;
    out.interval_hi = r_hat + sh;
  } else {
    out.interval_lo = r_hat - sh;
    out.interval_hi = r_hat;
  }
  out.alpha_bar = 0.5 * compute_c0() * std::min(sh, r_hat) * sh;
  if (r_hat == 0.0) return out;
  const double lim = effective_limit(h, m);
  const double lo = out.interval_lo, hi = out.interval_hi;
  auto g = [&](double t) {
    const double ratio = merge_ratio(t, r_hat, h, m);
    const double rp = std::fabs(2.0 * t - r_hat);
    if (!(rp > lo && rp < hi)) return 0.0;
    const double dev = rp - r_hat;
    return (1.0 - ratio) * dev * dev * normal_pdf(t, h);
  };
  out.lhs = integrate_pieces(g, -lim, lim,
                             {r_hat - m, r_hat / 2.0, 0.0, (r_hat + lo) / 2.0, (r_hat - lo) / 2.0, (r_hat + hi) / 2.0,
                              (r_hat - hi) / 2.0});
  return out;
}

BranchProbabilities branch_probabilities(double r_hat, double h, double m, double H) {
  if (!(h > 0.0) || !(m > 0.0) || !(H > 0.0) || r_hat < 0.0) fail(ErrorCode::Domain, "invalid branch oracle inputs");
  BranchProbabilities p;
  if (r_hat > H) {
    p.sync = 1.0;
    return p;
  }
  // P(|t| < m) in closed form; the split between merge and reflect by quadrature
  const double inside = std::isinf(m) ? 1.0 : std::erf(m / std::sqrt(2.0 * h));
  p.sync = 1.0 - inside;
  if (r_hat == 0.0) {
    p.merge = inside;
    return p;
  }
  const double lim = effective_limit(h, m);
  auto g = [&](double t) { return merge_ratio(t, r_hat, h, m) * normal_pdf(t, h); };
  p.merge = integrate_pieces(g, -lim, lim, {r_hat - m, r_hat / 2.0, 0.0});
  p.reflect = inside - p.merge;
  return p;
}

SubsampleMoments enumerate_subsampling(const InaccurateDrift& model, std::span<const double> x) {
  const std::size_t m = model.base.m(), s = model.s, d = model.base.dim;
  if (m > 8) fail(ErrorCode::Size, "enumeration capped at m <= 8");
  if (s == 0 || s > m) fail(ErrorCode::Domain, "subsample size must satisfy 1 <= s <= m");
  std::vector<Vec> comp(m);
  for (std::size_t i = 0; i < m; ++i) comp[i] = eval_component(model.base, i, x);
  const double scale = static_cast<double>(m) / static_cast<double>(s);
  std::vector<Vec> values;
  std::vector<std::size_t> idx(s, 0);
  auto push = [&] {
    Vec v(d, 0.0);
    for (std::size_t i : idx)
      for (std::size_t j = 0; j < d; ++j) v[j] += comp[i][j];
    for (double& e : v) e *= scale;
    values.push_back(std::move(v));
  };
  if (model.scheme == Scheme::WithReplacement) {
    while (true) {
      push();
      std::size_t k = 0;
      while (k < s && ++idx[k] == m) idx[k++] = 0;
      if (k == s) break;
    }
  } else {
    for (std::size_t i = 0; i < s; ++i) idx[i] = i;
    while (true) {
      push();
      std::size_t k = s;
      while (k > 0 && idx[k - 1] == m - s + (k - 1)) --k;
      if (k == 0) break;
      ++idx[k - 1];
      for (std::size_t j = k; j < s; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  SubsampleMoments out;
  out.draws = values.size();
  out.mean.assign(d, 0.0);
  for (const auto& v : values)
    for (std::size_t j = 0; j < d; ++j) out.mean[j] += v[j];
  for (double& e : out.mean) e /= static_cast<double>(values.size());
  for (const auto& v : values) out.variance += dist_sq(v, out.mean);
  out.variance /= static_cast<double>(values.size());
  out.mean_norm = norm(out.mean);
  return out;
}

}  // namespace eb
