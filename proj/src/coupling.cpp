// SPDX-License-Identifier: Apache-2.0
#include "eulerbound/coupling.hpp"

#include <cmath>

#include "eulerbound/error.hpp"

namespace eb {

const char* branch_name(Branch b) noexcept {
  switch (b) {
    case Branch::Merged: return "merged";
    case Branch::Reflected: return "reflected";
    case Branch::Synchronous: return "synchronous";
  }
  return "unknown";
}

void validate_params(const CouplingParams& p) {
  if (!(p.h > 0.0) || !std::isfinite(p.h)) fail(ErrorCode::Domain, "coupling step h must be positive and finite");
  if (!(p.m > 0.0)) fail(ErrorCode::Domain, "coupling truncation m must be positive");
  if (!(p.H > 0.0)) fail(ErrorCode::Domain, "coupling threshold H must be positive");
}

Vec reflect(std::span<const double> x_hat, std::span<const double> y_hat, std::span<const double> u) {
  const double r = dist(x_hat, y_hat);
  if (r == 0.0) fail(ErrorCode::Domain, "reflection undefined for coincident points");
  double ip = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) ip += (x_hat[i] - y_hat[i]) / r * u[i];
  Vec out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] - 2.0 * ip * ((x_hat[i] - y_hat[i]) / r);
  return out;
}

Branch couple_from_hat(std::span<const double> x_hat, std::span<const double> y_hat, const CouplingParams& p,
                       std::span<const double> z, double zeta, std::span<double> x_next, std::span<double> y_next) {
  const std::size_t d = x_hat.size();
  const double sh = std::sqrt(p.h);
  double step_sq = 0.0, r_sq = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double s = sh * z[i];
    x_next[i] = x_hat[i] + s;
    step_sq += s * s;
    const double e = x_hat[i] - y_hat[i];
    r_sq += e * e;
  }
  const double r_hat = std::sqrt(r_sq);
  if (std::sqrt(step_sq) >= p.m || r_hat > p.H) {
    for (std::size_t i = 0; i < d; ++i) y_next[i] = y_hat[i] + sh * z[i];
    return Branch::Synchronous;
  }
  if (r_hat == 0.0) {
    for (std::size_t i = 0; i < d; ++i) y_next[i] = x_next[i];
    return Branch::Merged;
  }
  double dx_sq = 0.0, dy_sq = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double a = x_next[i] - x_hat[i];
    const double b = x_next[i] - y_hat[i];
    dx_sq += a * a;
    dy_sq += b * b;
  }
  const double ratio = std::sqrt(dy_sq) <= p.m ? std::exp(std::min(0.0, (dx_sq - dy_sq) / (2.0 * p.h))) : 0.0;
  if (zeta <= ratio) {
    for (std::size_t i = 0; i < d; ++i) y_next[i] = x_next[i];
    return Branch::Merged;
  }
  double ip = 0.0;
  for (std::size_t i = 0; i < d; ++i) ip += (x_hat[i] - y_hat[i]) / r_hat * (sh * z[i]);
  for (std::size_t i = 0; i < d; ++i)
    y_next[i] = y_hat[i] + (sh * z[i] - 2.0 * ip * ((x_hat[i] - y_hat[i]) / r_hat));
  return Branch::Reflected;
}

Branch couple_from_hat_1d(double x_hat, double y_hat, const CouplingParams& p, double z, double zeta, double& x_next,
                          double& y_next) noexcept {
  const double sh = std::sqrt(p.h);
  const double s = sh * z;
  x_next = x_hat + s;
  const double r_hat = std::fabs(x_hat - y_hat);
  if (std::fabs(s) >= p.m || r_hat > p.H) {
    y_next = y_hat + s;
    return Branch::Synchronous;
  }
  if (r_hat == 0.0) {
    y_next = x_next;
    return Branch::Merged;
  }
  const double a = x_next - x_hat;
  const double b = x_next - y_hat;
  const double dx_sq = a * a, dy_sq = b * b;
  const double ratio = std::fabs(b) <= p.m ? std::exp(std::min(0.0, (dx_sq - dy_sq) / (2.0 * p.h))) : 0.0;
  if (zeta <= ratio) {
    y_next = x_next;
    return Branch::Merged;
  }
  // in one dimension the reflection maps u to -u
  y_next = y_hat - s;
  return Branch::Reflected;
}

namespace {

CouplingOutcome finish(Vec&& xh, Vec&& yh, const CouplingParams& p, std::span<const double> z, double zeta) {
  CouplingOutcome out;
  out.x_next.resize(xh.size());
  out.y_next.resize(xh.size());
  out.r_hat = dist(xh, yh);
  out.branch = couple_from_hat(xh, yh, p, z, zeta, out.x_next, out.y_next);
  return out;
}

}  // namespace

CouplingOutcome truncated_mirror_step(std::span<const double> x, std::span<const double> y, const DriftModel& drift,
                                      const CouplingParams& p, std::span<const double> z, double zeta) {
  validate_params(p);
  if (z.size() != drift.dim) fail(ErrorCode::Domain, "noise dimension mismatch");
  Vec xh = eval_drift(drift, x), yh = eval_drift(drift, y);
  for (std::size_t i = 0; i < xh.size(); ++i) {
    xh[i] = x[i] + p.h * xh[i];
    yh[i] = y[i] + p.h * yh[i];
  }
  return finish(std::move(xh), std::move(yh), p, z, zeta);
}

CouplingOutcome inaccurate_truncated_mirror_step(std::span<const double> x, std::span<const double> y,
                                                 const InaccurateDrift& drift, const SubsampleDraw& u,
                                                 const CouplingParams& p, std::span<const double> z, double zeta) {
  validate_params(p);
  if (z.size() != drift.base.dim) fail(ErrorCode::Domain, "noise dimension mismatch");
  const AffineCoeffs co = aggregate_draw(drift, u);
  Vec xh(x.size()), yh(y.size());
  eval_inaccurate_into(drift, co, x, xh);
  eval_inaccurate_into(drift, co, y, yh);
  for (std::size_t i = 0; i < xh.size(); ++i) {
    xh[i] = x[i] + p.h * xh[i];
    yh[i] = y[i] + p.h * yh[i];
  }
  return finish(std::move(xh), std::move(yh), p, z, zeta);
}

}  // namespace eb
