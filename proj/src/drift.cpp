// SPDX-License-Identifier: Apache-2.0
#include "eulerbound/drift.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "eulerbound/error.hpp"

namespace eb {

std::string drift_kind_name(DriftKind k) {
  switch (k) {
    case DriftKind::OrnsteinUhlenbeck: return "ornstein_uhlenbeck";
    case DriftKind::TruncatedDoubleWell: return "double_well";
    case DriftKind::FiniteSum: return "finite_sum";
  }
  return "unknown";
}

DriftModel make_ou(std::size_t dim) {
  DriftModel m;
  m.kind = DriftKind::OrnsteinUhlenbeck;
  m.dim = dim;
  m.lipschitz_L = 1.0;
  m.contraction_K = 1.0;
  m.radius_R = 0.0;
  m.b_at_zero_norm = 0.0;
  return m;
}

DriftModel make_double_well(double a_dw, double n, std::size_t dim, double L, double K, double R) {
  if (!(a_dw > 0.0) || !(n > 0.0)) fail(ErrorCode::Domain, "double well needs a_dw > 0 and n > 0");
  DriftModel m;
  m.kind = DriftKind::TruncatedDoubleWell;
  m.dim = dim;
  m.a_dw = a_dw;
  m.n_dw = n;
  m.lipschitz_L = L;
  m.contraction_K = K;
  m.radius_R = R;
  m.b_at_zero_norm = 0.0;
  return m;
}

DriftModel make_finite_sum(BaseDrift base, double a_dw, double n, std::size_t dim, std::vector<Component> comps,
                           double L, double K, double R) {
  if (comps.empty()) fail(ErrorCode::Domain, "finite sum needs at least one component");
  for (auto& c : comps) {
    if (c.offset.empty()) c.offset.assign(dim, 0.0);
    if (c.offset.size() != dim) fail(ErrorCode::Domain, "component offset dimension mismatch");
  }
  DriftModel m;
  m.kind = DriftKind::FiniteSum;
  m.dim = dim;
  m.base = base;
  m.a_dw = a_dw;
  m.n_dw = n;
  m.components = std::move(comps);
  m.lipschitz_L = L;
  m.contraction_K = K;
  m.radius_R = R;
  const Vec zero(dim, 0.0);
  m.b_at_zero_norm = norm(eval_drift(m, zero));
  return m;
}

double double_well_1d(double x, double a_dw, double n) noexcept {
  if (std::fabs(x) <= n) return (-4.0 * x) * (x * x - a_dw);
  const double s = x > 0.0 ? 1.0 : -1.0;
  return s * (2.0 * a_dw * n) - (2.0 * n * n) * x;
}

namespace {

void check_input(const DriftModel& model, std::span<const double> x, std::span<double> out) {
  if (x.size() != model.dim || out.size() != model.dim) fail(ErrorCode::Domain, "drift dimension mismatch");
  if (!all_finite(x)) fail(ErrorCode::Domain, "drift evaluated at a non-finite point");
}

}  // namespace

void eval_base_into(const DriftModel& model, std::span<const double> x, std::span<double> out) {
  switch (model.base) {
    case BaseDrift::Zero:
      std::fill(out.begin(), out.end(), 0.0);
      break;
    case BaseDrift::OrnsteinUhlenbeck:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = -x[i];
      break;
    case BaseDrift::TruncatedDoubleWell:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = double_well_1d(x[i], model.a_dw, model.n_dw);
      break;
  }
}

void eval_drift_into(const DriftModel& model, std::span<const double> x, std::span<double> out) {
  check_input(model, x, out);
  switch (model.kind) {
    case DriftKind::OrnsteinUhlenbeck:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = -x[i];
      return;
    case DriftKind::TruncatedDoubleWell:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = double_well_1d(x[i], model.a_dw, model.n_dw);
      return;
    case DriftKind::FiniteSum: {
      Vec base(x.size());
      eval_base_into(model, x, base);
      std::fill(out.begin(), out.end(), 0.0);
      for (const auto& c : model.components)
        for (std::size_t i = 0; i < x.size(); ++i) out[i] += (c.weight * base[i] - c.slope * x[i]) + c.offset[i];
      return;
    }
  }
}

Vec eval_drift(const DriftModel& model, std::span<const double> x) {
  Vec out(model.dim);
  eval_drift_into(model, x, out);
  return out;
}

Vec eval_component(const DriftModel& model, std::size_t i, std::span<const double> x) {
  if (model.kind != DriftKind::FiniteSum) fail(ErrorCode::Domain, "components exist only for finite sums");
  if (i >= model.m()) fail(ErrorCode::Domain, "component index out of range");
  Vec out(model.dim);
  check_input(model, x, out);
  eval_base_into(model, x, out);
  const auto& c = model.components[i];
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (c.weight * out[j] - c.slope * x[j]) + c.offset[j];
  return out;
}

// ---- inaccurate drift -------------------------------------------------------

bool is_full_sample(const InaccurateDrift& model) noexcept {
  return model.scheme == Scheme::WithoutReplacement && model.s == model.base.m();
}

void validate_draw(const InaccurateDrift& model, const SubsampleDraw& u) {
  const std::size_t m = model.base.m();
  if (u.size() != model.s) fail(ErrorCode::Domain, "subsample draw has the wrong size");
  for (std::size_t i : u)
    if (i >= m) fail(ErrorCode::Domain, "subsample index out of range");
  if (model.scheme == Scheme::WithoutReplacement) {
    SubsampleDraw sorted = u;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      fail(ErrorCode::Domain, "repeated index in a without-replacement draw");
  }
}

AffineCoeffs aggregate_draw(const InaccurateDrift& model, const SubsampleDraw& u) {
  validate_draw(model, u);
  AffineCoeffs out;
  aggregate_draw_into(model, u, out);
  return out;
}

void eval_inaccurate_into(const InaccurateDrift& model, const AffineCoeffs& coeffs, std::span<const double> x,
                          std::span<double> out) {
  check_input(model.base, x, out);
  eval_base_into(model.base, x, out);
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (coeffs.weight * out[j] - coeffs.slope * x[j]) + coeffs.offset[j];
}

Vec eval_inaccurate_drift(const InaccurateDrift& model, std::span<const double> x, const SubsampleDraw& u) {
  if (model.base.kind != DriftKind::FiniteSum) fail(ErrorCode::Domain, "inaccurate drift needs a finite sum");
  validate_draw(model, u);
  const double scale = static_cast<double>(model.base.m()) / static_cast<double>(model.s);
  Vec out(model.base.dim, 0.0);
  for (std::size_t i : u) {
    const Vec bi = eval_component(model.base, i, x);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += bi[j];
  }
  for (double& v : out) v *= scale;
  return out;
}

void draw_subsample_into(const InaccurateDrift& model, const Stream& stream, std::uint64_t step, std::uint32_t tg,
                         std::span<std::size_t> out, std::span<std::size_t> pool) {
  const std::size_t m = model.base.m();
  if (model.scheme == Scheme::WithReplacement) {
    for (std::size_t i = 0; i < model.s; ++i) out[i] = stream.below(step, static_cast<std::uint32_t>(i), tg, m);
    return;
  }
  // partial Fisher-Yates
  std::iota(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m), std::size_t{0});
  for (std::size_t i = 0; i < model.s; ++i) {
    const std::size_t j = i + stream.below(step, static_cast<std::uint32_t>(i), tg, m - i);
    std::swap(pool[i], pool[j]);
    out[i] = pool[i];
  }
}

SubsampleDraw draw_subsample(const InaccurateDrift& model, const Stream& stream, std::uint64_t step,
                             std::uint32_t tg) {
  SubsampleDraw u(model.s);
  std::vector<std::size_t> pool(model.base.m());
  draw_subsample_into(model, stream, step, tg, u, pool);
  return u;
}

void aggregate_draw_into(const InaccurateDrift& model, std::span<const std::size_t> u, AffineCoeffs& out) {
  const auto& comps = model.base.components;
  const double scale = static_cast<double>(comps.size()) / static_cast<double>(model.s);
  out.weight = 0.0;
  out.slope = 0.0;
  out.offset.assign(model.base.dim, 0.0);
  for (std::size_t i : u) {
    out.weight += comps[i].weight;
    out.slope += comps[i].slope;
    for (std::size_t j = 0; j < out.offset.size(); ++j) out.offset[j] += comps[i].offset[j];
  }
  out.weight *= scale;
  out.slope *= scale;
  for (double& v : out.offset) v *= scale;
}

double subsampling_variance(const InaccurateDrift& model, std::span<const double> x) {
  const std::size_t m = model.base.m();
  const std::size_t s = model.s;
  if (m == 0 || s == 0 || s > m) fail(ErrorCode::Domain, "subsample size must satisfy 1 <= s <= m");
  const Vec b = eval_drift(model.base, x);
  const double md = static_cast<double>(m), sd = static_cast<double>(s);
  if (model.scheme == Scheme::WithReplacement) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += norm_sq(eval_component(model.base, i, x));
    return std::max(0.0, (md * acc - norm_sq(b)) / sd);
  }
  if (s == m) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const Vec bi = eval_component(model.base, i, x);
    for (std::size_t j = 0; j < bi.size(); ++j) {
      const double d = bi[j] - b[j] / md;
      acc += d * d;
    }
  }
  return (md / sd) * (1.0 - sd / md) * (md / (md - 1.0)) * acc;
}

// ---- assumption constants ----------------------------------------------------

Lyapunov lyapunov_constants(const DriftModel& model) {
  const double K = model.contraction_K, L = model.lipschitz_L, b0 = model.b_at_zero_norm;
  if (!(K > 0.0) || !(L > 0.0) || model.radius_R < 0.0 || b0 < 0.0)
    fail(ErrorCode::ConstantInfeasible, "invalid assumption constants");
  const double rho = std::max(model.radius_R, 2.0 * b0 / K);
  return {K / 2.0, L * rho * rho + b0 * rho};
}

namespace {

struct PairStats {
  double max_lip = 0.0;
  double min_contr = std::numeric_limits<double>::infinity();
  std::size_t pairs = 0;
  std::size_t far = 0;
};

void accumulate_pair(const DriftModel& model, std::span<const double> x, std::span<const double> y,
                     std::span<const double> bx, std::span<const double> by, PairStats& st) {
  double dd = 0.0, db = 0.0, ip = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    const double e = bx[i] - by[i];
    dd += d * d;
    db += e * e;
    ip += d * e;
  }
  if (dd == 0.0) return;
  ++st.pairs;
  st.max_lip = std::max(st.max_lip, std::sqrt(db / dd));
  if (std::sqrt(dd) > model.radius_R) {
    ++st.far;
    st.min_contr = std::min(st.min_contr, -ip / dd);
  }
}

std::vector<double> kink_points(const DriftModel& model) {
  const bool dw = model.kind == DriftKind::TruncatedDoubleWell ||
                  (model.kind == DriftKind::FiniteSum && model.base == BaseDrift::TruncatedDoubleWell);
  if (!dw) return {};
  return {-model.n_dw, model.n_dw};
}

}  // namespace

AssumptionReport verify_assumptions(const DriftModel& model, const GridSpec& grid) {
  const std::size_t d = model.dim;
  PairStats st;
  Vec x(d), y(d), bx(d), by(d);
  const Stream rng(StreamId{grid.seed, fnv1a64("verify_assumptions"), 0, 0});
  const double B = grid.box_radius;
  for (std::size_t p = 0; p < grid.random_pairs; ++p) {
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = (2.0 * rng.uniform(p, static_cast<std::uint32_t>(2 * i), tag::aux) - 1.0) * B;
      y[i] = (2.0 * rng.uniform(p, static_cast<std::uint32_t>(2 * i + 1), tag::aux) - 1.0) * B;
    }
    // every fourth pair is a short separation, where non-convexity shows up
    if (p % 4 == 3) {
      const double r = rng.uniform(p, 1000, tag::aux) * 3.0 * std::max(model.radius_R, 1e-3);
      double nn = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        y[i] = rng.normal(p, 2000 + static_cast<std::uint32_t>(i), tag::aux);
        nn += y[i] * y[i];
      }
      nn = std::sqrt(nn);
      for (std::size_t i = 0; i < d; ++i) y[i] = x[i] / 10.0 + r * y[i] / nn;
      for (std::size_t i = 0; i < d; ++i) x[i] = x[i] / 10.0;
    }
    eval_drift_into(model, x, bx);
    eval_drift_into(model, y, by);
    accumulate_pair(model, x, y, bx, by, st);
  }
  // dense scan along the first coordinate axis
  const std::size_t P = std::max<std::size_t>(grid.scan_points, 2);
  const double S = grid.scan_radius;
  std::vector<Vec> pts;
  pts.reserve(P + 8);
  for (std::size_t k = 0; k < P; ++k) {
    Vec v(d, 0.0);
    v[0] = -S + 2.0 * S * static_cast<double>(k) / static_cast<double>(P - 1);
    pts.push_back(v);
  }
  for (double kp : kink_points(model)) {
    for (double eps : {-1e-7, 1e-7}) {
      Vec v(d, 0.0);
      v[0] = kp + eps;
      pts.push_back(v);
    }
  }
  std::vector<Vec> bs;
  bs.reserve(pts.size());
  for (const auto& v : pts) bs.push_back(eval_drift(model, v));
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) accumulate_pair(model, pts[i], pts[j], bs[i], bs[j], st);

  AssumptionReport rep;
  rep.max_lipschitz_ratio = st.max_lip;
  rep.min_contraction_ratio = st.far ? st.min_contr : model.contraction_K;
  rep.pairs = st.pairs;
  rep.far_pairs = st.far;
  rep.lipschitz_ok = st.max_lip <= model.lipschitz_L * (1.0 + 1e-12);
  rep.contraction_ok = rep.min_contraction_ratio >= model.contraction_K * (1.0 - 1e-12);
  rep.pass = rep.lipschitz_ok && rep.contraction_ok && model.contraction_K <= model.lipschitz_L;
  return rep;
}

DriftModel certify_constants(DriftModel model, double K, const GridSpec& grid) {
  if (!(K > 0.0)) fail(ErrorCode::Domain, "certification needs K > 0");
  // every supported model is coordinatewise, so the 1-d restriction carries the constants
  DriftModel one = model;
  one.dim = 1;
  for (auto& c : one.components) c.offset.resize(1);
  const std::size_t P = std::max<std::size_t>(grid.scan_points, 2);
  const double S = grid.scan_radius;
  std::vector<double> xs(P);
  for (std::size_t k = 0; k < P; ++k) xs[k] = -S + 2.0 * S * static_cast<double>(k) / static_cast<double>(P - 1);
  for (double kp : kink_points(one)) {
    xs.push_back(kp - 1e-7);
    xs.push_back(kp + 1e-7);
  }
  std::sort(xs.begin(), xs.end());
  std::vector<double> bs(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) bs[k] = eval_drift(one, std::span<const double>(&xs[k], 1))[0];
  double lip = 0.0, lplus = -std::numeric_limits<double>::infinity(), R = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      const double dx = xs[j] - xs[i];
      if (dx <= 0.0) continue;
      const double slope = (bs[j] - bs[i]) / dx;
      lip = std::max(lip, std::fabs(slope));
      lplus = std::max(lplus, slope);
      if (-slope < K) R = std::max(R, dx);
    }
  }
  const double spacing = 2.0 * S / static_cast<double>(P - 1);
  if (R > 0.0) R += 2.0 * spacing;
  const bool dw = model.kind == DriftKind::TruncatedDoubleWell ||
                  (model.kind == DriftKind::FiniteSum && model.base == BaseDrift::TruncatedDoubleWell);
  if (dw && std::fabs(model.a_dw - model.n_dw * model.n_dw) <= 1e-12 * std::max(1.0, model.a_dw)) {
    double wsum = 1.0, lsum = 0.0;
    if (model.kind == DriftKind::FiniteSum) {
      wsum = 0.0;
      for (const auto& c : model.components) {
        wsum += c.weight;
        lsum += c.slope;
      }
    }
    const double a = model.a_dw, n = model.n_dw;
    const double dmax = std::max({4.0 * a, std::fabs(12.0 * n * n - 4.0 * a), 2.0 * n * n});
    lip = std::max(lip, std::fabs(wsum) * dmax + std::fabs(lsum));
  }
  if (K > lip) fail(ErrorCode::ConstantInfeasible, "requested K exceeds the Lipschitz constant");
  model.lipschitz_L = lip;
  model.contraction_K = K;
  model.radius_R = R;
  if (model.dim > 1 && R > 0.0) {
    const double lp = std::max(lplus, 0.0);
    model.contraction_K = K / 2.0;
    model.radius_R = R * std::sqrt(2.0 * (K + lp) * static_cast<double>(model.dim) / K);
  }
  const Vec zero(model.dim, 0.0);
  model.b_at_zero_norm = norm(eval_drift(model, zero));
  return model;
}

InaccurateDrift certify_inaccurate(const DriftModel& base, Scheme scheme, std::size_t s, double alpha,
                                   double h_max, const GridSpec& grid) {
  if (base.kind != DriftKind::FiniteSum) fail(ErrorCode::Domain, "inaccurate drift needs a finite sum");
  const std::size_t m = base.m();
  if (s == 0 || s > m) fail(ErrorCode::Domain, "subsample size must satisfy 1 <= s <= m");
  if (!(h_max > 0.0) || alpha < 0.0) fail(ErrorCode::Domain, "invalid h range or alpha");
  InaccurateDrift model;
  model.base = base;
  model.scheme = scheme;
  model.s = s;
  model.alpha = alpha;
  model.alpha_c = alpha;
  double vmax = 0.0;
  const Stream rng(StreamId{grid.seed, fnv1a64("certify_inaccurate"), 0, 0});
  Vec x(base.dim);
  const std::size_t P = std::max<std::size_t>(grid.scan_points, 2);
  for (std::size_t k = 0; k < P + grid.random_pairs / 10; ++k) {
    if (k < P) {
      const double t = -grid.box_radius + 2.0 * grid.box_radius * static_cast<double>(k) / static_cast<double>(P - 1);
      std::fill(x.begin(), x.end(), t);
    } else {
      for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = (2.0 * rng.uniform(k, static_cast<std::uint32_t>(i), tag::aux) - 1.0) * grid.box_radius;
    }
    vmax = std::max(vmax, subsampling_variance(model, x) / (1.0 + norm_sq(x)));
  }
  const double hpow = std::pow(h_max, alpha);
  model.sigma = std::sqrt(vmax / hpow);
  model.L_u = 6.0 * vmax / hpow;
  bool uniform = true;
  double wmax = 0.0, lmax = 0.0;
  for (const auto& c : base.components) {
    wmax = std::max(wmax, std::fabs(c.weight));
    lmax = std::max(lmax, std::fabs(c.slope));
    if (c.slope != 0.0 || std::fabs(c.weight * static_cast<double>(m) - 1.0) > 1e-12) uniform = false;
  }
  if (uniform) {
    model.bar_L = base.lipschitz_L;
    model.bar_K = base.contraction_K;
    model.bar_R = base.radius_R;
  } else {
    double lb = 0.0;
    if (base.base == BaseDrift::OrnsteinUhlenbeck) lb = 1.0;
    if (base.base == BaseDrift::TruncatedDoubleWell) {
      const double a = base.a_dw, n = base.n_dw;
      lb = std::max({4.0 * a, std::fabs(12.0 * n * n - 4.0 * a), 2.0 * n * n});
    }
    model.bar_L = static_cast<double>(m) * (wmax * lb + lmax);
    model.bar_K = 0.0;
    model.bar_R = 0.0;
  }
  return model;
}

}  // namespace eb
