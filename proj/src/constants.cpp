// SPDX-License-Identifier: Apache-2.0
#include "eulerbound/constants.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "eulerbound/error.hpp"

namespace eb {

namespace {

double std_normal_pdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }

C0Report compute_c0_uncached() {
  using boost::math::quadrature::gauss_kronrod;
  C0Report rep;
  auto g1 = [](double u) { return u * u * (1.0 - std::exp(u - 0.5)) * std_normal_pdf(u); };
  auto g2 = [](double u) { return u * u * u * std_normal_pdf(u); };
  rep.first_integral = gauss_kronrod<double, 61>::integrate(g1, 0.0, 0.5, 15, 1e-14, &rep.first_error);
  const double i2 = gauss_kronrod<double, 61>::integrate(g2, 0.0, 0.5, 15, 1e-14, &rep.second_error);
  rep.second_integral = (1.0 - std::exp(-1.0)) * i2;
  // error estimates are relative
  rep.first_error *= std::fabs(rep.first_integral);
  rep.second_error *= std::fabs(rep.second_integral);
  if (rep.first_error > 1e-10 || rep.second_error > 1e-10) fail(ErrorCode::Quadrature, "c0 quadrature did not converge");
  rep.c0 = 4.0 * std::min(rep.first_integral, rep.second_integral);
  return rep;
}

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::ConstantInfeasible, what);
}

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

const C0Report& c0_report() {
  static const C0Report rep = compute_c0_uncached();
  return rep;
}

double compute_c0() { return c0_report().c0; }

InaccurateExtras extras_from(const InaccurateDrift& model) {
  return {model.sigma, model.alpha, model.bar_L, model.bar_K, model.bar_R, model.L_u, model.alpha_c};
}

double ContractionLedger::default_m() const { return std::sqrt(h0) / 2.0; }

ContractionLedger build_ledger(const DriftModel& model, const std::optional<InaccurateExtras>& extras,
                               const MomentInputs& mom) {
  ContractionLedger g;
  g.L = model.lipschitz_L;
  g.K = model.contraction_K;
  g.R = model.radius_R;
  g.b0 = model.b_at_zero_norm;
  g.d = mom.d;
  g.EX0_sq = mom.EX0_sq;
  g.EY0_sq = mom.EY0_sq;
  require(positive_finite(g.L) && positive_finite(g.K), "L and K must be positive");
  require(g.K <= g.L, "contractivity constant K exceeds L");
  require(g.R > 0.0, "R = 0: a = 6 L r1 / c0 vanishes (globally contractive model)");
  const C0Report& c0r = c0_report();
  g.c0 = c0r.c0;
  g.c0_first = c0r.first_integral;
  g.c0_second = c0r.second_integral;

  const double L = g.L, K = g.K, R = g.R, c0 = g.c0, b0 = g.b0, d = static_cast<double>(g.d);
  const double ln15 = std::log(1.5), ln2 = std::numbers::ln2;
  g.h0_terms = {K / (L * L),
                4.0 / K,
                1.0 / (2.0 * L),
                2.0 * c0 * ln15 / (27.0 * L * L * R * R),
                R * R / 4.0,
                c0 * c0 * ln2 * ln2 / (144.0 * L * L * R * R)};
  g.h0 = *std::min_element(g.h0_terms.begin(), g.h0_terms.end());
  g.r1 = (1.0 + g.h0 * L) * R;
  g.r2 = g.r1 + std::sqrt(g.h0);
  g.a = 6.0 * L * g.r1 / c0;
  require(positive_finite(g.a), "a = 6 L r1 / c0 must be positive");

  const double ear2 = std::exp(-g.a * g.r2);
  const double fr2 = -std::expm1(-g.a * g.r2) / g.a;
  g.c_terms = {ear2 * K / 4.0,
               (0.5 * ear2 * g.r2 / fr2) * K / 4.0,
               9.0 * L * L * g.r1 * g.r1 / (2.0 * c0) * std::exp(-6.0 * L * g.r1 * g.r1 / c0),
               3.0 * L * g.r1 / (16.0 * std::sqrt(g.h0))};
  g.c = *std::min_element(g.c_terms.begin(), g.c_terms.end());
  require(positive_finite(g.c), "contraction rate c underflows to zero");
  g.A = std::max(g.a * g.r2 * g.r2 / -std::expm1(-g.a * g.r2), 2.0 * g.r2 / ear2);
  require(positive_finite(g.A), "A overflows (e^{a r2} too large)");

  g.q = 7.0 * L * R / c0;
  g.h0_1 = (1.0 / L) * std::min({1.0 / 6.0, K / L, L * R * R / 3.0, c0 * c0 / (970.0 * L * R * R)});
  g.r1_1 = (1.0 + g.h0_1 * L) * R;
  g.c1 = std::min(K / 2.0, 245.0 * L * L * R * R / (24.0 * c0)) * std::exp(-49.0 * L * R * R / (6.0 * c0));
  require(positive_finite(g.c1), "concave contraction rate c1 underflows to zero");

  const Lyapunov lyap = lyapunov_constants(model);
  g.M1 = lyap.M1;
  g.M2 = lyap.M2;
  g.C_SDE = mom.EY0_sq + (2.0 * g.M2 + d) / (2.0 * g.M1);
  const double den_eul = g.M1 - 2.0 * g.h0 * L * L;
  require(den_eul > 0.0, "C_Eul denominator M1 - 2 h0 L^2 is not positive");
  g.C_Eul = mom.EX0_sq + (2.0 * g.h0 * b0 * b0 + d + g.M2) / den_eul;
  g.C_dif = L * L * ((4.0 * g.h0 / 3.0) * ((mom.EY0_sq + (2.0 * g.M2 + 1.0) / g.M1) * L * L + b0 * b0) + d);
  const double k2 = ear2 / g.r2;
  const double sdif = std::sqrt(g.C_dif);
  g.C_ult = k2 * g.C_dif * std::pow(g.h0, 1.5) + sdif +
            k2 * (std::sqrt(g.C_Eul) + std::sqrt(g.C_SDE)) * (1.0 + g.h0 * L) * sdif + k2 * std::sqrt(g.h0) * sdif;

  if (extras) {
    const InaccurateExtras& e = *extras;
    require(e.sigma >= 0.0 && e.alpha >= 0.0 && e.L_u >= 0.0 && e.alpha_c > 0.0,
            "inaccurate drift parameters must be nonnegative");
    g.extras = e;
    InaccurateLedger in;
    const double s2 = e.sigma * e.sigma, h0 = g.h0;
    const double den_ieul = g.M1 - 2.0 * h0 * L * L - h0 * s2;
    require(den_ieul > 0.0, "C_IEul denominator M1 - 2 h0 L^2 - h0 sigma^2 is not positive");
    in.C_IEul = mom.EX0_sq + (2.0 * h0 * b0 * b0 + d + g.M2 + h0 * s2) / den_ieul;
    // sigma^2 h0^{alpha/2} with the sigma = 0 case kept at zero even for alpha = inf
    const double s2pow = s2 == 0.0 ? 0.0 : s2 * std::pow(h0, e.alpha / 2.0);
    in.C_Iult = k2 * s2pow * (1.0 + in.C_IEul) +
                (e.sigma + e.sigma * k2 * (std::sqrt(g.C_Eul) + std::sqrt(in.C_IEul)) * (1.0 + h0 * L) +
                 e.sigma * k2 * std::sqrt(h0)) *
                    std::sqrt(1.0 + in.C_IEul);
    const double EXc0 = mom.EXc0_sq.value_or(mom.EX0_sq);
    const double den_2h = g.M1 - 4.0 * h0 * L * L - 2.0 * h0 * s2;
    require(den_2h > 0.0, "C_IEul^(2h) denominator M1 - 4 h0 L^2 - 2 h0 sigma^2 is not positive");
    in.C_IEul_2h = EXc0 + (4.0 * h0 * b0 * b0 + d + g.M2 + 2.0 * h0 * s2) / den_2h;
    in.C_ISM = in.C_IEul_2h * (s2 + 2.0 * L * L) + s2 + 2.0 * b0 * b0;
    const double asp = std::sqrt(in.C_IEul_2h) + h0 * std::sqrt(in.C_ISM) + std::sqrt(h0 * d);
    in.C_IASP = asp * asp;
    const double ac = std::min(e.alpha_c, 1.0);
    const double pos = std::max(1.0 - e.alpha_c, 0.0);
    in.C_IMLdif = (4.0 * h0 * e.bar_L * e.bar_L * in.C_ISM + 4.0 * e.bar_L * d) * std::pow(h0, pos) +
                  2.0 * e.L_u * (1.0 + in.C_IEul_2h);
    const double smld = std::sqrt(in.C_IMLdif);
    in.C_IMLult = k2 * in.C_IMLdif * std::pow(h0, 1.0 + ac / 2.0) + (1.0 + k2 * std::sqrt(h0)) * smld +
                  k2 * (1.0 + h0 * L) * (std::sqrt(in.C_IEul) + std::sqrt(in.C_IASP)) * smld;
    for (double v : {in.C_IEul, in.C_Iult, in.C_IEul_2h, in.C_ISM, in.C_IASP, in.C_IMLdif, in.C_IMLult})
      require(std::isfinite(v) && v >= 0.0, "inaccurate ledger entry is not finite");
    g.inaccurate = in;
  }

  for (double v : {g.h0, g.r1, g.r2, g.a, g.c, g.A, g.q, g.r1_1, g.h0_1, g.c1, g.M1, g.C_SDE, g.C_Eul, g.C_dif,
                   g.C_ult})
    require(positive_finite(v), "ledger entry is not finite and positive");
  return g;
}

std::vector<std::pair<std::string, double>> ledger_entries(const ContractionLedger& g) {
  std::vector<std::pair<std::string, double>> out = {
      {"L", g.L}, {"K", g.K}, {"R", g.R}, {"b0_norm", g.b0}, {"d", static_cast<double>(g.d)},
      {"c0_integral_1", g.c0_first}, {"c0_integral_2", g.c0_second}, {"c0", g.c0},
  };
  for (std::size_t i = 0; i < g.h0_terms.size(); ++i) out.emplace_back("h0_term_" + std::to_string(i + 1), g.h0_terms[i]);
  out.insert(out.end(), {{"h0", g.h0}, {"r1", g.r1}, {"r2", g.r2}, {"a", g.a}});
  for (std::size_t i = 0; i < g.c_terms.size(); ++i) out.emplace_back("c_term_" + std::to_string(i + 1), g.c_terms[i]);
  out.insert(out.end(), {{"c", g.c}, {"A", g.A}, {"q", g.q}, {"r1_1", g.r1_1}, {"h0_1", g.h0_1}, {"c1", g.c1},
                         {"M1", g.M1}, {"M2", g.M2}, {"C_SDE", g.C_SDE}, {"C_Eul", g.C_Eul}, {"C_dif", g.C_dif},
                         {"C_ult", g.C_ult}, {"m_default", g.default_m()}, {"H_default", g.default_H()}});
  if (g.extras) {
    const auto& e = *g.extras;
    out.insert(out.end(), {{"sigma", e.sigma}, {"alpha", e.alpha}, {"bar_L", e.bar_L}, {"L_u", e.L_u},
                           {"alpha_c", e.alpha_c}});
  }
  if (g.inaccurate) {
    const auto& in = *g.inaccurate;
    out.insert(out.end(), {{"C_IEul", in.C_IEul}, {"C_Iult", in.C_Iult}, {"C_IEul_2h", in.C_IEul_2h},
                           {"C_ISM", in.C_ISM}, {"C_IASP", in.C_IASP}, {"C_IMLdif", in.C_IMLdif},
                           {"C_IMLult", in.C_IMLult}});
  }
  return out;
}

// ---- distance functions -----------------------------------------------------

DistanceFn::DistanceFn(Shape s, double rate, double knot) : shape_(s), rate_(rate), knot_(knot) {
  if (!(rate > 0.0) || !(knot > 0.0)) fail(ErrorCode::Domain, "distance function needs positive rate and knot");
  knot_value_ = -std::expm1(-rate * knot) / rate;
  knot_slope_ = std::exp(-rate * knot);
}

DistanceFn DistanceFn::convex_at_infinity(double a, double r2) { return DistanceFn(Shape::ConvexAtInfinity, a, r2); }
DistanceFn DistanceFn::concave_affine(double q, double r1_1) { return DistanceFn(Shape::ConcaveAffine, q, r1_1); }

DistanceValue DistanceFn::eval(double r) const {
  if (!(r >= 0.0)) fail(ErrorCode::Domain, "distance function evaluated at negative r");
  if (r <= knot_) {
    const double e = std::exp(-rate_ * r);
    return {-std::expm1(-rate_ * r) / rate_, e, -rate_ * e};
  }
  if (shape_ == Shape::ConvexAtInfinity) {
    const double v = knot_value_ + knot_slope_ * (r * r - knot_ * knot_) / (2.0 * knot_);
    return {v, knot_slope_ * r / knot_, knot_slope_ / knot_};
  }
  return {knot_value_ + knot_slope_ * (r - knot_), knot_slope_, 0.0};
}

DistanceValue eval_distance(const DistanceFn& fn, double r) { return fn.eval(r); }
DistanceFn distance_f(const ContractionLedger& g) { return DistanceFn::convex_at_infinity(g.a, g.r2); }
DistanceFn distance_f1(const ContractionLedger& g) { return DistanceFn::concave_affine(g.q, g.r1_1); }

// ---- theorem bounds ---------------------------------------------------------

std::string bound_kind_name(BoundKind k) {
  switch (k) {
    case BoundKind::ULA_W2: return "ULA_W2";
    case BoundKind::ULA_W1: return "ULA_W1";
    case BoundKind::SG_W2: return "SG_W2";
    case BoundKind::SG_W1: return "SG_W1";
    case BoundKind::MLMC_VAR: return "MLMC_VAR";
  }
  return "unknown";
}

double admissible_ceiling(BoundKind kind, const ContractionLedger& g) {
  switch (kind) {
    case BoundKind::ULA_W2: return std::min(g.h0, g.K / (4.0 * g.L * g.L));
    case BoundKind::ULA_W1: return g.h0_1;
    case BoundKind::SG_W2:
    case BoundKind::SG_W1:
    case BoundKind::MLMC_VAR: {
      if (!g.extras || !g.inaccurate) fail(ErrorCode::ConstantInfeasible, "ledger has no inaccurate-drift entries");
      const double s2 = g.extras->sigma * g.extras->sigma;
      return std::min({g.h0, g.K / (4.0 * g.L * g.L + 2.0 * s2), 1.0});
    }
  }
  return 0.0;
}

namespace {

std::string ceiling_name(BoundKind kind, const ContractionLedger& g) {
  switch (kind) {
    case BoundKind::ULA_W2: return g.h0 <= g.K / (4.0 * g.L * g.L) ? "h0" : "K/(4L^2)";
    case BoundKind::ULA_W1: return "h0_1";
    default: {
      const double s2 = g.extras ? g.extras->sigma * g.extras->sigma : 0.0;
      const double t = g.K / (4.0 * g.L * g.L + 2.0 * s2);
      if (g.h0 <= t && g.h0 <= 1.0) return "h0";
      if (t <= 1.0) return "K/(4L^2+2sigma^2)";
      return "1";
    }
  }
}

}  // namespace

double theorem_bound(BoundKind kind, const ContractionLedger& g, double h, std::uint64_t k, double initial) {
  if (initial < 0.0) fail(ErrorCode::Domain, "initial distance must be nonnegative");
  const double ceil = admissible_ceiling(kind, g);
  if (!(h > 0.0) || !(h < ceil))
    fail(ErrorCode::Admissibility, "step size h=" + std::to_string(h) + " violates h < " + ceiling_name(kind, g) +
                                       " = " + std::to_string(ceil) + " for " + bound_kind_name(kind));
  const double kd = static_cast<double>(k);
  const double geo = std::pow(1.0 - g.c * h, kd);
  switch (kind) {
    case BoundKind::ULA_W2:
      return std::sqrt(g.A * geo * initial) + std::sqrt(g.A * g.C_ult / g.c) * std::pow(h, 0.25);
    case BoundKind::ULA_W1: {
      const double e = std::exp(g.q * g.r1_1);
      return e * std::pow(1.0 - g.c1 * h, kd) * initial + e * std::sqrt(g.C_dif) * std::sqrt(h) / g.c1;
    }
    case BoundKind::SG_W2: {
      const double al = g.extras->alpha;
      return std::sqrt(g.A * geo * initial) + std::sqrt(g.A * g.inaccurate->C_Iult / g.c) * std::pow(h, al / 4.0);
    }
    case BoundKind::SG_W1: {
      const double e = std::exp(g.a * g.r2);
      return e * geo * initial + e * g.inaccurate->C_Iult / g.c * std::pow(h, g.extras->alpha / 2.0);
    }
    case BoundKind::MLMC_VAR: {
      const double ac = std::min(g.extras->alpha_c, 1.0);
      return g.A * geo * initial + g.A * g.inaccurate->C_IMLult * std::pow(h, ac / 2.0) / g.c;
    }
  }
  return 0.0;
}

std::vector<VaryingStepRecord> varying_step_bound(const ContractionLedger& g, std::span<const double> schedule,
                                                  double initial) {
  const double ceil = admissible_ceiling(BoundKind::ULA_W2, g);
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] > 0.0) || !(schedule[i] < ceil))
      fail(ErrorCode::Admissibility, "schedule entry outside (0, min(h0, K/(4L^2)))");
    if (i > 0 && schedule[i] > schedule[i - 1]) fail(ErrorCode::Config, "step schedule must be non-increasing");
  }
  std::vector<VaryingStepRecord> out;
  out.reserve(schedule.size() + 1);
  VaryingStepRecord rec;
  rec.ef_bound = initial;
  rec.w2_bound = std::sqrt(g.A * initial);
  out.push_back(rec);
  for (double h : schedule) {
    const double f = 1.0 - g.c * h;
    rec.contraction_product *= f;
    rec.accumulated = f * rec.accumulated + std::pow(h, 1.5);
    rec.ef_bound = rec.contraction_product * initial + g.C_ult * rec.accumulated;
    rec.w2_bound = std::sqrt(g.A * rec.contraction_product * initial) + std::sqrt(g.A * g.C_ult * rec.accumulated);
    out.push_back(rec);
  }
  return out;
}

}  // namespace eb
