// SPDX-License-Identifier: Apache-2.0
#include "eulerbound/chains.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eulerbound/error.hpp"
#include "eulerbound/kernels.hpp"
#include "eulerbound/metrics.hpp"
#include "eulerbound/rng.hpp"

namespace eb {

double InitialSpec::second_moment(std::size_t d) const {
  double m2 = mean.empty() ? 0.0 : norm_sq(mean);
  if (kind == Kind::Gaussian) m2 += static_cast<double>(d) * stddev * stddev;
  return m2;
}

namespace {

std::vector<Stream> make_streams(std::uint64_t seed, std::uint64_t experiment, std::uint64_t level, std::size_t n) {
  std::vector<Stream> s;
  s.reserve(n);
  for (std::size_t r = 0; r < n; ++r) s.emplace_back(StreamId{seed, experiment, r, level});
  return s;
}

void draw_initial(const InitialSpec& init, const std::vector<Stream>& st, std::size_t d, Vec& x) {
  if (!init.mean.empty() && init.mean.size() != d) fail(ErrorCode::Config, "initial mean has the wrong dimension");
  if (init.kind == InitialSpec::Kind::Gaussian && !(init.stddev >= 0.0))
    fail(ErrorCode::Config, "initial stddev must be nonnegative");
  x.assign(st.size() * d, 0.0);
  Vec buf(d);
  for (std::size_t r = 0; r < st.size(); ++r) {
    if (init.kind == InitialSpec::Kind::Gaussian) st[r].normals(0, tag::init, buf.data(), d);
    for (std::size_t j = 0; j < d; ++j) {
      double v = init.mean.empty() ? 0.0 : init.mean[j];
      if (init.kind == InitialSpec::Kind::Gaussian) v += init.stddev * buf[j];
      x[r * d + j] = v;
    }
  }
}

void check_finite(const Vec& x, std::uint64_t k, const char* what) {
  for (double v : x)
    if (!std::isfinite(v)) fail(ErrorCode::NumericalBlowup, std::string("non-finite state in ") + what + " at step " + std::to_string(k));
}

void validate_chain(double h, std::size_t replicas) {
  if (!(h > 0.0) || !std::isfinite(h)) fail(ErrorCode::Config, "step size must be positive");
  if (replicas == 0) fail(ErrorCode::Config, "need at least one replica");
}

bool should_record(std::uint64_t k, std::uint64_t steps, std::uint64_t every) {
  if (k == 0 || k == steps) return true;
  return every != 0 && k % every == 0;
}

// ensemble drift evaluation through the active kernel backend
class EnsembleDrift {
 public:
  EnsembleDrift(const DriftModel& model, std::size_t n)
      : model_(model), nd_(n * model.dim), ops_(kernels::active()), base_(nd_) {
    if (model.kind == DriftKind::FiniteSum) {
      double w = 0.0, lam = 0.0;
      Vec th(model.dim, 0.0);
      for (const auto& c : model.components) {
        w += c.weight;
        lam += c.slope;
        for (std::size_t j = 0; j < model.dim; ++j) th[j] += c.offset[j];
      }
      w_.assign(nd_, w);
      lam_.assign(nd_, lam);
      th_.resize(nd_);
      for (std::size_t i = 0; i < nd_; ++i) th_[i] = th[i % model.dim];
    }
  }

  std::size_t size() const { return nd_; }
  const Vec& exact_w() const { return w_; }
  const Vec& exact_lam() const { return lam_; }
  const Vec& exact_th() const { return th_; }

  void exact(const double* x, double* out) {
    switch (model_.kind) {
      case DriftKind::OrnsteinUhlenbeck:
        ops_.drift_ou(x, out, nd_);
        return;
      case DriftKind::TruncatedDoubleWell:
        ops_.drift_double_well(x, out, nd_, model_.a_dw, model_.n_dw);
        return;
      case DriftKind::FiniteSum:
        affine(x, w_, lam_, th_, out);
        return;
    }
  }

  void affine(const double* x, const Vec& w, const Vec& lam, const Vec& th, double* out) {
    switch (model_.base) {
      case BaseDrift::Zero:
        std::fill(base_.begin(), base_.end(), 0.0);
        break;
      case BaseDrift::OrnsteinUhlenbeck:
        ops_.drift_ou(x, base_.data(), nd_);
        break;
      case BaseDrift::TruncatedDoubleWell:
        ops_.drift_double_well(x, base_.data(), nd_, model_.a_dw, model_.n_dw);
        break;
    }
    ops_.affine_drift(base_.data(), x, w.data(), lam.data(), th.data(), out, nd_);
  }

 private:
  const DriftModel& model_;
  std::size_t nd_;
  const kernels::Ops& ops_;
  Vec base_, w_, lam_, th_;
};

// per-replica subsample coefficients, expanded to one entry per coordinate
class SubsampleField {
 public:
  SubsampleField(const InaccurateDrift& model, std::size_t n)
      : model_(model), n_(n), d_(model.base.dim), w(n * d_), lam(n * d_), th(n * d_), u_(model.s),
        pool_(model.base.m()) {
    if (model.base.kind != DriftKind::FiniteSum) fail(ErrorCode::Config, "randomised chains need a finite-sum drift");
    if (model.s == 0 || model.s > model.base.m()) fail(ErrorCode::Config, "subsample size must satisfy 1 <= s <= m");
  }

  // full samples use the exact aggregate so that s = m reproduces the exact chain
  void draw(const std::vector<Stream>& st, std::uint64_t step, std::uint32_t tg, const EnsembleDrift& exact) {
    if (is_full_sample(model_)) {
      if (!full_set_) {
        w = exact.exact_w();
        lam = exact.exact_lam();
        th = exact.exact_th();
        full_set_ = true;
      }
      return;
    }
    for (std::size_t r = 0; r < n_; ++r) {
      draw_subsample_into(model_, st[r], step, tg, u_, pool_);
      aggregate_draw_into(model_, u_, c_);
      for (std::size_t j = 0; j < d_; ++j) {
        w[r * d_ + j] = c_.weight;
        lam[r * d_ + j] = c_.slope;
        th[r * d_ + j] = c_.offset[j];
      }
    }
  }

 private:
  const InaccurateDrift& model_;
  std::size_t n_, d_;

 public:
  Vec w, lam, th;

 private:
  std::vector<std::size_t> u_, pool_;
  AffineCoeffs c_;
  bool full_set_ = false;
};

void fill_noise(const std::vector<Stream>& st, std::uint64_t step, std::uint32_t tg, std::size_t d, Vec& z) {
  for (std::size_t r = 0; r < st.size(); ++r) st[r].normals(step, tg, &z[r * d], d);
}

void fill_zeta(const std::vector<Stream>& st, std::uint64_t step, Vec& zeta) {
  for (std::size_t r = 0; r < st.size(); ++r) zeta[r] = st[r].uniform(step, 0, tag::zeta);
}

// couples every replica; returns the number of merged pairs
std::size_t couple_all(const Vec& xhat, const Vec& yhat, const CouplingParams& p, const Vec& z, const Vec& zeta,
                       std::size_t d, Vec& xn, Vec& yn) {
  const std::size_t n = zeta.size();
  std::size_t merged = 0;
  if (d == 1) {
    for (std::size_t r = 0; r < n; ++r)
      merged += couple_from_hat_1d(xhat[r], yhat[r], p, z[r], zeta[r], xn[r], yn[r]) == Branch::Merged;
    return merged;
  }
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t o = r * d;
    merged += couple_from_hat(std::span<const double>(&xhat[o], d), std::span<const double>(&yhat[o], d), p,
                              std::span<const double>(&z[o], d), zeta[r], std::span<double>(&xn[o], d),
                              std::span<double>(&yn[o], d)) == Branch::Merged;
  }
  return merged;
}

Summary norm_sq_summary(const Vec& x, std::size_t d) {
  const std::size_t n = x.size() / d;
  Vec v(n);
  for (std::size_t r = 0; r < n; ++r) v[r] = norm_sq(std::span<const double>(&x[r * d], d));
  return summarize(v);
}

double first_coordinate_mean(const Vec& x, std::size_t d) {
  const std::size_t n = x.size() / d;
  double s = 0.0;
  for (std::size_t r = 0; r < n; ++r) s += x[r * d];
  return s / static_cast<double>(n);
}

void fill_state_moments(StepRecord& rec, const Vec& x, std::size_t d) {
  rec.mean = first_coordinate_mean(x, d);
  const Summary s = norm_sq_summary(x, d);
  rec.second_moment = s.mean;
  rec.second_moment_se = s.se;
}

// distance statistics between two coupled ensembles
void fill_pair_stats(StepRecord& rec, const Vec& g, const Vec& y, std::size_t d, const std::optional<DistanceFn>& f,
                     std::uint64_t seed) {
  const std::size_t n = g.size() / d;
  Vec r(n), fr(n);
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = dist(std::span<const double>(&g[i * d], d), std::span<const double>(&y[i * d], d));
    s1 += r[i];
    s2 += r[i] * r[i];
    fr[i] = f ? (*f)(r[i]) : 0.0;
  }
  rec.coupled_W1 = s1 / static_cast<double>(n);
  rec.coupled_W2 = std::sqrt(s2 / static_cast<double>(n));
  if (f) {
    const Summary sf = summarize(fr);
    rec.Ef_distance = sf.mean;
    rec.Ef_se = sf.se;
  }
  if (d == 1) {
    rec.W1_hat = w_p_1d(g, y, 1);
    rec.W2_hat = w_p_1d(g, y, 2);
  } else {
    rec.W1_hat = w_p_projected(g, y, d, 1, 16, seed);
    rec.W2_hat = w_p_projected(g, y, d, 2, 16, seed);
  }
  const Summary sy = norm_sq_summary(y, d);
  rec.ref_second_moment = sy.mean;
  rec.ref_second_moment_se = sy.se;
}

CouplingParams resolve_coupling(const CoupledOptions& opt, double h) {
  CouplingParams p;
  if (opt.coupling) {
    p = *opt.coupling;
  } else if (opt.ledger) {
    p.m = opt.ledger->default_m();
    p.H = opt.ledger->default_H();
  }
  p.h = h;
  validate_params(p);
  return p;
}

std::optional<DistanceFn> resolve_f(const CoupledOptions& opt) {
  if (opt.f) return opt.f;
  if (opt.ledger) return distance_f(*opt.ledger);
  return std::nullopt;
}

}  // namespace

Vec euler_step(const DriftModel& model, std::span<const double> x, double h, std::span<const double> xi) {
  Vec b = eval_drift(model, x);
  const double sh = std::sqrt(h);
  for (std::size_t j = 0; j < b.size(); ++j) b[j] = (x[j] + h * b[j]) + sh * xi[j];
  return b;
}

Vec randomised_euler_step(const InaccurateDrift& model, std::span<const double> x, const SubsampleDraw& u, double h,
                          std::span<const double> xi) {
  Vec b = eval_inaccurate_drift(model, x, u);
  const double sh = std::sqrt(h);
  for (std::size_t j = 0; j < b.size(); ++j) b[j] = (x[j] + h * b[j]) + sh * xi[j];
  return b;
}

namespace {

template <class DriftStep>
EnsembleRun run_plain(const DriftModel& model, const ChainConfig& cfg, DriftStep&& step_drift) {
  validate_chain(cfg.h, cfg.replicas);
  const std::size_t d = model.dim, n = cfg.replicas;
  const auto st = make_streams(cfg.seed, cfg.experiment, cfg.level, n);
  EnsembleRun run;
  run.dim = d;
  run.replicas = n;
  Vec x, b(n * d), z(n * d);
  draw_initial(cfg.init, st, d, x);
  const auto& ops = kernels::active();
  const double sh = std::sqrt(cfg.h);
  StepRecord rec0;
  fill_state_moments(rec0, x, d);
  run.records.push_back(rec0);
  for (std::uint64_t k = 0; k < cfg.steps; ++k) {
    step_drift(st, k, x, b);
    fill_noise(st, k, tag::noise, d, z);
    ops.euler_update(x.data(), b.data(), z.data(), cfg.h, sh, n * d);
    check_finite(x, k + 1, "Euler chain");
    if (should_record(k + 1, cfg.steps, cfg.record_every)) {
      StepRecord rec;
      rec.k = k + 1;
      rec.t = static_cast<double>(k + 1) * cfg.h;
      fill_state_moments(rec, x, d);
      run.records.push_back(rec);
    }
  }
  run.terminal = std::move(x);
  return run;
}

}  // namespace

EnsembleRun run_euler(const DriftModel& model, const ChainConfig& cfg) {
  EnsembleDrift drift(model, cfg.replicas);
  return run_plain(model, cfg, [&](const std::vector<Stream>&, std::uint64_t, const Vec& x, Vec& b) {
    drift.exact(x.data(), b.data());
  });
}

EnsembleRun run_randomised_euler(const InaccurateDrift& model, const ChainConfig& cfg) {
  EnsembleDrift drift(model.base, cfg.replicas);
  SubsampleField field(model, cfg.replicas);
  return run_plain(model.base, cfg, [&](const std::vector<Stream>& st, std::uint64_t k, const Vec& x, Vec& b) {
    field.draw(st, k, tag::subsample, drift);
    drift.affine(x.data(), field.w, field.lam, field.th, b.data());
  });
}

namespace {

// shared body of the ULA-vs-reference runs; step_of(k) gives h_k
template <class StepOf>
EnsembleRun run_reference_coupled(const DriftModel& model, const ChainConfig& cfg, std::uint64_t steps,
                                  StepOf&& step_of, const CoupledOptions& opt) {
  validate_chain(step_of(0), cfg.replicas);
  if (opt.refinement > 20) fail(ErrorCode::Config, "refinement level too large");
  const std::size_t d = model.dim, n = cfg.replicas, nd = n * d;
  const std::size_t F = std::size_t{1} << opt.refinement;
  const double inv_sqrt_F = 1.0 / std::sqrt(static_cast<double>(F));
  const auto st = make_streams(cfg.seed, cfg.experiment, cfg.level, n);
  const auto f = resolve_f(opt);
  EnsembleRun run;
  run.dim = d;
  run.replicas = n;
  run.w_estimator = d == 1 ? "sorted" : "projected-lower-bound";
  Vec y, g, by(nd), bg(nd), yhat(nd), ghat(nd), xn(nd), s(nd), z(nd), zi(nd), zeta(n), fine(nd * F), zero(nd, 0.0);
  draw_initial(cfg.init, st, d, y);
  g = y;
  const auto& ops = kernels::active();
  EnsembleDrift drift(model, n);
  StepRecord rec0;
  fill_state_moments(rec0, g, d);
  fill_pair_stats(rec0, g, y, d, f, cfg.seed);
  run.records.push_back(rec0);
  double t = 0.0;
  for (std::uint64_t k = 0; k < steps; ++k) {
    const double h = step_of(k), sh = std::sqrt(h);
    const double hf = h / static_cast<double>(F), shf = std::sqrt(hf);
    const CouplingParams p = resolve_coupling(opt, h);
    for (std::size_t r = 0; r < n; ++r) st[r].normals(k, tag::fine_noise, &fine[r * d * F], d * F);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < d; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < F; ++i) acc += fine[r * d * F + i * d + j];
        z[r * d + j] = acc * inv_sqrt_F;
      }
    fill_zeta(st, k, zeta);
    drift.exact(y.data(), by.data());
    drift.exact(g.data(), bg.data());
    yhat = y;
    ghat = g;
    ops.euler_update(yhat.data(), by.data(), zero.data(), h, 0.0, nd);
    ops.euler_update(ghat.data(), bg.data(), zero.data(), h, 0.0, nd);
    s = y;
    ops.euler_update(s.data(), by.data(), z.data(), h, sh, nd);
    const std::size_t merged = couple_all(yhat, ghat, p, z, zeta, d, xn, g);
    // reference chain on the refined clock
    for (std::size_t i = 0; i < F; ++i) {
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < d; ++j) zi[r * d + j] = fine[r * d * F + i * d + j];
      drift.exact(y.data(), by.data());
      ops.euler_update(y.data(), by.data(), zi.data(), hf, shf, nd);
    }
    check_finite(y, k + 1, "reference chain");
    check_finite(g, k + 1, "coupled chain");
    t += h;
    if (should_record(k + 1, steps, cfg.record_every)) {
      StepRecord rec;
      rec.k = k + 1;
      rec.t = t;
      fill_state_moments(rec, g, d);
      fill_pair_stats(rec, g, y, d, f, cfg.seed);
      Vec se(n);
      for (std::size_t r = 0; r < n; ++r)
        se[r] = dist_sq(std::span<const double>(&s[r * d], d), std::span<const double>(&y[r * d], d));
      const Summary ss = summarize(se);
      rec.strong_error = ss.mean;
      rec.strong_error_se = ss.se;
      rec.merge_fraction = static_cast<double>(merged) / static_cast<double>(n);
      run.records.push_back(rec);
    }
  }
  run.terminal = std::move(g);
  run.reference_terminal = std::move(y);
  return run;
}

}  // namespace

EnsembleRun run_coupled_ula_vs_sde(const DriftModel& model, const ChainConfig& cfg, const CoupledOptions& opt) {
  if (opt.ledger) {
    const double ceil = admissible_ceiling(BoundKind::ULA_W2, *opt.ledger);
    if (!(cfg.h < ceil))
      fail(ErrorCode::Admissibility, "h must be below h0 ^ K/(4L^2) = " + std::to_string(ceil));
  }
  auto run = run_reference_coupled(model, cfg, cfg.steps, [&](std::uint64_t) { return cfg.h; }, opt);
  if (opt.ledger) {
    const auto& L = *opt.ledger;
    for (auto& rec : run.records)
      rec.bound_value = std::pow(1.0 - L.c * cfg.h, static_cast<double>(rec.k)) * run.records.front().Ef_distance +
                        L.C_ult / L.c * std::sqrt(cfg.h);
  }
  return run;
}

EnsembleRun run_varying_step(const DriftModel& model, const ChainConfig& cfg, std::span<const double> schedule,
                             const CoupledOptions& opt) {
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] > 0.0)) fail(ErrorCode::Config, "step sizes must be positive");
    if (i > 0 && schedule[i] > schedule[i - 1]) fail(ErrorCode::Config, "step schedule must be non-increasing");
  }
  std::vector<VaryingStepRecord> bounds;
  if (opt.ledger) bounds = varying_step_bound(*opt.ledger, schedule, 0.0);
  const double h_first = schedule.empty() ? 1.0 : schedule[0];
  auto run = run_reference_coupled(
      model, cfg, schedule.size(), [&](std::uint64_t k) { return schedule.empty() ? h_first : schedule[k]; }, opt);
  if (opt.ledger) {
    const double ef0 = run.records.front().Ef_distance;
    bounds = varying_step_bound(*opt.ledger, schedule, ef0);
    for (auto& rec : run.records) rec.bound_value = bounds[rec.k].ef_bound;
  }
  return run;
}

EnsembleRun run_coupled_sg_pair(const InaccurateDrift& model, const ChainConfig& cfg, const CoupledOptions& opt) {
  validate_chain(cfg.h, cfg.replicas);
  if (opt.ledger) {
    const double ceil = admissible_ceiling(BoundKind::SG_W1, *opt.ledger);
    if (!(cfg.h < ceil))
      fail(ErrorCode::Admissibility, "h must be below h0 ^ K/(4L^2+2 sigma^2) ^ 1 = " + std::to_string(ceil));
  }
  const DriftModel& base = model.base;
  const std::size_t d = base.dim, n = cfg.replicas, nd = n * d;
  const auto st = make_streams(cfg.seed, cfg.experiment, cfg.level, n);
  const auto f = resolve_f(opt);
  const CouplingParams p = resolve_coupling(opt, cfg.h);
  const double sh = std::sqrt(cfg.h);
  EnsembleRun run;
  run.dim = d;
  run.replicas = n;
  run.w_estimator = d == 1 ? "sorted" : "projected-lower-bound";
  Vec xbar, g, bx(nd), bbar(nd), bg(nd), xhat(nd), ghat(nd), xn(nd), z(nd), zeta(n), zero(nd, 0.0);
  draw_initial(cfg.init, st, d, xbar);
  g = xbar;
  const auto& ops = kernels::active();
  EnsembleDrift drift(base, n);
  SubsampleField field(model, n);
  StepRecord rec0;
  fill_state_moments(rec0, xbar, d);
  fill_pair_stats(rec0, g, xbar, d, f, cfg.seed);
  run.records.push_back(rec0);
  for (std::uint64_t k = 0; k < cfg.steps; ++k) {
    fill_noise(st, k, tag::noise, d, z);
    fill_zeta(st, k, zeta);
    field.draw(st, k, tag::subsample, drift);
    drift.exact(xbar.data(), bx.data());
    drift.exact(g.data(), bg.data());
    drift.affine(xbar.data(), field.w, field.lam, field.th, bbar.data());
    xhat = xbar;
    ghat = g;
    ops.euler_update(xhat.data(), bx.data(), zero.data(), cfg.h, 0.0, nd);
    ops.euler_update(ghat.data(), bg.data(), zero.data(), cfg.h, 0.0, nd);
    const std::size_t merged = couple_all(xhat, ghat, p, z, zeta, d, xn, g);
    ops.euler_update(xbar.data(), bbar.data(), z.data(), cfg.h, sh, nd);
    check_finite(xbar, k + 1, "randomised chain");
    check_finite(g, k + 1, "coupled chain");
    if (should_record(k + 1, cfg.steps, cfg.record_every)) {
      StepRecord rec;
      rec.k = k + 1;
      rec.t = static_cast<double>(k + 1) * cfg.h;
      fill_state_moments(rec, xbar, d);
      fill_pair_stats(rec, g, xbar, d, f, cfg.seed);
      rec.merge_fraction = static_cast<double>(merged) / static_cast<double>(n);
      run.records.push_back(rec);
    }
  }
  if (opt.ledger && opt.ledger->inaccurate && opt.ledger->extras) {
    const auto& L = *opt.ledger;
    const double ef0 = run.records.front().Ef_distance;
    for (auto& rec : run.records)
      rec.bound_value = std::pow(1.0 - L.c * cfg.h, static_cast<double>(rec.k)) * ef0 +
                        L.inaccurate->C_Iult / L.c * std::pow(cfg.h, L.extras->alpha / 2.0);
  }
  run.terminal = std::move(g);
  run.reference_terminal = std::move(xbar);
  return run;
}

// ---- MLMC level pair ----------------------------------------------------------

double Payoff::operator()(std::span<const double> x) const {
  switch (kind) {
    case PayoffKind::Identity:
      return x[0];
    case PayoffKind::ClampedIdentity:
      return std::clamp(x[0], -clamp, clamp);
    case PayoffKind::SqrtOnePlusSquare:
      return std::sqrt(1.0 + norm_sq(x));
    case PayoffKind::Square:
      return norm_sq(x);
  }
  return 0.0;
}

std::string payoff_name(PayoffKind k) {
  switch (k) {
    case PayoffKind::Identity: return "identity";
    case PayoffKind::ClampedIdentity: return "clamped-identity";
    case PayoffKind::SqrtOnePlusSquare: return "sqrt-one-plus-square";
    case PayoffKind::Square: return "square";
  }
  return "?";
}

const DriftModel& LevelDrift::model() const {
  if (inaccurate) return inaccurate->base;
  if (exact) return *exact;
  fail(ErrorCode::Config, "level drift is empty");
}

double LevelDrift::unit_cost() const {
  if (inaccurate) return is_full_sample(*inaccurate) ? static_cast<double>(inaccurate->base.m())
                                                     : static_cast<double>(inaccurate->s);
  if (exact && exact->kind == DriftKind::FiniteSum) return static_cast<double>(exact->m());
  return 1.0;
}

namespace {

// drift for one ensemble under the level's drift source; tg selects the U stream
class LevelStepper {
 public:
  LevelStepper(const LevelDrift& src, std::size_t n)
      : src_(src), drift_(src.model(), n) {
    if (src.inaccurate) field_.emplace(*src.inaccurate, n);
  }
  // draws U for (step, tg) then evaluates b(x, U) for each array in xs
  void draw(const std::vector<Stream>& st, std::uint64_t step, std::uint32_t tg) {
    if (field_) field_->draw(st, step, tg, drift_);
  }
  void eval(const Vec& x, Vec& out) {
    if (field_)
      drift_.affine(x.data(), field_->w, field_->lam, field_->th, out.data());
    else
      drift_.exact(x.data(), out.data());
  }

 private:
  const LevelDrift& src_;
  EnsembleDrift drift_;
  std::optional<SubsampleField> field_;
};

struct PayoffStats {
  Summary fine, coarse, diff, sync_diff;
  double mean_dist = 0.0, mean_sq_dist = 0.0, ef = 0.0;
};

PayoffStats payoff_stats(const Payoff& g, const Vec& fine, const Vec& coarse, const Vec* sync, std::size_t d,
                         const std::optional<DistanceFn>& f) {
  const std::size_t n = fine.size() / d;
  Vec gf(n), gc(n), df(n), ds(sync ? n : 0);
  double md = 0.0, msd = 0.0, ef = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const std::span<const double> a(&fine[r * d], d), b(&coarse[r * d], d);
    gf[r] = g(a);
    gc[r] = g(b);
    df[r] = gf[r] - gc[r];
    if (sync) ds[r] = g(std::span<const double>(&(*sync)[r * d], d)) - gc[r];
    const double dd = dist_sq(a, b);
    md += std::sqrt(dd);
    msd += dd;
    if (f) ef += (*f)(std::sqrt(dd));
  }
  PayoffStats s;
  s.fine = summarize(gf);
  s.coarse = summarize(gc);
  s.diff = summarize(df);
  if (sync) s.sync_diff = summarize(ds);
  s.mean_dist = md / static_cast<double>(n);
  s.mean_sq_dist = msd / static_cast<double>(n);
  s.ef = ef / static_cast<double>(n);
  return s;
}

}  // namespace

LevelPairResult run_mlmc_level_pair(const LevelDrift& src, const LevelConfig& cfg) {
  validate_chain(cfg.h, cfg.replicas);
  if (cfg.steps == 0 || cfg.steps % 2 != 0) fail(ErrorCode::Config, "level pairs need an even positive step count");
  const DriftModel& model = src.model();
  const std::size_t d = model.dim, n = cfg.replicas, nd = n * d;
  CouplingParams p = cfg.coupling;
  p.h = cfg.h;
  validate_params(p);
  const double h = cfg.h, sh = std::sqrt(h), h2 = 2.0 * h, sh2 = std::sqrt(h2);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const auto st = make_streams(cfg.seed, cfg.experiment, cfg.level, n);
  const auto& ops = kernels::active();
  LevelStepper fine_drift(src, n), coarse_drift(src, n);
  Vec xc, g, xf, s, bs(nd), bg(nd), bxf(nd), bc(nd), shat(nd), ghat(nd), sn(nd), z1(nd), z2(nd), zc(nd), zeta(n),
      zero(nd, 0.0);
  draw_initial(cfg.init, st, d, xc);
  g = xc;
  xf = xc;
  LevelPairResult res;
  res.level = cfg.level;
  res.h = h;
  res.replicas = n;
  auto record = [&](std::uint64_t k) {
    const PayoffStats ps = payoff_stats(cfg.payoff, g, xc, &xf, d, cfg.f);
    LevelRecord rec;
    rec.k = k;
    rec.var_diff = ps.diff.variance;
    rec.var_sync_diff = ps.sync_diff.variance;
    rec.mean_distance = ps.mean_dist;
    rec.mean_sq_distance = ps.mean_sq_dist;
    rec.Ef_distance = ps.ef;
    res.records.push_back(rec);
  };
  record(0);
  for (std::uint64_t k = 0; k < cfg.steps; k += 2) {
    fill_noise(st, k, tag::noise, d, z1);
    fill_noise(st, k + 1, tag::noise, d, z2);
    // first fine step: S restarts from the coarse state
    s = xc;
    fine_drift.draw(st, k, tag::subsample);
    for (std::uint64_t sub = 0; sub < 2; ++sub) {
      const std::uint64_t kk = k + sub;
      const Vec& z = sub == 0 ? z1 : z2;
      if (sub == 1) fine_drift.draw(st, kk, tag::subsample);
      fill_zeta(st, kk, zeta);
      fine_drift.eval(s, bs);
      fine_drift.eval(g, bg);
      fine_drift.eval(xf, bxf);
      shat = s;
      ghat = g;
      ops.euler_update(shat.data(), bs.data(), zero.data(), h, 0.0, nd);
      ops.euler_update(ghat.data(), bg.data(), zero.data(), h, 0.0, nd);
      couple_all(shat, ghat, p, z, zeta, d, sn, g);
      ops.euler_update(s.data(), bs.data(), z.data(), h, sh, nd);
      ops.euler_update(xf.data(), bxf.data(), z.data(), h, sh, nd);
    }
    // coarse step with the normalised sum of the two fine increments
    for (std::size_t i = 0; i < nd; ++i) zc[i] = (z1[i] + z2[i]) * inv_sqrt2;
    coarse_drift.draw(st, k, tag::coarse_subsample);
    coarse_drift.eval(xc, bc);
    ops.euler_update(xc.data(), bc.data(), zc.data(), h2, sh2, nd);
    check_finite(xc, k + 2, "coarse chain");
    check_finite(g, k + 2, "fine chain");
    if (k + 2 == cfg.steps || (cfg.record_every != 0 && (k + 2) % cfg.record_every == 0)) record(k + 2);
  }
  const PayoffStats ps = payoff_stats(cfg.payoff, g, xc, &xf, d, cfg.f);
  res.mean_fine = ps.fine.mean;
  res.mean_coarse = ps.coarse.mean;
  res.mean_diff = ps.diff.mean;
  res.var_diff = ps.diff.variance;
  res.se_diff = ps.diff.se;
  res.var_sync_diff = ps.sync_diff.variance;
  res.var_fine = ps.fine.variance;
  res.mean_sq_distance = ps.mean_sq_dist;
  // S and G take one drift call per fine step each, the coarse chain one per coarse step
  res.cost = static_cast<double>(n) * src.unit_cost() *
             (2.0 * static_cast<double>(cfg.steps) + 0.5 * static_cast<double>(cfg.steps));
  if (cfg.keep_terminal) {
    res.fine_terminal = std::move(g);
    res.coarse_terminal = std::move(xc);
  }
  return res;
}

LevelPairResult run_mlmc_level0(const LevelDrift& src, const LevelConfig& cfg) {
  validate_chain(cfg.h, cfg.replicas);
  if (cfg.steps == 0) fail(ErrorCode::Config, "need at least one step");
  const DriftModel& model = src.model();
  const std::size_t d = model.dim, n = cfg.replicas, nd = n * d;
  const auto st = make_streams(cfg.seed, cfg.experiment, cfg.level, n);
  const auto& ops = kernels::active();
  LevelStepper drift(src, n);
  Vec x, b(nd), z(nd);
  draw_initial(cfg.init, st, d, x);
  const double sh = std::sqrt(cfg.h);
  for (std::uint64_t k = 0; k < cfg.steps; ++k) {
    drift.draw(st, k, tag::subsample);
    drift.eval(x, b);
    fill_noise(st, k, tag::noise, d, z);
    ops.euler_update(x.data(), b.data(), z.data(), cfg.h, sh, nd);
    check_finite(x, k + 1, "level-0 chain");
  }
  Vec gv(n);
  for (std::size_t r = 0; r < n; ++r) gv[r] = cfg.payoff(std::span<const double>(&x[r * d], d));
  const Summary s = summarize(gv);
  LevelPairResult res;
  res.level = cfg.level;
  res.h = cfg.h;
  res.replicas = n;
  res.mean_fine = s.mean;
  res.mean_diff = s.mean;
  res.var_diff = s.variance;
  res.se_diff = s.se;
  res.var_fine = s.variance;
  res.cost = static_cast<double>(n) * src.unit_cost() * static_cast<double>(cfg.steps);
  if (cfg.keep_terminal) res.fine_terminal = std::move(x);
  return res;
}

}  // namespace eb
