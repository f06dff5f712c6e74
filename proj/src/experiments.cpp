// SPDX-License-Identifier: Apache-2.0
#include "eulerbound/experiments.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "eulerbound/coupling.hpp"
#include "eulerbound/error.hpp"
#include "eulerbound/kernels.hpp"
#include "eulerbound/metrics.hpp"
#include "eulerbound/mlmc.hpp"
#include "eulerbound/oracles.hpp"
#include "eulerbound/rng.hpp"

#ifndef EULERBOUND_VERSION
#define EULERBOUND_VERSION "0.0.0"
#endif

namespace eb {

// ---- tables -----------------------------------------------------------------

std::string Table::num(double v) {
  if (!std::isfinite(v)) fail(ErrorCode::Verification, "non-finite value in output table");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string Table::num(std::uint64_t v) { return std::to_string(v); }

void Table::add(std::vector<std::string> row) {
  if (row.size() != columns.size()) fail(ErrorCode::Verification, "row width does not match the header of " + name);
  rows.push_back(std::move(row));
}

std::string to_csv(const Table& t) {
  std::ostringstream os;
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  }
  return os.str();
}

bool ExperimentOutput::verified() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const Check* ExperimentOutput::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

using N = Table;

std::string yes(bool b) { return b ? "1" : "0"; }

std::string lbl(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void add_check(ExperimentOutput& out, std::string name, double value, double se, double bound, bool pass,
               std::string detail = {}) {
  out.checks.push_back({std::move(name), value, se, bound, pass, std::move(detail)});
}

Table checks_table(const ExperimentOutput& out) {
  Table t{"checks", {"check", "value", "se", "bound", "pass", "detail"}, {}};
  for (const auto& c : out.checks) t.add({c.name, N::num(c.value), N::num(c.se), N::num(c.bound), yes(c.pass), c.detail});
  return t;
}

// ---- config access ------------------------------------------------------------

double get_num(const json& j, const char* key, double dflt) {
  if (!j.is_object() || !j.contains(key) || j[key].is_null()) return dflt;
  const auto& v = j[key];
  if (v.is_string() && (v == "inf" || v == "infinity")) return std::numeric_limits<double>::infinity();
  if (!v.is_number()) fail(ErrorCode::Config, std::string("config key '") + key + "' must be a number");
  return v.get<double>();
}

std::uint64_t get_uint(const json& j, const char* key, std::uint64_t dflt) {
  if (!j.is_object() || !j.contains(key) || j[key].is_null()) return dflt;
  const auto& v = j[key];
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_number_float() && v.get<double>() >= 0.0 && std::floor(v.get<double>()) == v.get<double>())
    return static_cast<std::uint64_t>(v.get<double>());
  fail(ErrorCode::Config, std::string("config key '") + key + "' must be a nonnegative integer");
}

std::string get_str(const json& j, const char* key, const std::string& dflt) {
  if (!j.is_object() || !j.contains(key) || j[key].is_null()) return dflt;
  if (!j[key].is_string()) fail(ErrorCode::Config, std::string("config key '") + key + "' must be a string");
  return j[key].get<std::string>();
}

bool get_bool(const json& j, const char* key, bool dflt) {
  if (!j.is_object() || !j.contains(key) || j[key].is_null()) return dflt;
  if (!j[key].is_boolean()) fail(ErrorCode::Config, std::string("config key '") + key + "' must be a boolean");
  return j[key].get<bool>();
}

std::vector<double> get_list(const json& j, const char* key, std::vector<double> dflt) {
  if (!j.is_object() || !j.contains(key) || j[key].is_null()) return dflt;
  const auto& v = j[key];
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) fail(ErrorCode::Config, std::string("config key '") + key + "' must be a list of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) fail(ErrorCode::Config, std::string("config key '") + key + "' must be a list of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

const json& section(const json& cfg, const char* key) {
  static const json empty = json::object();
  if (!cfg.contains(key) || cfg[key].is_null()) return empty;
  if (!cfg[key].is_object()) fail(ErrorCode::Config, std::string("config section '") + key + "' must be an object");
  return cfg[key];
}

Payoff payoff_from_json(const json& j) {
  Payoff g;
  const std::string k = get_str(j, "kind", "sqrt-one-plus-square");
  if (k == "identity") g.kind = PayoffKind::Identity;
  else if (k == "clamped-identity") g.kind = PayoffKind::ClampedIdentity;
  else if (k == "sqrt-one-plus-square") g.kind = PayoffKind::SqrtOnePlusSquare;
  else if (k == "square") g.kind = PayoffKind::Square;
  else fail(ErrorCode::Config, "unknown payoff kind '" + k + "'");
  g.clamp = get_num(j, "clamp", 1.0);
  return g;
}

json dw_model() { return {{"kind", "double-well"}, {"a", 0.002}, {"dim", 1}, {"K", 0.002}, {"certify", true}}; }

json dw_finite_sum() {
  return {{"kind", "finite-sum"}, {"base", "double-well"}, {"a", 0.002}, {"dim", 1}, {"K", 0.002}, {"certify", true},
          {"components", {{"m", 8}, {"offset_scale", 0.001}, {"weight_spread", 0.0}, {"slope_spread", 0.0}, {"seed", 7}}}};
}

json ou_model() { return {{"kind", "ou"}, {"dim", 1}}; }

json ou_finite_sum() {
  return {{"kind", "finite-sum"}, {"base", "ou"}, {"dim", 1}, {"K", 0.5}, {"certify", true},
          {"components", {{"m", 4}, {"offset_scale", 0.5}, {"weight_spread", 0.5}, {"slope_spread", 0.0}, {"seed", 11}}}};
}

json point_init() { return {{"kind", "point"}, {"mean", json::array({0.0})}}; }

const std::vector<std::string> kNames = {"constants",   "verify-coupling", "verify-lemmas", "contract",
                                         "ula-bias",    "sgld-bias",       "weak-error",    "mlmc-variance",
                                         "mlmc-complexity", "subsampling"};

}  // namespace

const std::vector<std::string>& experiment_names() { return kNames; }

json default_config(const std::string& e) {
  json c = {{"experiment", e}, {"seed", 20240611}};
  if (e == "constants") {
    c["model"] = dw_model();
    c["h_over_h0"] = 0.25;
    c["k"] = 1000;
  } else if (e == "verify-coupling") {
    c["model"] = dw_model();
    c["finite_sum"] = dw_finite_sum();
    c["subsampling"] = {{"scheme", "with"}, {"s", 2}, {"alpha", 1.0}, {"h_max", 0.01}};
    c["configs"] = 5;
    c["samples"] = 100000;
    c["level"] = 1e-3;
    c["branch"] = {{"r_hat", 0.1}, {"h", 0.01}, {"m", 0.1}, {"H", 1.0}, {"samples", 1000000}};
  } else if (e == "verify-lemmas") {
    c["model"] = dw_model();
    c["lemma31"] = {{"r_hat", {0.01, 0.05, 0.1, 0.2, 0.5}}, {"h", {0.01, 0.04}}, {"m_over_sqrt_h", {0.5, 1.0}}};
    c["lemma32"] = {{"r_over_sqrt_h", {0.2, 1.0, 5.0}}, {"h", {0.01, 0.0025}}, {"m_over_sqrt_h", {0.5, 1.0}}};
    c["lemma24"] = {{"points", 10000}, {"span", 10.0}};
  } else if (e == "contract") {
    c["model"] = dw_model();
    c["points"] = 15;
    c["samples"] = 1000000;
    c["h_over_h0"] = 0.5;
    c["h_over_h0_1"] = 0.5;
    c["center"] = 0.0;
  } else if (e == "ula-bias") {
    c["model"] = dw_model();
    c["replicas"] = 10000;
    c["h_over_h0"] = {0.25, 0.125};
    c["T"] = 10.0;
    c["refinement"] = 4;
    c["record_every_time"] = 0.5;
    c["init"] = point_init();
    c["refinement_check"] = false;
  } else if (e == "sgld-bias") {
    c["model"] = dw_finite_sum();
    c["subsampling"] = {{"scheme", "with"}, {"s", 2}, {"alpha", 1.0}};
    c["h_over_h0"] = 0.25;
    c["T"] = 10.0;
    c["replicas"] = 10000;
    c["record_every_time"] = 0.5;
    c["init"] = point_init();
  } else if (e == "weak-error") {
    c["model"] = ou_model();
    c["finite_sum"] = ou_finite_sum();
    c["subsampling"] = {{"scheme", "with"}, {"s", 1}, {"alpha", 0.0}};
    c["h"] = {0.2, 0.1, 0.05, 0.025};
    c["T"] = 2.0;
    c["replicas"] = 4000000;
    c["init"] = point_init();
  } else if (e == "mlmc-variance") {
    c["model"] = dw_model();
    c["levels"] = 4;
    c["h_over_h0"] = 0.5;
    c["T"] = 2.0;
    c["replicas"] = 20000;
    c["payoff"] = {{"kind", "sqrt-one-plus-square"}};
    c["init"] = point_init();
  } else if (e == "mlmc-complexity") {
    c["model"] = ou_model();
    c["eps"] = {0.01, 0.005, 0.0025, 0.00125};
    c["h0"] = 0.5;
    c["lambda"] = nullptr;
    c["pilot_samples"] = 20000;
    c["max_levels"] = 10;
    c["payoff"] = {{"kind", "square"}};
    c["coupling"] = {{"m", "inf"}, {"H", "inf"}};
    c["init"] = point_init();
  } else if (e == "subsampling") {
    c["max_m"] = 6;
    c["trials"] = 3;
    c["dim"] = 1;
  } else {
    fail(ErrorCode::Config, "unknown experiment '" + e + "'");
  }
  return c;
}

json merge_defaults(const json& defaults, const json& overrides) {
  if (!overrides.is_object() || !defaults.is_object()) return overrides;
  json out = defaults;
  for (auto it = overrides.begin(); it != overrides.end(); ++it) {
    if (out.contains(it.key()) && out[it.key()].is_object() && it.value().is_object())
      out[it.key()] = merge_defaults(out[it.key()], it.value());
    else
      out[it.key()] = it.value();
  }
  return out;
}

std::uint64_t config_hash(const json& cfg) { return fnv1a64(cfg.dump()); }

GridSpec grid_from_json(const json& cfg) {
  const json& g = section(cfg, "grid");
  GridSpec s;
  s.random_pairs = get_uint(g, "random_pairs", s.random_pairs);
  s.box_radius = get_num(g, "box_radius", s.box_radius);
  s.seed = get_uint(g, "seed", s.seed);
  s.scan_points = get_uint(g, "scan_points", s.scan_points);
  s.scan_radius = get_num(g, "scan_radius", s.scan_radius);
  return s;
}

namespace {

BaseDrift base_from_name(const std::string& b) {
  if (b == "zero") return BaseDrift::Zero;
  if (b == "ou") return BaseDrift::OrnsteinUhlenbeck;
  if (b == "double-well") return BaseDrift::TruncatedDoubleWell;
  fail(ErrorCode::Config, "unknown base drift '" + b + "'");
}

// component sets whose offsets and slopes cancel in pairs and whose weights sum to one
std::vector<Component> generate_components(const json& spec, std::size_t dim) {
  const std::size_t m = get_uint(spec, "m", 4);
  if (m == 0) fail(ErrorCode::Config, "finite sum needs at least one component");
  const double os = get_num(spec, "offset_scale", 0.0), ws = get_num(spec, "weight_spread", 0.0),
               ss = get_num(spec, "slope_spread", 0.0);
  const Stream st(StreamId{get_uint(spec, "seed", 1), fnv1a64("components"), 0, 0});
  std::vector<Component> comps(m);
  const double md = static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    comps[i].offset.assign(dim, 0.0);
    comps[i].weight = 1.0 / md;
  }
  for (std::size_t i = 0; i + 1 < m; i += 2) {
    const double dw = ws * (2.0 * st.uniform(i, 0, tag::aux) - 1.0) / md;
    const double ds = ss * (2.0 * st.uniform(i, 1, tag::aux) - 1.0);
    comps[i].weight += dw;
    comps[i + 1].weight -= dw;
    comps[i].slope = ds;
    comps[i + 1].slope = -ds;
    for (std::size_t j = 0; j < dim; ++j) {
      const double o = os * st.normal(i, static_cast<std::uint32_t>(2 + j), tag::aux);
      comps[i].offset[j] = o;
      comps[i + 1].offset[j] = -o;
    }
  }
  return comps;
}

std::vector<Component> components_from_json(const json& spec, std::size_t dim) {
  if (spec.is_object()) return generate_components(spec, dim);
  if (!spec.is_array()) fail(ErrorCode::Config, "components must be a generator object or a list");
  std::vector<Component> comps;
  for (const auto& c : spec) {
    Component k;
    k.weight = get_num(c, "weight", 0.0);
    k.slope = get_num(c, "slope", 0.0);
    k.offset = get_list(c, "offset", std::vector<double>(dim, 0.0));
    if (k.offset.size() != dim) fail(ErrorCode::Config, "component offset has the wrong dimension");
    comps.push_back(std::move(k));
  }
  return comps;
}

}  // namespace

DriftModel model_from_json(const json& spec, const GridSpec& grid) {
  if (!spec.is_object()) fail(ErrorCode::Config, "model must be an object");
  const std::string kind = get_str(spec, "kind", "");
  const std::size_t dim = get_uint(spec, "dim", 1);
  if (dim == 0) fail(ErrorCode::Config, "dimension must be positive");
  DriftModel m;
  if (kind == "ou") {
    m = make_ou(dim);
  } else if (kind == "double-well" || kind == "finite-sum") {
    const double a = get_num(spec, "a", 0.002);
    const double n = get_num(spec, "n", std::sqrt(a));
    const double K = get_num(spec, "K", a);
    if (!(a > 0.0) || !(n > 0.0)) fail(ErrorCode::Config, "double-well needs a > 0 and n > 0");
    if (kind == "double-well") {
      m = make_double_well(a, n, dim, get_num(spec, "L", 1.0), K, get_num(spec, "R", 0.0));
    } else {
      const BaseDrift base = base_from_name(get_str(spec, "base", "double-well"));
      auto comps = components_from_json(spec.contains("components") ? spec["components"] : json::object(), dim);
      m = make_finite_sum(base, a, n, dim, std::move(comps), get_num(spec, "L", 1.0), K, get_num(spec, "R", 0.0));
    }
    if (get_bool(spec, "certify", true)) m = certify_constants(m, K, grid);
  } else {
    fail(ErrorCode::Config, "unknown model kind '" + kind + "'");
  }
  return m;
}

std::optional<InaccurateDrift> inaccurate_from_json(const json& cfg, const DriftModel& base, double h,
                                                    const GridSpec& grid) {
  const json& s = section(cfg, "subsampling");
  if (s.empty()) return std::nullopt;
  const std::string scheme = get_str(s, "scheme", "with");
  Scheme sc;
  if (scheme == "with") sc = Scheme::WithReplacement;
  else if (scheme == "without") sc = Scheme::WithoutReplacement;
  else fail(ErrorCode::Config, "subsampling scheme must be 'with' or 'without'");
  return certify_inaccurate(base, sc, get_uint(s, "s", 1), get_num(s, "alpha", 1.0), get_num(s, "h_max", h), grid);
}

InitialSpec init_from_json(const json& spec, std::size_t dim) {
  InitialSpec init;
  const std::string k = get_str(spec, "kind", "point");
  if (k == "point") init.kind = InitialSpec::Kind::Point;
  else if (k == "gaussian") init.kind = InitialSpec::Kind::Gaussian;
  else fail(ErrorCode::Config, "initial distribution must be 'point' or 'gaussian'");
  init.mean = get_list(spec, "mean", {});
  if (init.mean.size() == 1 && dim > 1) init.mean.assign(dim, init.mean[0]);
  if (!init.mean.empty() && init.mean.size() != dim) fail(ErrorCode::Config, "initial mean has the wrong dimension");
  init.stddev = get_num(spec, "stddev", 0.0);
  return init;
}

namespace {

struct Context {
  std::string name;
  json cfg;
  std::uint64_t seed = 0;
  std::uint64_t experiment = 0;
  GridSpec grid;
};

MomentInputs moments_for(const InitialSpec& init, std::size_t d) {
  MomentInputs mi;
  mi.EX0_sq = mi.EY0_sq = init.second_moment(d);
  mi.d = d;
  return mi;
}

std::uint64_t record_stride(const json& cfg, double h) {
  const double every = get_num(cfg, "record_every_time", 0.0);
  if (!(every > 0.0)) return 0;
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(every / h)));
}

std::uint64_t steps_over(double T, double h) {
  if (!(T > 0.0)) fail(ErrorCode::Config, "horizon T must be positive");
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(T / h)));
}

Table records_table(const std::string& name) {
  return Table{name,
               {"h", "k", "t", "mean", "second_moment", "Ef_distance", "W1_hat", "W2_hat", "bound_value"},
               {}};
}

void append_records(Table& t, double h, const EnsembleRun& run) {
  for (const auto& r : run.records)
    t.add({N::num(h), N::num(r.k), N::num(r.t), N::num(r.mean), N::num(r.second_moment), N::num(r.Ef_distance),
           N::num(r.W1_hat), N::num(r.W2_hat), N::num(r.bound_value)});
}

Vec first_coordinate(const Vec& x, std::size_t d) {
  Vec out(x.size() / d);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i * d];
  return out;
}

// ---- constants -------------------------------------------------------------------

ExperimentOutput exp_constants(const Context& cx) {
  ExperimentOutput out;
  const DriftModel model = model_from_json(section(cx.cfg, "model"), cx.grid);
  const InitialSpec init = init_from_json(section(cx.cfg, "init"), model.dim);
  // the inaccurate extras need h, which needs h0 from a first pass
  const ContractionLedger pre = build_ledger(model, std::nullopt, moments_for(init, model.dim));
  const double h = cx.cfg.contains("h") ? get_num(cx.cfg, "h", 0.0) : get_num(cx.cfg, "h_over_h0", 0.25) * pre.h0;
  std::optional<InaccurateExtras> extras;
  if (auto ina = inaccurate_from_json(cx.cfg, model, h, cx.grid)) extras = extras_from(*ina);
  const ContractionLedger g = build_ledger(model, extras, moments_for(init, model.dim));
  Table t{"constants", {"name", "value"}, {}};
  for (const auto& [k, v] : ledger_entries(g)) t.add({k, N::num(v)});
  out.tables.push_back(t);

  Table b{"bounds", {"kind", "h", "k", "ceiling", "admissible", "bound"}, {}};
  const std::uint64_t k = get_uint(cx.cfg, "k", 1000);
  for (BoundKind kind : {BoundKind::ULA_W2, BoundKind::ULA_W1, BoundKind::SG_W2, BoundKind::SG_W1, BoundKind::MLMC_VAR}) {
    if (kind != BoundKind::ULA_W2 && kind != BoundKind::ULA_W1 && !g.inaccurate) continue;
    const double ceil = admissible_ceiling(kind, g);
    const bool ok = h > 0.0 && h < ceil;
    b.add({bound_kind_name(kind), N::num(h), N::num(k), N::num(ceil), yes(ok), ok ? N::num(theorem_bound(kind, g, h, k, 0.0)) : ""});
  }
  out.tables.push_back(b);

  const AssumptionReport rep = verify_assumptions(model, cx.grid);
  add_check(out, "lipschitz", rep.max_lipschitz_ratio, 0.0, model.lipschitz_L, rep.lipschitz_ok, "max |b(x)-b(y)|/|x-y|");
  add_check(out, "contraction", rep.min_contraction_ratio, 0.0, model.contraction_K, rep.contraction_ok,
            "min over |x-y| > R of -<x-y,b(x)-b(y)>/|x-y|^2");
  out.metadata["h"] = h;
  return out;
}

// ---- verify-coupling ---------------------------------------------------------------

ExperimentOutput exp_verify_coupling(const Context& cx) {
  ExperimentOutput out;
  const DriftModel model = model_from_json(section(cx.cfg, "model"), cx.grid);
  const std::size_t ncfg = get_uint(cx.cfg, "configs", 5);
  const std::size_t n = get_uint(cx.cfg, "samples", 100000);
  const double level = get_num(cx.cfg, "level", 1e-3);
  if (n < 2) fail(ErrorCode::Config, "need at least two samples");
  const Stream cfg_rng(StreamId{cx.seed, cx.experiment, 0, 1});
  Table t{"marginals", {"config", "dim", "h", "m", "H", "r_hat", "projection", "ks_statistic", "critical", "pass"}, {}};

  auto test_marginals = [&](const std::string& label, const Vec& xhat, const Vec& yhat, CouplingParams p,
                            std::uint64_t stream_level) {
    const std::size_t d = xhat.size();
    const Stream st(StreamId{cx.seed, cx.experiment, 1, stream_level});
    Vec y(n * d), z(d), xn(d), yn(d);
    for (std::size_t i = 0; i < n; ++i) {
      st.normals(i, tag::noise, z.data(), d);
      couple_from_hat(xhat, yhat, p, z, st.uniform(i, 0, tag::zeta), xn, yn);
      std::copy(yn.begin(), yn.end(), y.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    const double r_hat = dist(xhat, yhat);
    std::vector<Vec> dirs;
    for (std::size_t j = 0; j < d; ++j) {
      Vec e(d, 0.0);
      e[j] = 1.0;
      dirs.push_back(e);
    }
    if (d > 1) {
      Vec v(d);
      cfg_rng.normals(1000 + stream_level, tag::aux, v.data(), d);
      const double nv = norm(v);
      for (double& e : v) e /= nv;
      dirs.push_back(v);
    }
    for (std::size_t q = 0; q < dirs.size(); ++q) {
      Vec proj(n);
      for (std::size_t i = 0; i < n; ++i) proj[i] = dot(std::span<const double>(&y[i * d], d), dirs[q]);
      const double mu = dot(yhat, dirs[q]);
      const auto ks = ks_one_sample(proj, [&](double v) { return normal_cdf(v, mu, p.h); }, level);
      const std::string pname = q < d ? "e" + std::to_string(q) : "random";
      t.add({label, N::num(static_cast<std::uint64_t>(d)), N::num(p.h), N::num(p.m), N::num(p.H), N::num(r_hat), pname,
             N::num(ks.statistic), N::num(ks.critical), yes(ks.pass)});
      add_check(out, "ks[" + label + "," + pname + "]", ks.statistic, 0.0, ks.critical, ks.pass);
    }
  };

  for (std::size_t c = 0; c < ncfg; ++c) {
    const std::size_t d = c % 2 == 0 ? 1 : 2;
    if (model.dim != 1 && model.dim != d) continue;
    DriftModel md = model;
    if (md.dim != d) {
      if (md.kind == DriftKind::FiniteSum) fail(ErrorCode::Config, "coupling configs need a 1-d or 2-d model");
      md.dim = d;
    }
    Vec x(d), y(d);
    for (std::size_t j = 0; j < d; ++j) {
      x[j] = 0.3 * cfg_rng.normal(c, static_cast<std::uint32_t>(j), tag::init);
      y[j] = 0.3 * cfg_rng.normal(c, static_cast<std::uint32_t>(10 + j), tag::init);
    }
    CouplingParams p;
    p.h = 0.002 + 0.018 * cfg_rng.uniform(c, 20, tag::init);
    p.m = std::sqrt(p.h) * (0.3 + 1.2 * cfg_rng.uniform(c, 21, tag::init));
    p.H = 0.05 + 0.95 * cfg_rng.uniform(c, 22, tag::init);
    Vec xhat = x, yhat = y;
    const Vec bx = eval_drift(md, x), by = eval_drift(md, y);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[j] += p.h * bx[j];
      yhat[j] += p.h * by[j];
    }
    test_marginals("exact-" + std::to_string(c), xhat, yhat, p, 10 + c);
  }

  // conditional on a fixed subsample draw the inaccurate coupling is again Gaussian
  {
    const DriftModel fs = model_from_json(section(cx.cfg, "finite_sum"), cx.grid);
    const auto ina = inaccurate_from_json(cx.cfg, fs, 0.01, cx.grid);
    if (ina) {
      const SubsampleDraw u = draw_subsample(*ina, Stream(StreamId{cx.seed, cx.experiment, 2, 0}), 0, tag::subsample);
      const Vec x(fs.dim, -0.1), y(fs.dim, 0.15);
      CouplingParams p{0.01, 0.05, 1.0};
      const Vec bx = eval_inaccurate_drift(*ina, x, u), by = eval_inaccurate_drift(*ina, y, u);
      Vec xhat = x, yhat = y;
      for (std::size_t j = 0; j < fs.dim; ++j) {
        xhat[j] += p.h * bx[j];
        yhat[j] += p.h * by[j];
      }
      test_marginals("inaccurate", xhat, yhat, p, 99);
    }
  }
  out.tables.push_back(t);

  // branch frequencies in the 1-d reduction against the quadrature oracle
  const json& br = section(cx.cfg, "branch");
  const double r_hat = get_num(br, "r_hat", 0.1), h = get_num(br, "h", 0.01), m = get_num(br, "m", 0.05),
               H = get_num(br, "H", 1.0);
  const std::size_t nb = get_uint(br, "samples", 1000000);
  const auto prob = branch_probabilities(r_hat, h, m, H);
  const Stream st(StreamId{cx.seed, cx.experiment, 3, 0});
  std::size_t cnt[3] = {0, 0, 0};
  const CouplingParams p{h, m, H};
  for (std::size_t i = 0; i < nb; ++i) {
    double xn, yn;
    const Branch b = couple_from_hat_1d(0.0, r_hat, p, st.normal(i, 0, tag::noise), st.uniform(i, 0, tag::zeta), xn, yn);
    ++cnt[static_cast<int>(b)];
  }
  Table bt{"branches", {"branch", "frequency", "probability", "se", "pass"}, {}};
  const double pr[3] = {prob.merge, prob.reflect, prob.sync};
  for (int b = 0; b < 3; ++b) {
    const double f = static_cast<double>(cnt[b]) / static_cast<double>(nb);
    const double se = std::sqrt(pr[b] * (1.0 - pr[b]) / static_cast<double>(nb));
    const bool pass = std::fabs(f - pr[b]) <= 3.0 * se + 1e-12;
    bt.add({branch_name(static_cast<Branch>(b)), N::num(f), N::num(pr[b]), N::num(se), yes(pass)});
    add_check(out, std::string("branch[") + branch_name(static_cast<Branch>(b)) + "]", f, se, pr[b], pass);
  }
  out.tables.push_back(bt);
  return out;
}

// ---- verify-lemmas ------------------------------------------------------------------

ExperimentOutput exp_verify_lemmas(const Context& cx) {
  ExperimentOutput out;
  Table t{"lemmas", {"lemma", "r_hat", "h", "m", "lhs", "rhs", "margin", "pass"}, {}};
  const json& l31 = section(cx.cfg, "lemma31");
  for (double h : get_list(l31, "h", {0.01}))
    for (double mq : get_list(l31, "m_over_sqrt_h", {0.5}))
      for (double r : get_list(l31, "r_hat", {0.1})) {
        const double m = mq * std::sqrt(h);
        const double defect = quadrature_first_moment(r, h, m, true);
        const bool pass = std::fabs(defect) <= 1e-9;
        t.add({"first-moment", N::num(r), N::num(h), N::num(m), N::num(std::fabs(defect)), N::num(1e-9),
               N::num(1e-9 - std::fabs(defect)), yes(pass)});
        add_check(out, "first-moment[r=" + lbl(r) + ",h=" + lbl(h) + ",m=" + lbl(m) + "]", defect, 0.0, 1e-9,
                  pass);
      }
  {
    // always-reflect control: no merge branch, no truncation
    const double h = 0.01, r = 0.1;
    const double defect = quadrature_first_moment(r, h, std::numeric_limits<double>::infinity(), false);
    const bool pass = defect > 0.0;
    t.add({"always-reflect", N::num(r), N::num(h), "inf", N::num(defect), N::num(0.0), N::num(defect), yes(pass)});
    add_check(out, "always-reflect", defect, 0.0, 0.0, pass, "defect must be strictly positive");
  }
  const json& l32 = section(cx.cfg, "lemma32");
  for (double h : get_list(l32, "h", {0.01}))
    for (double mq : get_list(l32, "m_over_sqrt_h", {0.5}))
      for (double rq : get_list(l32, "r_over_sqrt_h", {1.0})) {
        const double m = mq * std::sqrt(h), r = rq * std::sqrt(h);
        const auto res = quadrature_second_moment_lower(r, h, m);
        const bool pass = res.lhs >= res.alpha_bar;
        t.add({"second-moment", N::num(r), N::num(h), N::num(m), N::num(res.lhs), N::num(res.alpha_bar),
               N::num(res.lhs - res.alpha_bar), yes(pass)});
        add_check(out, "second-moment[r=" + lbl(r) + ",h=" + lbl(h) + ",m=" + lbl(m) + "]", res.lhs, 0.0,
                  res.alpha_bar, pass);
      }
  // comparison of f with the identity and the square
  const DriftModel model = model_from_json(section(cx.cfg, "model"), cx.grid);
  const ContractionLedger g = build_ledger(model, std::nullopt, moments_for(InitialSpec{}, model.dim));
  const DistanceFn f = distance_f(g);
  const json& l24 = section(cx.cfg, "lemma24");
  const std::size_t P = get_uint(l24, "points", 10000);
  const double span = get_num(l24, "span", 10.0);
  const double ear2 = std::exp(g.a * g.r2);
  double worst1 = std::numeric_limits<double>::infinity(), worst2 = worst1;
  for (std::size_t i = 1; i <= P; ++i) {
    const double r = span * g.r2 * static_cast<double>(i) / static_cast<double>(P);
    const double fr = f(r);
    worst1 = std::min(worst1, (ear2 * fr - r) / r);
    worst2 = std::min(worst2, (g.A * fr - r * r) / (r * r));
  }
  const bool p1 = worst1 >= -1e-12, p2 = worst2 >= -1e-12;
  t.add({"identity-below", N::num(span * g.r2), "", "", N::num(worst1), N::num(-1e-12), N::num(worst1 + 1e-12), yes(p1)});
  t.add({"square-below", N::num(span * g.r2), "", "", N::num(worst2), N::num(-1e-12), N::num(worst2 + 1e-12), yes(p2)});
  add_check(out, "identity-below", worst1, 0.0, -1e-12, p1, "min relative margin of e^{a r2} f(r) - r");
  add_check(out, "square-below", worst2, 0.0, -1e-12, p2, "min relative margin of A f(r) - r^2");
  out.tables.push_back(t);
  return out;
}

// ---- contract ---------------------------------------------------------------------

ExperimentOutput exp_contract(const Context& cx) {
  ExperimentOutput out;
  const DriftModel model = model_from_json(section(cx.cfg, "model"), cx.grid);
  if (model.dim != 1) fail(ErrorCode::Config, "the contraction experiment runs in one dimension");
  const ContractionLedger g = build_ledger(model, std::nullopt, moments_for(InitialSpec{}, 1));
  const std::size_t P = get_uint(cx.cfg, "points", 15), n = get_uint(cx.cfg, "samples", 1000000);
  const double center = get_num(cx.cfg, "center", 0.0);
  Table t{"contraction", {"variant", "r", "h", "mean_f", "mean_f_cv", "se", "rhs", "margin", "pass"}, {}};
  struct Variant {
    std::string name;
    DistanceFn f;
    double rate;
    CouplingParams p;
  };
  const double h = get_num(cx.cfg, "h_over_h0", 0.5) * g.h0;
  const double h1 = get_num(cx.cfg, "h_over_h0_1", 0.5) * g.h0_1;
  if (!(h < admissible_ceiling(BoundKind::ULA_W2, g)))
    fail(ErrorCode::Admissibility, "contraction step must be below h0 ^ K/(4L^2)");
  if (!(h1 < g.h0_1)) fail(ErrorCode::Admissibility, "concave-variant step must be below h0_1");
  const std::vector<Variant> variants = {
      {"f", distance_f(g), g.c, CouplingParams{h, g.default_m(), g.default_H()}},
      {"f1", distance_f1(g), g.c1, CouplingParams{h1}},
  };
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    const auto& v = variants[vi];
    const Stream st(StreamId{cx.seed, cx.experiment, vi, 0});
    for (std::size_t i = 1; i <= P; ++i) {
      const double r = 3.0 * g.r2 * static_cast<double>(i) / static_cast<double>(P);
      const double x = center - r / 2.0, y = center + r / 2.0;
      const double xhat = x + v.p.h * eval_drift(model, std::span<const double>(&x, 1))[0];
      const double yhat = y + v.p.h * eval_drift(model, std::span<const double>(&y, 1))[0];
      // control variate R' - r_hat has mean zero for the mirror coupling with merge
      const double r_hat = std::fabs(yhat - xhat), beta = v.f.eval(r_hat).d1;
      double s = 0.0, s2 = 0.0, raw = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        double xn, yn;
        couple_from_hat_1d(xhat, yhat, v.p, st.normal(k, static_cast<std::uint32_t>(i), tag::noise),
                           st.uniform(k, static_cast<std::uint32_t>(i), tag::zeta), xn, yn);
        const double rn = std::fabs(xn - yn);
        const double fr = v.f(rn);
        const double fv = fr - beta * (rn - r_hat);
        raw += fr;
        s += fv;
        s2 += fv * fv;
      }
      const double nd = static_cast<double>(n), mean = s / nd;
      const double se = std::sqrt(std::max(0.0, (s2 / nd - mean * mean)) / (nd - 1.0));
      const double rhs = (1.0 - v.rate * v.p.h) * v.f(r);
      const bool pass = mean <= rhs + 3.0 * se;
      t.add({v.name, N::num(r), N::num(v.p.h), N::num(raw / nd), N::num(mean), N::num(se), N::num(rhs),
             N::num(rhs + 3.0 * se - mean), yes(pass)});
      add_check(out, v.name + "[r=" + lbl(r) + "]", mean, se, rhs, pass);
    }
  }
  out.tables.push_back(t);
  return out;
}

// ---- ula-bias ------------------------------------------------------------------------

ExperimentOutput exp_ula_bias(const Context& cx) {
  ExperimentOutput out;
  const DriftModel model = model_from_json(section(cx.cfg, "model"), cx.grid);
  const InitialSpec init = init_from_json(section(cx.cfg, "init"), model.dim);
  const std::size_t replicas = get_uint(cx.cfg, "replicas", 10000);
  const double T = get_num(cx.cfg, "T", 10.0);

  if (model.kind == DriftKind::OrnsteinUhlenbeck) {
    // analytic sanity: stationary Euler law N(0, 1/(2-h)) against N(0, 1/2)
    if (model.dim != 1) fail(ErrorCode::Config, "the analytic OU check runs in one dimension");
    Table t{"ou_gap", {"h", "analytic", "empirical", "bootstrap_se", "pass"}, {}};
    for (double h : get_list(cx.cfg, "h", {0.1})) {
      ChainConfig cc;
      cc.h = h;
      cc.steps = steps_over(T, h);
      cc.init = init;
      cc.seed = cx.seed;
      cc.experiment = cx.experiment;
      cc.replicas = replicas;
      cc.record_every = 0;
      const auto run = run_euler(model, cc);
      const double analytic = std::fabs(1.0 / std::sqrt(2.0 - h) - 1.0 / std::sqrt(2.0));
      const auto est = w_p_1d_to_law_bootstrap(
          run.terminal, [](double u) { return normal_quantile(u, 0.0, std::sqrt(0.5)); }, 2, 200, cx.seed);
      const bool pass = std::fabs(est.value - analytic) <= 3.0 * est.se;
      t.add({N::num(h), N::num(analytic), N::num(est.value), N::num(est.se), yes(pass)});
      add_check(out, "ou_gap[h=" + lbl(h) + "]", est.value, est.se, analytic, pass, "empirical W2 against N(0,1/2)");
    }
    out.tables.push_back(t);
    return out;
  }

  const ContractionLedger g = build_ledger(model, std::nullopt, moments_for(init, model.dim));
  const unsigned refinement = static_cast<unsigned>(get_uint(cx.cfg, "refinement", 4));
  std::vector<double> hs;
  if (cx.cfg.contains("h") && !cx.cfg["h"].is_null()) hs = get_list(cx.cfg, "h", {});
  else
    for (double q : get_list(cx.cfg, "h_over_h0", {0.25})) hs.push_back(q * g.h0);
  Table rec = records_table("records");
  Table sum{"summary", {"h", "k", "W1_hat", "W1_bound", "W2_hat", "W2_bound", "Ef", "Ef_bound", "max_strong_error", "C_dif_h3"}, {}};
  for (double h : hs) {
    ChainConfig cc;
    cc.h = h;
    cc.steps = steps_over(T, h);
    cc.init = init;
    cc.seed = cx.seed;
    cc.experiment = cx.experiment;
    cc.replicas = replicas;
    cc.record_every = record_stride(cx.cfg, h);
    CoupledOptions opt;
    opt.ledger = &g;
    opt.refinement = refinement;
    const auto run = run_coupled_ula_vs_sde(model, cc, opt);
    append_records(rec, h, run);
    const auto& last = run.records.back();
    const double ef0 = run.records.front().Ef_distance;
    const double w2b = theorem_bound(BoundKind::ULA_W2, g, h, last.k, ef0);
    // W1 through f1 when h < h0_1, otherwise through e^{a r2} f
    double w1b;
    std::string w1_detail;
    if (h < g.h0_1) {
      // G_0 = Y_0, so E f1 vanishes with E f
      w1b = theorem_bound(BoundKind::ULA_W1, g, h, last.k, ef0);
      w1_detail = "concave f1 bound";
    } else {
      const double e = std::exp(g.a * g.r2);
      w1b = e * std::pow(1.0 - g.c * h, static_cast<double>(last.k)) * ef0 + e * g.C_ult / g.c * std::sqrt(h);
      w1_detail = "e^{a r2} C_ult/c h^{1/2} bound";
    }
    const std::string tagh = "[h=" + lbl(h) + "]";
    add_check(out, "W2" + tagh, last.W2_hat, 0.0, w2b, last.W2_hat <= w2b, "sorted empirical W2 vs the W2 theorem bound");
    add_check(out, "W1" + tagh, last.W1_hat, 0.0, w1b, last.W1_hat <= w1b, w1_detail);
    double ef_worst = -std::numeric_limits<double>::infinity(), ms_sde = 0.0, ms_sde_se = 0.0, se_max = 0.0,
           se_max_se = 0.0;
    bool ef_ok = true, sde_ok = true, strong_ok = true;
    const double cdif = g.C_dif * h * h * h;
    for (const auto& r : run.records) {
      ef_ok = ef_ok && r.Ef_distance - 3.0 * r.Ef_se <= r.bound_value;
      ef_worst = std::max(ef_worst, r.Ef_distance - r.bound_value);
      sde_ok = sde_ok && r.ref_second_moment - 3.0 * r.ref_second_moment_se <= g.C_SDE;
      if (r.ref_second_moment > ms_sde) {
        ms_sde = r.ref_second_moment;
        ms_sde_se = r.ref_second_moment_se;
      }
      if (r.k > 0) {
        strong_ok = strong_ok && r.strong_error - 3.0 * r.strong_error_se <= cdif;
        if (r.strong_error > se_max) {
          se_max = r.strong_error;
          se_max_se = r.strong_error_se;
        }
      }
    }
    add_check(out, "Ef" + tagh, ef_worst, 0.0, 0.0, ef_ok, "max_k of E f(|G_k - Y_kh|) minus its bound");
    add_check(out, "moment_SDE" + tagh, ms_sde, ms_sde_se, g.C_SDE, sde_ok);
    add_check(out, "strong_error" + tagh, se_max, se_max_se, cdif, strong_ok, "one-step E|S - Y|^2 vs C_dif h^3");
    // exact-drift Euler chain moments
    const auto eul = run_euler(model, cc);
    double ms = 0.0, ms_se = 0.0;
    bool eul_ok = true;
    for (const auto& r : eul.records) {
      eul_ok = eul_ok && r.second_moment - 3.0 * r.second_moment_se <= g.C_Eul;
      if (r.second_moment > ms) {
        ms = r.second_moment;
        ms_se = r.second_moment_se;
      }
    }
    add_check(out, "moment_Eul" + tagh, ms, ms_se, g.C_Eul, eul_ok);
    sum.add({N::num(h), N::num(last.k), N::num(last.W1_hat), N::num(w1b), N::num(last.W2_hat), N::num(w2b),
             N::num(last.Ef_distance), N::num(last.bound_value), N::num(se_max), N::num(cdif)});
    if (get_bool(cx.cfg, "refinement_check", false)) {
      CoupledOptions opt2 = opt;
      opt2.refinement = refinement + 1;
      const auto run2 = run_coupled_ula_vs_sde(model, cc, opt2);
      Vec dj(replicas), dj1(replicas);
      const std::size_t d = model.dim;
      for (std::size_t r = 0; r < replicas; ++r) {
        dj[r] = dist(std::span<const double>(&run.terminal[r * d], d), std::span<const double>(&run.reference_terminal[r * d], d));
        dj1[r] = dist(std::span<const double>(&run2.terminal[r * d], d), std::span<const double>(&run2.reference_terminal[r * d], d));
      }
      const Summary a = summarize(dj), b = summarize(dj1);
      const bool ok = std::fabs(a.mean - b.mean) <= 3.0 * a.se;
      add_check(out, "refinement" + tagh, std::fabs(a.mean - b.mean), a.se, 3.0 * a.se, ok,
                "E|G-Y| at refinement j and j+1");
    }
  }
  out.tables.push_back(sum);
  out.tables.push_back(rec);
  out.metadata["w_estimator"] = model.dim == 1 ? "sorted" : "projected-lower-bound";
  out.metadata["refinement"] = refinement;
  return out;
}

// ---- sgld-bias -----------------------------------------------------------------------

ExperimentOutput exp_sgld_bias(const Context& cx) {
  ExperimentOutput out;
  const DriftModel model = model_from_json(section(cx.cfg, "model"), cx.grid);
  const InitialSpec init = init_from_json(section(cx.cfg, "init"), model.dim);
  const ContractionLedger pre = build_ledger(model, std::nullopt, moments_for(init, model.dim));
  const double h = cx.cfg.contains("h") && !cx.cfg["h"].is_null() ? get_num(cx.cfg, "h", 0.0)
                                                                    : get_num(cx.cfg, "h_over_h0", 0.25) * pre.h0;
  const auto ina = inaccurate_from_json(cx.cfg, model, h, cx.grid);
  if (!ina) fail(ErrorCode::Config, "sgld-bias needs a subsampling section");
  const ContractionLedger g = build_ledger(model, extras_from(*ina), moments_for(init, model.dim));
  ChainConfig cc;
  cc.h = h;
  cc.steps = steps_over(get_num(cx.cfg, "T", 10.0), h);
  cc.init = init;
  cc.seed = cx.seed;
  cc.experiment = cx.experiment;
  cc.replicas = get_uint(cx.cfg, "replicas", 10000);
  cc.record_every = record_stride(cx.cfg, h);
  CoupledOptions opt;
  opt.ledger = &g;
  const auto run = run_coupled_sg_pair(*ina, cc, opt);
  Table rec = records_table("records");
  append_records(rec, h, run);
  const auto& last = run.records.back();
  const double ef0 = run.records.front().Ef_distance;
  const std::size_t d = model.dim;
  const Vec g1 = first_coordinate(run.terminal, d), x1 = first_coordinate(run.reference_terminal, d);
  const auto w1 = w_p_1d_bootstrap(g1, x1, 1, 200, cx.seed);
  const auto w2 = w_p_1d_bootstrap(g1, x1, 2, 200, cx.seed);
  const double b1 = theorem_bound(BoundKind::SG_W1, g, h, last.k, ef0);
  const double b2 = theorem_bound(BoundKind::SG_W2, g, h, last.k, ef0);
  add_check(out, "W1", w1.value, w1.se, b1, w1.value <= b1 + 3.0 * w1.se, "sorted W1 of first coordinates");
  add_check(out, "W2", w2.value, w2.se, b2, w2.value <= b2 + 3.0 * w2.se, "sorted W2 of first coordinates");
  bool ef_ok = true, mom_ok = true;
  double ef_worst = -std::numeric_limits<double>::infinity(), ms = 0.0, ms_se = 0.0;
  for (const auto& r : run.records) {
    ef_ok = ef_ok && r.Ef_distance - 3.0 * r.Ef_se <= r.bound_value;
    ef_worst = std::max(ef_worst, r.Ef_distance - r.bound_value);
    mom_ok = mom_ok && r.second_moment - 3.0 * r.second_moment_se <= g.inaccurate->C_IEul;
    if (r.second_moment > ms) {
      ms = r.second_moment;
      ms_se = r.second_moment_se;
    }
  }
  add_check(out, "Ef", ef_worst, 0.0, 0.0, ef_ok, "max_k of E f(|G_k - Xbar_k|) minus its bound");
  add_check(out, "moment_IEul", ms, ms_se, g.inaccurate->C_IEul, mom_ok);
  // G_k has the law of the exact Euler chain
  ChainConfig ce = cc;
  ce.seed = cx.seed ^ 0x9e3779b97f4a7c15ULL;
  ce.record_every = 0;
  const auto eul = run_euler(model, ce);
  const auto ks = ks_two_sample(g1, first_coordinate(eul.terminal, d), 1e-3);
  add_check(out, "law_equality", ks.statistic, 0.0, ks.critical, ks.pass, "two-sample KS of G_k against X_k");
  // unbiasedness of the estimator at the simulated states
  {
    const Stream st(StreamId{cx.seed, cx.experiment, 0, 77});
    Vec res(cc.replicas);
    for (std::size_t r = 0; r < cc.replicas; ++r) {
      const std::span<const double> x(&run.reference_terminal[r * d], d);
      const SubsampleDraw u = draw_subsample(*ina, st, r, tag::subsample);
      res[r] = eval_inaccurate_drift(*ina, x, u)[0] - eval_drift(model, x)[0];
    }
    const Summary s = summarize(res);
    const bool ok = std::fabs(s.mean) <= 3.0 * s.se + 1e-12;
    add_check(out, "unbiased", s.mean, s.se, 0.0, ok, "mean of b(x,U) - b(x) at simulated states");
  }
  Table sum{"summary", {"h", "k", "sigma", "alpha", "W1_hat", "W1_bound", "W2_hat", "W2_bound", "Ef", "Ef_bound"}, {}};
  sum.add({N::num(h), N::num(last.k), N::num(ina->sigma), N::num(ina->alpha), N::num(w1.value), N::num(b1),
           N::num(w2.value), N::num(b2), N::num(last.Ef_distance), N::num(last.bound_value)});
  out.tables.push_back(sum);
  out.tables.push_back(rec);
  return out;
}

// ---- weak-error -----------------------------------------------------------------------

ExperimentOutput exp_weak_error(const Context& cx) {
  ExperimentOutput out;
  const DriftModel model = model_from_json(section(cx.cfg, "model"), cx.grid);
  if (model.kind != DriftKind::OrnsteinUhlenbeck) fail(ErrorCode::Config, "the weak-error experiment uses the OU model");
  const std::size_t d = model.dim;
  const InitialSpec init = init_from_json(section(cx.cfg, "init"), d);
  if (init.kind != InitialSpec::Kind::Point) fail(ErrorCode::Config, "the weak-error experiment needs a point initial law");
  const double T = get_num(cx.cfg, "T", 2.0);
  const auto hs = get_list(cx.cfg, "h", {0.2, 0.1, 0.05, 0.025});
  const std::size_t replicas = get_uint(cx.cfg, "replicas", 100000);
  // E|Y_T|^2 for the OU SDE started at x0
  const double x0sq = init.mean.empty() ? 0.0 : norm_sq(init.mean);
  const double exact = x0sq * std::exp(-2.0 * T) + static_cast<double>(d) * (1.0 - std::exp(-2.0 * T)) / 2.0;
  const DriftModel fs = model_from_json(section(cx.cfg, "finite_sum"), cx.grid);
  if (fs.dim != d) fail(ErrorCode::Config, "finite_sum must match the model dimension");
  const double hmax = *std::max_element(hs.begin(), hs.end());
  const auto ina = inaccurate_from_json(cx.cfg, fs, hmax, cx.grid);
  Table t{"weak_error", {"scheme", "h", "steps", "estimate", "se", "exact", "error"}, {}};
  Table ft{"rates", {"scheme", "slope", "se", "pass"}, {}};
  for (int scheme = 0; scheme < (ina ? 2 : 1); ++scheme) {
    std::vector<RatePoint> pts;
    const std::string name = scheme == 0 ? "exact" : "randomised";
    for (double h : hs) {
      ChainConfig cc;
      cc.h = h;
      cc.steps = steps_over(T, h);
      cc.init = init;
      cc.seed = cx.seed;
      cc.experiment = cx.experiment;
      cc.level = static_cast<std::uint64_t>(scheme);
      cc.replicas = replicas;
      cc.record_every = 0;
      const auto run = scheme == 0 ? run_euler(model, cc) : run_randomised_euler(*ina, cc);
      Vec gx(replicas);
      for (std::size_t r = 0; r < replicas; ++r) gx[r] = norm_sq(std::span<const double>(&run.terminal[r * d], d));
      const Summary s = summarize(gx);
      const double err = std::fabs(s.mean - exact);
      t.add({name, N::num(h), N::num(cc.steps), N::num(s.mean), N::num(s.se), N::num(exact), N::num(err)});
      pts.push_back({h, err});
    }
    const auto fit = rate_fit(pts);
    const bool pass = std::fabs(fit.slope - 1.0) <= 0.25;
    ft.add({name, N::num(fit.slope), N::num(fit.se), yes(pass)});
    add_check(out, "slope[" + name + "]", fit.slope, fit.se, 1.0, pass, "log-log slope of the weak error, target 1 +- 0.25");
  }
  out.tables.push_back(t);
  out.tables.push_back(ft);
  return out;
}

// ---- mlmc-variance --------------------------------------------------------------------

ExperimentOutput exp_mlmc_variance(const Context& cx) {
  ExperimentOutput out;
  const DriftModel model = model_from_json(section(cx.cfg, "model"), cx.grid);
  const InitialSpec init = init_from_json(section(cx.cfg, "init"), model.dim);
  const ContractionLedger pre = build_ledger(model, std::nullopt, moments_for(init, model.dim));
  const std::size_t levels = get_uint(cx.cfg, "levels", 4);
  if (levels < 3) fail(ErrorCode::Config, "the decay fit needs at least three levels");
  const double hb = cx.cfg.contains("h") && !cx.cfg["h"].is_null() ? get_num(cx.cfg, "h", 0.0)
                                                                     : get_num(cx.cfg, "h_over_h0", 0.5) * pre.h0;
  const auto ina = inaccurate_from_json(cx.cfg, model, hb / 2.0, cx.grid);
  InaccurateExtras ex;
  if (ina) {
    ex = extras_from(*ina);
  } else {
    // exact drift: no estimator variance, alpha_c treated as infinite
    ex.sigma = 0.0;
    ex.alpha = ex.alpha_c = std::numeric_limits<double>::infinity();
    ex.bar_L = model.lipschitz_L;
    ex.bar_K = model.contraction_K;
    ex.bar_R = model.radius_R;
    ex.L_u = 0.0;
  }
  const ContractionLedger g = build_ledger(model, ex, moments_for(init, model.dim));
  const double T = hb * std::ceil(get_num(cx.cfg, "T", 2.0) / hb - 1e-9);
  const Payoff payoff = payoff_from_json(section(cx.cfg, "payoff"));
  if (payoff.kind == PayoffKind::Square) fail(ErrorCode::Config, "the variance bound needs a Lipschitz payoff");
  LevelDrift src;
  src.exact = &model;
  if (ina) src.inaccurate = &*ina;
  Table t{"levels", {"level", "h", "steps", "var_diff", "var_sync_diff", "mean_sq_distance", "cost", "bound", "pass"}, {}};
  std::vector<RatePoint> pts;
  std::vector<LevelPairResult> res;
  for (std::size_t l = 1; l <= levels; ++l) {
    LevelConfig lc;
    lc.h = hb * std::ldexp(1.0, -static_cast<int>(l));
    lc.steps = steps_for(T, lc.h);
    lc.init = init;
    lc.seed = cx.seed;
    lc.experiment = cx.experiment;
    lc.level = l;
    lc.replicas = get_uint(cx.cfg, "replicas", 20000);
    lc.coupling = CouplingParams{lc.h, g.default_m(), g.default_H()};
    lc.payoff = payoff;
    lc.f = distance_f(g);
    lc.keep_terminal = true;
    auto r = run_mlmc_level_pair(src, lc);
    const double bound = theorem_bound(BoundKind::MLMC_VAR, g, lc.h, lc.steps, 0.0);
    const bool pass = r.var_diff <= bound && r.mean_sq_distance <= bound;
    t.add({N::num(static_cast<std::uint64_t>(l)), N::num(lc.h), N::num(lc.steps), N::num(r.var_diff),
           N::num(r.var_sync_diff), N::num(r.mean_sq_distance), N::num(r.cost), N::num(bound), yes(pass)});
    add_check(out, "level_variance[" + std::to_string(l) + "]", r.var_diff, 0.0, bound, pass);
    pts.push_back({lc.h, std::max(r.var_diff, std::numeric_limits<double>::min())});
    res.push_back(std::move(r));
  }
  // the fine law at level l equals the coarse law at level l+1
  const std::size_t d = model.dim;
  for (std::size_t l = 0; l + 1 < res.size(); ++l) {
    const auto ks = ks_two_sample(first_coordinate(res[l].fine_terminal, d), first_coordinate(res[l + 1].coarse_terminal, d));
    add_check(out, "level_law[" + std::to_string(l + 1) + "]", ks.statistic, 0.0, ks.critical, ks.pass,
              "KS of fine level l against coarse level l+1");
  }
  const auto fit = rate_fit(pts);
  const double target = std::min(ex.alpha_c, 1.0) / 2.0 - 0.1;
  add_check(out, "decay_slope", fit.slope, fit.se, target, fit.slope >= target, "slope of log Var vs log h");
  Table ft{"fit", {"slope", "se", "target", "pass"}, {}};
  ft.add({N::num(fit.slope), N::num(fit.se), N::num(target), yes(fit.slope >= target)});
  out.tables.push_back(t);
  out.tables.push_back(ft);
  out.metadata["T"] = T;
  return out;
}

// ---- mlmc-complexity --------------------------------------------------------------------

ExperimentOutput exp_mlmc_complexity(const Context& cx) {
  ExperimentOutput out;
  const DriftModel model = model_from_json(section(cx.cfg, "model"), cx.grid);
  const InitialSpec init = init_from_json(section(cx.cfg, "init"), model.dim);
  SweepConfig sc;
  sc.eps = get_list(cx.cfg, "eps", {0.01, 0.005, 0.0025, 0.00125});
  sc.h0 = get_num(cx.cfg, "h0", 0.5);
  sc.pilot_samples = get_uint(cx.cfg, "pilot_samples", 20000);
  sc.max_levels = get_uint(cx.cfg, "max_levels", 10);
  sc.payoff = payoff_from_json(section(cx.cfg, "payoff"));
  sc.init = init;
  sc.seed = cx.seed;
  sc.experiment = cx.experiment;
  // horizon rate: OU contracts at rate K; otherwise the ledger rate c
  std::string lambda_source = "config";
  std::optional<ContractionLedger> ledger;
  if (model.kind != DriftKind::OrnsteinUhlenbeck) ledger = build_ledger(model, std::nullopt, moments_for(init, model.dim));
  if (cx.cfg.contains("lambda") && !cx.cfg["lambda"].is_null()) {
    sc.lambda = get_num(cx.cfg, "lambda", 1.0);
  } else if (ledger) {
    sc.lambda = ledger->c;
    lambda_source = "ledger c";
  } else {
    sc.lambda = model.contraction_K;
    lambda_source = "model K";
  }
  const json& cp = section(cx.cfg, "coupling");
  const double inf = std::numeric_limits<double>::infinity();
  sc.coupling.m = get_num(cp, "m", ledger ? ledger->default_m() : inf);
  sc.coupling.H = get_num(cp, "H", ledger ? ledger->default_H() : inf);
  LevelDrift src;
  src.exact = &model;
  const auto sw = complexity_sweep(src, sc);
  Table t{"complexity", {"eps", "T", "finest_level", "cost_mlmc", "cost_mc", "reachable"}, {}};
  Table pl{"pilot", {"eps", "level", "h", "mean", "variance", "cost_per_sample"}, {}};
  for (const auto& r : sw.rows) {
    t.add({N::num(r.eps), N::num(r.T), N::num(static_cast<std::uint64_t>(r.finest_level)), N::num(r.cost_mlmc),
           N::num(r.cost_mc), yes(r.reachable)});
    for (const auto& lv : r.pilot)
      pl.add({N::num(r.eps), N::num(static_cast<std::uint64_t>(lv.level)), N::num(lv.h), N::num(lv.mean),
              N::num(lv.variance), N::num(lv.cost)});
  }
  Table ft{"exponents", {"estimator", "exponent", "se", "target", "pass"}, {}};
  if (sw.fitted) {
    const bool mc_ok = std::fabs(sw.mc_fit.slope + 3.0) <= 0.4;
    const bool ml_ok = std::fabs(sw.mlmc_fit.slope + 2.5) <= 0.4;
    ft.add({"mc", N::num(sw.mc_fit.slope), N::num(sw.mc_fit.se), N::num(-3.0), yes(mc_ok)});
    ft.add({"mlmc", N::num(sw.mlmc_fit.slope), N::num(sw.mlmc_fit.se), N::num(-2.5), yes(ml_ok)});
    add_check(out, "mc_exponent", sw.mc_fit.slope, sw.mc_fit.se, -3.0, mc_ok, "target -3 +- 0.4");
    add_check(out, "mlmc_exponent", sw.mlmc_fit.slope, sw.mlmc_fit.se, -2.5, ml_ok, "target -2.5 +- 0.4");
  } else {
    add_check(out, "fit", 0.0, 0.0, 3.0, false, "fewer than three reachable accuracy targets");
  }
  out.tables.push_back(t);
  out.tables.push_back(pl);
  out.tables.push_back(ft);
  out.metadata["lambda"] = sc.lambda;
  out.metadata["lambda_source"] = lambda_source;
  return out;
}

// ---- subsampling ----------------------------------------------------------------------

ExperimentOutput exp_subsampling(const Context& cx) {
  ExperimentOutput out;
  const std::size_t max_m = get_uint(cx.cfg, "max_m", 6), trials = get_uint(cx.cfg, "trials", 3),
                    d = get_uint(cx.cfg, "dim", 1);
  if (max_m > 8) fail(ErrorCode::Size, "enumeration is capped at m <= 8");
  const Stream st(StreamId{cx.seed, cx.experiment, 0, 0});
  Table t{"subsampling", {"trial", "m", "s", "scheme", "closed_form", "enumerated", "abs_diff", "mean_error", "pass"}, {}};
  Table rt{"ratios", {"trial", "m", "s", "ratio", "expected", "abs_diff", "pass"}, {}};
  bool all = true, ratios_ok = true, unbiased = true;
  double worst = 0.0, worst_ratio = 0.0, worst_mean = 0.0;
  std::uint64_t draw = 0;
  for (std::size_t trial = 0; trial < trials; ++trial)
    for (std::size_t m = 1; m <= max_m; ++m) {
      std::vector<Component> comps(m);
      for (auto& c : comps) {
        c.weight = 0.0;
        c.slope = 0.0;
        c.offset.resize(d);
        for (std::size_t j = 0; j < d; ++j) c.offset[j] = st.normal(draw++, 0, tag::aux);
      }
      const DriftModel fs = make_finite_sum(BaseDrift::Zero, 1.0, 1.0, d, comps, 1.0, 1.0, 1.0);
      const Vec x(d, 0.0);
      const Vec b = eval_drift(fs, x);
      for (std::size_t s = 1; s <= m; ++s) {
        double vals[2];
        for (int sc = 0; sc < 2; ++sc) {
          if (sc == 1 && m == 1) {
            vals[1] = 0.0;
            continue;
          }
          InaccurateDrift ina;
          ina.base = fs;
          ina.scheme = sc == 0 ? Scheme::WithReplacement : Scheme::WithoutReplacement;
          ina.s = s;
          const double cf = subsampling_variance(ina, x);
          const auto en = enumerate_subsampling(ina, x);
          const double diff = std::fabs(cf - en.variance);
          const double tol = 1e-12 * std::max(1.0, std::fabs(en.variance));
          const double merr = dist(en.mean, b);
          const bool ok = diff <= tol && merr <= 1e-12 * std::max(1.0, norm(b));
          all = all && diff <= tol;
          unbiased = unbiased && merr <= 1e-12 * std::max(1.0, norm(b));
          worst = std::max(worst, diff / std::max(1.0, std::fabs(en.variance)));
          worst_mean = std::max(worst_mean, merr);
          t.add({N::num(static_cast<std::uint64_t>(trial)), N::num(static_cast<std::uint64_t>(m)),
                 N::num(static_cast<std::uint64_t>(s)), sc == 0 ? "with" : "without", N::num(cf), N::num(en.variance),
                 N::num(diff), N::num(merr), yes(ok)});
          vals[sc] = cf;
        }
        if (m > 1 && s < m) {
          const double ratio = vals[1] / vals[0];
          const double expected = static_cast<double>(m - s) / static_cast<double>(m - 1);
          const double diff = std::fabs(ratio - expected);
          const bool ok = diff <= 1e-12;
          ratios_ok = ratios_ok && ok;
          worst_ratio = std::max(worst_ratio, diff);
          rt.add({N::num(static_cast<std::uint64_t>(trial)), N::num(static_cast<std::uint64_t>(m)),
                  N::num(static_cast<std::uint64_t>(s)), N::num(ratio), N::num(expected), N::num(diff), yes(ok)});
        }
      }
    }
  add_check(out, "closed_form_vs_enumeration", worst, 0.0, 1e-12, all, "max relative difference");
  add_check(out, "enumeration_mean", worst_mean, 0.0, 1e-12, unbiased, "max |E b(x,U) - b(x)|");
  add_check(out, "ratio", worst_ratio, 0.0, 1e-12, ratios_ok, "without/with = (m-s)/(m-1)");
  out.tables.push_back(t);
  out.tables.push_back(rt);
  return out;
}

}  // namespace

ExperimentOutput run_experiment(const std::string& experiment, const json& cfg) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), experiment) == names.end())
    fail(ErrorCode::Config, "unknown experiment '" + experiment + "'");
  if (!cfg.is_object() && !cfg.is_null()) fail(ErrorCode::Config, "config must be a JSON object");
  Context cx;
  cx.name = experiment;
  cx.cfg = merge_defaults(default_config(experiment), cfg.is_null() ? json::object() : cfg);
  cx.seed = get_uint(cx.cfg, "seed", 0);
  cx.experiment = fnv1a64(experiment);
  cx.grid = grid_from_json(cx.cfg);
  ExperimentOutput out;
  if (experiment == "constants") out = exp_constants(cx);
  else if (experiment == "verify-coupling") out = exp_verify_coupling(cx);
  else if (experiment == "verify-lemmas") out = exp_verify_lemmas(cx);
  else if (experiment == "contract") out = exp_contract(cx);
  else if (experiment == "ula-bias") out = exp_ula_bias(cx);
  else if (experiment == "sgld-bias") out = exp_sgld_bias(cx);
  else if (experiment == "weak-error") out = exp_weak_error(cx);
  else if (experiment == "mlmc-variance") out = exp_mlmc_variance(cx);
  else if (experiment == "mlmc-complexity") out = exp_mlmc_complexity(cx);
  else out = exp_subsampling(cx);
  out.experiment = experiment;
  out.tables.push_back(checks_table(out));
  out.metadata["experiment"] = experiment;
  out.metadata["seed"] = cx.seed;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016" PRIx64, config_hash(cx.cfg));
  out.metadata["config_hash"] = hash;
  out.metadata["config"] = cx.cfg;
  out.metadata["version"] = EULERBOUND_VERSION;
  out.metadata["kernel_backend"] = kernels::backend_name(kernels::active().backend);
  out.metadata["verified"] = out.verified();
  return out;
}

}  // namespace eb
