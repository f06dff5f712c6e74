// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one line per criterion, nonzero exit if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "eulerbound/error.hpp"
#include "eulerbound/experiments.hpp"

using eb::json;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

// all checks whose name starts with one of the prefixes
Verdict gather(const eb::ExperimentOutput& out, const std::vector<std::string>& prefixes) {
  Verdict v{true, {}};
  std::size_t n = 0, failed = 0;
  std::string first_fail;
  for (const auto& c : out.checks) {
    bool hit = false;
    for (const auto& p : prefixes) hit = hit || c.name.rfind(p, 0) == 0;
    if (!hit) continue;
    ++n;
    if (!c.pass) {
      ++failed;
      if (first_fail.empty()) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "; first failure %s value=%.4g bound=%.4g se=%.3g", c.name.c_str(), c.value,
                      c.bound, c.se);
        first_fail = buf;
      }
    }
  }
  v.pass = n > 0 && failed == 0;
  v.detail = std::to_string(n - failed) + "/" + std::to_string(n) + " checks" + first_fail;
  return v;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

struct Runner {
  std::vector<std::pair<int, bool>> results;
  void report(int id, const std::string& title, const std::function<Verdict()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = body();
    } catch (const eb::Error& e) {
      v = {false, std::string("error[") + eb::error_code_name(e.code()) + "]: " + e.what()};
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2d %-32s %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", id, title.c_str(), v.detail.c_str(), secs);
    std::fflush(stdout);
    results.emplace_back(id, v.pass);
  }
};

std::string csv_bodies(const eb::ExperimentOutput& o) {
  std::string s;
  for (const auto& t : o.tables) s += t.name + "\n" + eb::to_csv(t);
  return s;
}

}  // namespace

int main() {
  Runner R;
  const std::uint64_t seed = 20240611;

  eb::ExperimentOutput lemmas, ula, sgld;
  bool have_lemmas = false, have_ula = false, have_sgld = false;
  auto get_lemmas = [&]() -> const eb::ExperimentOutput& {
    if (!have_lemmas) lemmas = eb::run_experiment("verify-lemmas", {{"seed", seed}});
    have_lemmas = true;
    return lemmas;
  };
  // one double-well run feeds the moment, strong-error and bias criteria
  auto get_ula = [&]() -> const eb::ExperimentOutput& {
    if (!have_ula)
      ula = eb::run_experiment("ula-bias", {{"seed", seed}, {"T", 20.0}, {"replicas", 10000},
                                            {"h_over_h0", {0.5, 0.25, 0.125}}, {"refinement", 4}});
    have_ula = true;
    return ula;
  };
  auto get_sgld = [&]() -> const eb::ExperimentOutput& {
    if (!have_sgld) sgld = eb::run_experiment("sgld-bias", {{"seed", seed}, {"T", 20.0}, {"replicas", 10000}});
    have_sgld = true;
    return sgld;
  };

  R.report(1, "coupling marginals", [&] {
    const auto o = eb::run_experiment("verify-coupling", {{"seed", seed}});
    return gather(o, {"ks[", "branch["});
  });
  R.report(2, "first-moment identity", [&] { return gather(get_lemmas(), {"first-moment", "always-reflect"}); });
  R.report(3, "second-moment lower bound", [&] { return gather(get_lemmas(), {"second-moment"}); });
  R.report(4, "f dominates identity and square", [&] {
    return gather(get_lemmas(), {"identity-below", "square-below"});
  });
  R.report(5, "one-step contraction f and f1", [&] {
    const auto o = eb::run_experiment("contract", {{"seed", seed}, {"samples", 1000000}});
    return gather(o, {"f[", "f1["});
  });
  R.report(6, "moment bounds", [&] {
    Verdict a = gather(get_ula(), {"moment_SDE", "moment_Eul"});
    Verdict b = gather(get_sgld(), {"moment_IEul"});
    return Verdict{a.pass && b.pass, "SDE/Euler " + a.detail + "; randomised " + b.detail};
  });
  R.report(7, "one-step strong error", [&] { return gather(get_ula(), {"strong_error"}); });
  R.report(8, "ULA invariant bias", [&] {
    const auto ou = eb::run_experiment(
        "ula-bias", {{"seed", seed}, {"model", {{"kind", "ou"}}}, {"h", {0.1}}, {"T", 20.0}, {"replicas", 100000}});
    const auto* c = ou.find("ou_gap[h=0.1]");
    const Verdict a = gather(ou, {"ou_gap"});
    const auto& dw = get_ula();
    const Verdict b = gather(dw, {"W1[", "W2["});
    std::string d = "OU gap " + fmt("%.5f vs analytic %.5f (se %.5f)", c ? c->value : NAN, c ? c->bound : NAN,
                                    c ? c->se : NAN) +
                    "; double-well " + b.detail;
    return Verdict{a.pass && b.pass, d};
  });
  R.report(9, "randomised drift bias", [&] { return gather(get_sgld(), {"W1", "W2", "Ef", "law_equality"}); });
  R.report(10, "subsampling algebra", [&] {
    return gather(eb::run_experiment("subsampling", {{"seed", seed}}), {"closed_form", "ratio", "enumeration_mean"});
  });
  R.report(11, "weak error rate", [&] {
    const auto o = eb::run_experiment("weak-error", {{"seed", seed}});
    Verdict v = gather(o, {"slope["});
    const auto* a = o.find("slope[exact]");
    const auto* b = o.find("slope[randomised]");
    if (a && b) v.detail += fmt(" (exact %.3f, randomised %.3f)", a->value, b->value);
    return v;
  });
  R.report(12, "MLMC variance decay", [&] {
    const auto o = eb::run_experiment("mlmc-variance", {{"seed", seed}, {"replicas", 200000}});
    Verdict v = gather(o, {"level_variance", "decay_slope"});
    if (const auto* c = o.find("decay_slope")) v.detail += fmt(" (slope %.3f +- %.3f, target >= %.2f)", c->value, c->se, c->bound);
    return v;
  });
  R.report(13, "MLMC complexity exponents", [&] {
    const auto o = eb::run_experiment("mlmc-complexity", {{"seed", seed}});
    Verdict v = gather(o, {"mc_exponent", "mlmc_exponent", "fit"});
    const auto* a = o.find("mc_exponent");
    const auto* b = o.find("mlmc_exponent");
    if (a && b) v.detail += fmt(" (MC %.3f, MLMC %.3f)", a->value, b->value);
    return v;
  });
  R.report(14, "determinism", [&] {
    // reduced sizes; every subcommand twice with the same seed
    const std::vector<std::pair<std::string, json>> small = {
        {"constants", json::object()},
        {"verify-coupling", {{"samples", 2000}, {"branch", {{"samples", 20000}}}}},
        {"verify-lemmas", {{"lemma24", {{"points", 100}}}}},
        {"contract", {{"samples", 2000}}},
        {"ula-bias", {{"replicas", 200}, {"T", 0.5}, {"h_over_h0", {0.25}}}},
        {"sgld-bias", {{"replicas", 200}, {"T", 0.5}}},
        {"weak-error", {{"replicas", 2000}}},
        {"mlmc-variance", {{"replicas", 200}, {"levels", 3}, {"T", 0.2}}},
        {"mlmc-complexity", {{"pilot_samples", 200}, {"eps", {0.2, 0.1, 0.05}}}},
        {"subsampling", json::object()},
    };
    std::size_t same = 0;
    std::string diff;
    for (const auto& [name, cfg] : small) {
      json c = cfg;
      c["seed"] = seed + 1;
      const auto a = csv_bodies(eb::run_experiment(name, c));
      const auto b = csv_bodies(eb::run_experiment(name, c));
      if (a == b) ++same;
      else diff += " " + name;
    }
    return Verdict{same == small.size(), std::to_string(same) + "/" + std::to_string(small.size()) +
                                             " subcommands byte-identical" + (diff.empty() ? "" : "; differ:" + diff)};
  });

  std::size_t passed = 0;
  for (const auto& r : R.results) passed += r.second;
  std::printf("acceptance: %zu/%zu criteria passed\n", passed, R.results.size());
  return passed == R.results.size() ? 0 : 1;
}
