// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eulerbound/drift.hpp"

namespace eb {

struct C0Report {
  double first_integral = 0.0;
  double second_integral = 0.0;
  double first_error = 0.0;
  double second_error = 0.0;
  double c0 = 0.0;
};

// cached after the first call
const C0Report& c0_report();
double compute_c0();

struct MomentInputs {
  double EX0_sq = 0.0;
  double EY0_sq = 0.0;
  std::size_t d = 1;
  // E|X^c_0|^2 for the MLMC constants; defaults to EX0_sq
  std::optional<double> EXc0_sq;
};

struct InaccurateExtras {
  double sigma = 0.0;
  double alpha = 1.0;
  double bar_L = 0.0;
  double bar_K = 0.0;
  double bar_R = 0.0;
  double L_u = 0.0;
  double alpha_c = 1.0;
};

InaccurateExtras extras_from(const InaccurateDrift& model);

struct InaccurateLedger {
  double C_IEul = 0.0;
  double C_Iult = 0.0;
  double C_IEul_2h = 0.0;
  double C_ISM = 0.0;
  double C_IASP = 0.0;
  double C_IMLdif = 0.0;
  double C_IMLult = 0.0;
};

struct ContractionLedger {
  double L = 0.0, K = 0.0, R = 0.0, b0 = 0.0;
  std::size_t d = 1;
  double EX0_sq = 0.0, EY0_sq = 0.0;

  double c0 = 0.0, c0_first = 0.0, c0_second = 0.0;
  std::array<double, 6> h0_terms{};
  double h0 = 0.0, r1 = 0.0, r2 = 0.0, a = 0.0;
  std::array<double, 4> c_terms{};
  double c = 0.0, A = 0.0;
  double q = 0.0, r1_1 = 0.0, h0_1 = 0.0, c1 = 0.0;
  double M1 = 0.0, M2 = 0.0, C_SDE = 0.0, C_Eul = 0.0, C_dif = 0.0, C_ult = 0.0;

  std::optional<InaccurateExtras> extras;
  std::optional<InaccurateLedger> inaccurate;

  // default coupling parameters of the contraction theorem
  double default_m() const;
  double default_H() const { return r1; }
};

ContractionLedger build_ledger(const DriftModel& model, const std::optional<InaccurateExtras>& extras,
                               const MomentInputs& moments);

std::vector<std::pair<std::string, double>> ledger_entries(const ContractionLedger& ledger);

struct DistanceValue {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

class DistanceFn {
 public:
  enum class Shape { ConvexAtInfinity, ConcaveAffine };

  static DistanceFn convex_at_infinity(double a, double r2);
  static DistanceFn concave_affine(double q, double r1_1);

  Shape shape() const noexcept { return shape_; }
  double rate() const noexcept { return rate_; }
  double knot() const noexcept { return knot_; }

  DistanceValue eval(double r) const;
  double operator()(double r) const { return eval(r).value; }

 private:
  DistanceFn(Shape s, double rate, double knot);
  Shape shape_;
  double rate_;
  double knot_;
  double knot_value_;
  double knot_slope_;
};

DistanceValue eval_distance(const DistanceFn& fn, double r);
DistanceFn distance_f(const ContractionLedger& ledger);
DistanceFn distance_f1(const ContractionLedger& ledger);

enum class BoundKind { ULA_W2, ULA_W1, SG_W2, SG_W1, MLMC_VAR };

std::string bound_kind_name(BoundKind k);

// supremum of admissible h (the ranges are open on the right)
double admissible_ceiling(BoundKind kind, const ContractionLedger& ledger);

// initial is E f(|X0 - Y0|) (E f1 for ULA_W1)
double theorem_bound(BoundKind kind, const ContractionLedger& ledger, double h, std::uint64_t k, double initial);

struct VaryingStepRecord {
  double contraction_product = 1.0;  // prod (1 - c h_l)
  double accumulated = 0.0;          // sum of h_j^{3/2} times the later factors
  double ef_bound = 0.0;             // product * Ef0 + C_ult * accumulated
  double w2_bound = 0.0;
};

// one record per prefix of the schedule (index 0 is the empty prefix)
std::vector<VaryingStepRecord> varying_step_bound(const ContractionLedger& ledger, std::span<const double> schedule,
                                                  double initial);

}  // namespace eb
