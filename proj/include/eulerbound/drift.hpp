// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "eulerbound/linalg.hpp"
#include "eulerbound/rng.hpp"

namespace eb {

enum class DriftKind { OrnsteinUhlenbeck, TruncatedDoubleWell, FiniteSum };
enum class BaseDrift { Zero, OrnsteinUhlenbeck, TruncatedDoubleWell };

// component term  b_i(x) = weight * base(x) - slope * x + offset
struct Component {
  double weight = 0.0;
  double slope = 0.0;
  Vec offset;
};

struct DriftModel {
  DriftKind kind = DriftKind::OrnsteinUhlenbeck;
  std::size_t dim = 1;
  double lipschitz_L = 1.0;
  double contraction_K = 1.0;
  double radius_R = 0.0;
  double b_at_zero_norm = 0.0;
  // double-well parameters, used by TruncatedDoubleWell and by a double-well base
  double a_dw = 0.0;
  double n_dw = 0.0;
  BaseDrift base = BaseDrift::Zero;
  std::vector<Component> components;

  std::size_t m() const noexcept { return components.size(); }
};

std::string drift_kind_name(DriftKind k);

DriftModel make_ou(std::size_t dim = 1);
DriftModel make_double_well(double a_dw, double n, std::size_t dim, double L, double K, double R);
DriftModel make_finite_sum(BaseDrift base, double a_dw, double n, std::size_t dim, std::vector<Component> comps,
                           double L, double K, double R);

double double_well_1d(double x, double a_dw, double n) noexcept;

// throws Domain on non-finite input or dimension mismatch
void eval_drift_into(const DriftModel& model, std::span<const double> x, std::span<double> out);
Vec eval_drift(const DriftModel& model, std::span<const double> x);
Vec eval_component(const DriftModel& model, std::size_t i, std::span<const double> x);
void eval_base_into(const DriftModel& model, std::span<const double> x, std::span<double> out);

// ---- inaccurate drift -------------------------------------------------------

enum class Scheme { WithReplacement, WithoutReplacement };

struct InaccurateDrift {
  DriftModel base;
  Scheme scheme = Scheme::WithReplacement;
  std::size_t s = 1;
  double sigma = 0.0;
  double alpha = 1.0;
  double bar_L = 0.0;
  double bar_K = 0.0;
  double bar_R = 0.0;
  double L_u = 0.0;
  double alpha_c = 1.0;
};

// zero-based component indices; repetitions allowed only WithReplacement
using SubsampleDraw = std::vector<std::size_t>;

// b(x,U) = weight * base(x) - slope * x + offset
struct AffineCoeffs {
  double weight = 0.0;
  double slope = 0.0;
  Vec offset;
};

void validate_draw(const InaccurateDrift& model, const SubsampleDraw& u);
AffineCoeffs aggregate_draw(const InaccurateDrift& model, const SubsampleDraw& u);
Vec eval_inaccurate_drift(const InaccurateDrift& model, std::span<const double> x, const SubsampleDraw& u);
void eval_inaccurate_into(const InaccurateDrift& model, const AffineCoeffs& coeffs, std::span<const double> x,
                          std::span<double> out);
SubsampleDraw draw_subsample(const InaccurateDrift& model, const Stream& stream, std::uint64_t step,
                             std::uint32_t tg);
// allocation-free variants for hot loops; pool needs m entries, no validation
void draw_subsample_into(const InaccurateDrift& model, const Stream& stream, std::uint64_t step, std::uint32_t tg,
                         std::span<std::size_t> out, std::span<std::size_t> pool);
void aggregate_draw_into(const InaccurateDrift& model, std::span<const std::size_t> u, AffineCoeffs& out);
double subsampling_variance(const InaccurateDrift& model, std::span<const double> x);
bool is_full_sample(const InaccurateDrift& model) noexcept;

// ---- assumption constants ----------------------------------------------------

struct Lyapunov {
  double M1 = 0.0;
  double M2 = 0.0;
};

Lyapunov lyapunov_constants(const DriftModel& model);

struct GridSpec {
  std::size_t random_pairs = 10000;
  double box_radius = 50.0;
  std::uint64_t seed = 1;
  // dense 1-d pair scan on [-scan_radius, scan_radius]
  std::size_t scan_points = 2001;
  double scan_radius = 5.0;
};

struct AssumptionReport {
  double max_lipschitz_ratio = 0.0;
  // min over pairs with |x-y| > R of -<x-y, b(x)-b(y)>/|x-y|^2
  double min_contraction_ratio = 0.0;
  std::size_t pairs = 0;
  std::size_t far_pairs = 0;
  bool lipschitz_ok = false;
  bool contraction_ok = false;
  bool pass = false;
};

AssumptionReport verify_assumptions(const DriftModel& model, const GridSpec& grid);

// Fills L (scan maximum, or the analytic derivative bound for continuous wells),
// R for the requested K, and |b(0)|. For dim > 1 the coordinatewise model is
// lifted to K/2 and R*sqrt(2 d (K + L_plus)/K) with L_plus the one-sided slope bound.
DriftModel certify_constants(DriftModel model, double K, const GridSpec& grid);

// sigma from the variance over a grid and h range; L_u from the independent
// fine/coarse draw choice; bar constants equal the base ones for uniform weights
// and zero slopes
InaccurateDrift certify_inaccurate(const DriftModel& base, Scheme scheme, std::size_t s, double alpha,
                                   double h_max, const GridSpec& grid);

}  // namespace eb
