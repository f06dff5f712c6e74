// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "eulerbound/drift.hpp"

namespace eb {

// All oracles work in the 1-d reduction x_hat = 0, y_hat = r_hat, X' = t with t ~ N(0, h).

// E[R'] - r_hat by piecewise adaptive quadrature; with_merge = false drops the
// merge branch (always-reflect control). m may be +infinity.
double quadrature_first_moment(double r_hat, double h, double m, bool with_merge = true);

struct SecondMomentLower {
  double lhs = 0.0;
  double alpha_bar = 0.0;
  double interval_lo = 0.0;
  double interval_hi = 0.0;
};

// lhs = E[(R' - r_hat)^2 1{R' in I}], alpha_bar = c0 min(sqrt h, r_hat) sqrt h / 2; requires h <= 4 m^2
SecondMomentLower quadrature_second_moment_lower(double r_hat, double h, double m);

struct BranchProbabilities {
  double merge = 0.0;
  double reflect = 0.0;
  double sync = 0.0;
};

BranchProbabilities branch_probabilities(double r_hat, double h, double m, double H);

struct SubsampleMoments {
  double mean_norm = 0.0;  // |E b(x,U)| for convenience
  Vec mean;
  double variance = 0.0;   // E|b(x,U) - E b(x,U)|^2
  std::size_t draws = 0;
};

// exhaustive over m^s ordered tuples (with replacement) or C(m,s) subsets (without); m <= 8
SubsampleMoments enumerate_subsampling(const InaccurateDrift& model, std::span<const double> x);

}  // namespace eb
