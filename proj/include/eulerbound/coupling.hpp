// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <span>

#include "eulerbound/drift.hpp"
#include "eulerbound/linalg.hpp"

namespace eb {

enum class Branch { Merged, Reflected, Synchronous };

const char* branch_name(Branch b) noexcept;

// m and H may be +infinity (untruncated mirror coupling)
struct CouplingParams {
  double h = 0.0;
  double m = std::numeric_limits<double>::infinity();
  double H = std::numeric_limits<double>::infinity();
};

void validate_params(const CouplingParams& p);

struct CouplingOutcome {
  Vec x_next;
  Vec y_next;
  Branch branch = Branch::Synchronous;
  double r_hat = 0.0;
};

// u - 2<e,u>e with e = (x_hat - y_hat)/|x_hat - y_hat|
Vec reflect(std::span<const double> x_hat, std::span<const double> y_hat, std::span<const double> u);

// Gaussian step coupling from post-drift points; allocation free.
Branch couple_from_hat(std::span<const double> x_hat, std::span<const double> y_hat, const CouplingParams& p,
                       std::span<const double> z, double zeta, std::span<double> x_next, std::span<double> y_next);

// 1-d specialisation used in hot loops; same branching as couple_from_hat with d = 1
Branch couple_from_hat_1d(double x_hat, double y_hat, const CouplingParams& p, double z, double zeta,
                          double& x_next, double& y_next) noexcept;

CouplingOutcome truncated_mirror_step(std::span<const double> x, std::span<const double> y, const DriftModel& drift,
                                      const CouplingParams& p, std::span<const double> z, double zeta);

CouplingOutcome inaccurate_truncated_mirror_step(std::span<const double> x, std::span<const double> y,
                                                 const InaccurateDrift& drift, const SubsampleDraw& u,
                                                 const CouplingParams& p, std::span<const double> z, double zeta);

}  // namespace eb
