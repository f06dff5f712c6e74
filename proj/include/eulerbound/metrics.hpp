// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "eulerbound/linalg.hpp"

namespace eb {

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double se = 0.0;        // standard error of the mean
};

Summary summarize(std::span<const double> v);

// Empirical W_p between two 1-d samples through the sorted coupling. When the
// sizes differ the larger sample is reduced to the smaller size by taking its
// order statistics at the mid-quantiles (i + 1/2)/n of the smaller one.
double w_p_1d(std::span<const double> a, std::span<const double> b, int p);

// Exact empirical W_p for equal-size point clouds by minimum-cost matching
// (Hungarian algorithm). Points are rows of length dim; n <= 512.
double w_p_assignment(std::span<const double> a, std::span<const double> b, std::size_t dim, int p);

inline constexpr std::size_t kAssignmentCap = 512;

// Mean of 1-d sorted W_p over random unit directions; a lower bound on W_p.
double w_p_projected(std::span<const double> a, std::span<const double> b, std::size_t dim, int p,
                     std::size_t directions, std::uint64_t seed);

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

// 200-resample bootstrap of w_p_1d with both samples resampled independently
Estimate w_p_1d_bootstrap(std::span<const double> a, std::span<const double> b, int p, std::size_t resamples = 200,
                          std::uint64_t seed = 1);

// Same for a statistic of paired per-replica values (e.g. coupled distances)
Estimate bootstrap_mean_pow(std::span<const double> v, int p, std::size_t resamples = 200, std::uint64_t seed = 1);

// W_p between a 1-d sample and a continuous law given by its quantile function,
// with the law's quantiles taken at the mid-points (i + 1/2)/n
double w_p_1d_to_law(std::span<const double> a, const std::function<double(double)>& quantile, int p);
Estimate w_p_1d_to_law_bootstrap(std::span<const double> a, const std::function<double(double)>& quantile, int p,
                                 std::size_t resamples = 200, std::uint64_t seed = 1);

double normal_quantile(double u, double mean, double sd);

struct KsResult {
  double statistic = 0.0;
  double critical = 0.0;
  double p_value = 1.0;
  bool pass = true;
};

double normal_cdf(double x, double mean, double variance);

// asymptotic Kolmogorov tail P(sqrt(n) D > lambda)
double kolmogorov_tail(double lambda);

KsResult ks_one_sample(std::span<const double> a, const std::function<double(double)>& cdf, double level = 1e-3);
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b, double level = 1e-3);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double se = 0.0;
};

struct RatePoint {
  double h = 0.0;
  double value = 0.0;
};

RateFit rate_fit(std::span<const RatePoint> points);

}  // namespace eb
