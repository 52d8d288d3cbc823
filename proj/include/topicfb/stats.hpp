// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <span>
#include <vector>

namespace topicfb {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

double mean(std::span<const double> x);
/// Unbiased (n - 1) sample variance.
double variance(std::span<const double> x);

/// Linearly interpolated quantile of the sample (Hyndman-Fan type 7).
double quantile(std::span<const double> x, double q);

/// Quantile at order-statistic position q (n + 1), interpolated and clamped
/// to the sample range (Hyndman-Fan type 6). Unlike type 7 it does not pull
/// extreme quantiles of a small sample toward the median.
double order_quantile(std::span<const double> x, double q);

/// Central percentile interval from order_quantile(), e.g. level 0.99 with
/// 200 values gives the ~1st and ~200th order statistics.
Interval percentile_interval(std::span<const double> x, double level);

double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace topicfb
