#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pmmap::stats {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_stderr = 0.0;
  std::size_t points = 0;
};

LinearFit linear_fit(std::span<const double> x, std::span<const double> y);
// Fit of log|y| against log x; points with y == 0 are skipped.
LinearFit loglog_fit(std::span<const double> x, std::span<const double> y);
// Least squares for the intercept only, slope held fixed.
double fixed_slope_intercept(std::span<const double> x, std::span<const double> y, double slope);

double mean(std::span<const double> v);
double variance(std::span<const double> v);  // unbiased
double stderr_of_mean(std::span<const double> v);
// Batch-means standard error for a correlated series.
double batch_means_stderr(std::span<const double> v, int batches = 32);
double skewness(std::span<const double> v);
// Linear interpolation between order statistics (type 7). v need not be sorted.
double quantile(std::vector<double> v, double q);
double iqr(std::span<const double> v);

// Hill estimator of the right-tail index from the k = ceil(fraction * N) largest positive values.
double hill(std::span<const double> v, double tail_fraction);

struct NormalFit {
  double mean = 0.0;
  double sigma = 0.0;
  double ks = 0.0;
};
// Kolmogorov-Smirnov distance to the normal with the sample mean and standard deviation.
NormalFit ks_normal(std::span<const double> v);
// Same, with the normal centred at 0 and sigma from the second moment.
NormalFit ks_centered_normal(std::span<const double> v);
double normal_cdf(double z);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};
Interval wilson(std::int64_t successes, std::int64_t trials, double z = 1.959963984540054);

struct MannKendall {
  double s = 0.0;
  double z = 0.0;
  double p_up = 1.0;  // one-sided p-value for an increasing trend
  double p_two = 1.0;
  bool upward(double level = 0.05) const { return p_up < level; }
};
MannKendall mann_kendall(std::span<const double> v);

// Sign test for a nonincreasing sequence: p-value of seeing this many increases under a fair coin.
double sign_test_increases(std::span<const double> v);

}  // namespace pmmap::stats
