#include "pmmap/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pmmap::stats {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("linear_fit: size mismatch");
  LinearFit f;
  f.points = x.size();
  if (x.size() < 2) {
    f.slope = f.intercept = f.r2 = kNaN;
    return f;
  }
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double sse = std::max(0.0, syy - f.slope * sxy);
  f.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
  f.slope_stderr = x.size() > 2 ? std::sqrt(sse / (n - 2) / sxx) : kNaN;
  return f;
}

LinearFit loglog_fit(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] == 0.0 || x[i] <= 0.0) continue;
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(std::abs(y[i])));
  }
  return linear_fit(lx, ly);
}

double fixed_slope_intercept(std::span<const double> x, std::span<const double> y, double slope) {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += y[i] - slope * x[i];
  return s / static_cast<double>(x.size());
}

double mean(std::span<const double> v) {
  if (v.empty()) return kNaN;
  double s = 0;
  for (double a : v) s += a;
  return s / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
  if (v.size() < 2) return kNaN;
  const double m = mean(v);
  double s = 0;
  for (double a : v) s += (a - m) * (a - m);
  return s / static_cast<double>(v.size() - 1);
}

double stderr_of_mean(std::span<const double> v) {
  return std::sqrt(variance(v) / static_cast<double>(v.size()));
}

double batch_means_stderr(std::span<const double> v, int batches) {
  const std::size_t len = v.size() / static_cast<std::size_t>(batches);
  if (batches < 2 || len == 0) return kNaN;
  std::vector<double> b(static_cast<std::size_t>(batches));
  for (int k = 0; k < batches; ++k) b[static_cast<std::size_t>(k)] = mean(v.subspan(k * len, len));
  return stderr_of_mean(b);
}

double skewness(std::span<const double> v) {
  if (v.size() < 3) return kNaN;
  const double m = mean(v);
  double m2 = 0, m3 = 0;
  for (double a : v) {
    const double d = a - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  const double n = static_cast<double>(v.size());
  m2 /= n;
  m3 /= n;
  return m2 > 0 ? m3 / std::pow(m2, 1.5) : 0.0;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return kNaN;
  const double h = (static_cast<double>(v.size()) - 1) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  if (lo + 1 >= v.size()) return a;
  const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  return a + (h - static_cast<double>(lo)) * (b - a);
}

double iqr(std::span<const double> v) {
  std::vector<double> c(v.begin(), v.end());
  return quantile(c, 0.75) - quantile(c, 0.25);
}

double hill(std::span<const double> v, double tail_fraction) {
  std::vector<double> pos;
  for (double a : v)
    if (a > 0) pos.push_back(a);
  const auto k = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(v.size())));
  if (k < 2 || k >= pos.size()) return kNaN;
  std::nth_element(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(k), pos.end(), std::greater<>());
  const double threshold = pos[k];
  double s = 0;
  for (std::size_t i = 0; i < k; ++i) s += std::log(pos[i] / threshold);
  return static_cast<double>(k) / s;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

double ks_distance(std::vector<double> v, double mu, double sigma) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = sigma > 0 ? normal_cdf((v[i] - mu) / sigma) : (v[i] >= mu ? 1.0 : 0.0);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

}  // namespace

NormalFit ks_normal(std::span<const double> v) {
  NormalFit f;
  f.mean = mean(v);
  f.sigma = std::sqrt(variance(v));
  f.ks = ks_distance({v.begin(), v.end()}, f.mean, f.sigma);
  return f;
}

NormalFit ks_centered_normal(std::span<const double> v) {
  NormalFit f;
  double s = 0;
  for (double a : v) s += a * a;
  f.sigma = std::sqrt(s / static_cast<double>(v.size()));
  f.ks = ks_distance({v.begin(), v.end()}, 0.0, f.sigma);
  return f;
}

Interval wilson(std::int64_t successes, std::int64_t trials, double z) {
  if (trials <= 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z / (1 + z2 / n) * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

MannKendall mann_kendall(std::span<const double> v) {
  MannKendall r;
  const std::size_t n = v.size();
  if (n < 3) return r;
  double s = 0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) s += (v[j] > v[i]) - (v[j] < v[i]);
  // tie correction
  std::vector<double> c(v.begin(), v.end());
  std::sort(c.begin(), c.end());
  double ties = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && c[j] == c[i]) ++j;
    const double t = static_cast<double>(j - i);
    ties += t * (t - 1) * (2 * t + 5);
    i = j;
  }
  const double nn = static_cast<double>(n);
  const double var = (nn * (nn - 1) * (2 * nn + 5) - ties) / 18.0;
  r.s = s;
  r.z = s > 0 ? (s - 1) / std::sqrt(var) : s < 0 ? (s + 1) / std::sqrt(var) : 0.0;
  r.p_up = 1.0 - normal_cdf(r.z);
  r.p_two = 2.0 * (1.0 - normal_cdf(std::abs(r.z)));
  return r;
}

double sign_test_increases(std::span<const double> v) {
  if (v.size() < 2) return 1.0;
  const auto m = static_cast<int>(v.size() - 1);
  int up = 0;
  for (std::size_t i = 1; i < v.size(); ++i) up += v[i] > v[i - 1];
  // P(Bin(m, 1/2) >= up)
  double p = 0;
  for (int k = up; k <= m; ++k) p += std::exp(std::lgamma(m + 1) - std::lgamma(k + 1) - std::lgamma(m - k + 1) - m * std::log(2.0));
  return std::min(1.0, p);
}

}  // namespace pmmap::stats
