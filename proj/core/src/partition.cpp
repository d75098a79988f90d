#include "pmmap/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pmmap/errors.hpp"

namespace pmmap {

double invert_left_branch(double target, double theta, const MapParams& params) {
  double lo = 0.0, hi = kBranchPoint;
  if (target == 0.0) return 0.0;
  if (!(target > 0.0) || params.f1_left(hi, theta) < target)
    throw RootBracketError("f1(., theta) does not bracket target " + std::to_string(target) +
                           " on [0, 3/4] at theta=" + std::to_string(theta));
  // One fixed-point step from the target is already close for small x.
  double x = target / (1.0 + params.xpow(target) * params.u(target, theta));
  for (int it = 0; it < 200; ++it) {
    const double g = params.f1_left(x, theta) - target;
    if (g == 0.0) return x;
    if (g > 0.0) hi = x;
    else lo = x;
    double next = x - g / params.df1_dx_left(x, theta);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - x);
    x = next;
    if (step <= 4.0 * std::numeric_limits<double>::epsilon() * x || hi - lo <= 1e-300) break;
  }
  return x;
}

double boundary_x_along(std::span<const double> thetas, const MapParams& params) {
  double x = kBranchPoint;
  for (std::size_t k = thetas.size(); k-- > 0;) x = invert_left_branch(x, thetas[k], params);
  return x;
}

double boundary_x(std::int64_t n, double theta, const MapParams& params) {
  if (n < 0) throw std::invalid_argument("boundary level must be >= 0");
  if (n == 0) return kBranchPoint;
  if (!params.theta_dependent()) {
    double x = kBranchPoint;
    for (std::int64_t k = 0; k < n; ++k) x = invert_left_branch(x, 0.0, params);
    return x;
  }
  // Orbit angles of the given double; the x4 map acts exactly on its binary digits.
  std::vector<double> th(static_cast<std::size_t>(n));
  ThetaWord w = ThetaWord::from_double(wrap_unit(theta));
  for (std::int64_t k = 0; k < n; ++k) {
    th[static_cast<std::size_t>(k)] = w.value();
    w.shift(1, nullptr);
  }
  return boundary_x_along(th, params);
}

double boundary_y(std::int64_t n, double theta, const MapParams& params) {
  if (n < 1) throw std::invalid_argument("boundary_y needs n >= 1");
  return (boundary_x(n - 1, wrap_unit(4.0 * wrap_unit(theta)), params) + 3.0) / 4.0;
}

std::vector<double> boundary_sequence(std::int64_t n_max, const MapParams& params) {
  if (params.theta_dependent()) throw std::invalid_argument("boundary_sequence requires pert_amp = 0");
  std::vector<double> xs(static_cast<std::size_t>(n_max + 1));
  xs[0] = kBranchPoint;
  for (std::int64_t k = 1; k <= n_max; ++k)
    xs[static_cast<std::size_t>(k)] = invert_left_branch(xs[static_cast<std::size_t>(k - 1)], 0.0, params);
  return xs;
}

double BoundaryCurve::interpolate(double t) const {
  const std::size_t m = x.size();
  if (m == 0) return std::numeric_limits<double>::quiet_NaN();
  const double s = wrap_unit(t) * static_cast<double>(m);
  const auto i = static_cast<std::size_t>(s) % m;
  const double f = s - std::floor(s);
  return x[i] + f * (x[(i + 1) % m] - x[i]);
}

BoundaryCurve make_boundary_curve(std::int64_t n, const MapParams& params, int grid_points) {
  BoundaryCurve c;
  c.level = n;
  c.params_hash = params.hash();
  c.theta.resize(static_cast<std::size_t>(grid_points));
  c.x.resize(static_cast<std::size_t>(grid_points));
  const double flat = params.theta_dependent() ? 0.0 : boundary_x(n, 0.0, params);
  for (int i = 0; i < grid_points; ++i) {
    const double t = static_cast<double>(i) / grid_points;
    c.theta[static_cast<std::size_t>(i)] = t;
    c.x[static_cast<std::size_t>(i)] = params.theta_dependent() ? boundary_x(n, t, params) : flat;
  }
  return c;
}

std::uint64_t strip_index(ThetaWord theta, int k) {
  if (k <= 0) return 1;
  const int drop = 64 - 2 * k;
  std::uint64_t j = theta.bits >> drop;
  if (theta.bits & ((std::uint64_t{1} << drop) - 1)) ++j;
  return std::clamp<std::uint64_t>(j, 1, std::uint64_t{1} << (2 * k));
}

CellIndex cell_of(Point p, const MapParams& params, std::int64_t cap) {
  if (!in_domain_Y(p, params)) throw NotInYError("point is not in Y");
  const ThetaWord start = ThetaWord::from_double(p.theta);
  ThetaWord w = start;
  double x = p.x;
  std::int64_t n = 0;
  do {
    if (n >= cap) throw ReturnOverflowError(cap);
    x = params.f1(x, w.value());
    w.shift(1, nullptr);
    ++n;
  } while (x < kBranchPoint);
  CellIndex c;
  c.n = n;
  c.level = static_cast<int>(std::min<std::int64_t>(n, kMaxStripLevel));
  c.j = strip_index(start, c.level);
  return c;
}

std::int64_t return_time_from_curves(Point p, const MapParams& params, std::int64_t cap) {
  if (!in_domain_Y(p, params)) throw NotInYError("point is not in Y");
  // phi = n on [y_n, y_{n-1}); y_n decreases to 3/4.
  if (!params.theta_dependent()) {
    double x = kBranchPoint;  // x_{n-1}
    for (std::int64_t n = 1; n <= cap; ++n) {
      if (p.x >= (x + 3.0) / 4.0) return n;
      x = invert_left_branch(x, 0.0, params);
    }
    throw ReturnOverflowError(cap);
  }
  for (std::int64_t n = 1; n <= cap; ++n)
    if (p.x >= boundary_y(n, p.theta, params)) return n;
  throw ReturnOverflowError(cap);
}

namespace {

double simpson_periodic(int points, auto&& f) {
  int m = std::max(2, points);
  if (m % 2) ++m;
  const double h = 1.0 / m;
  double s = 0.0;
  for (int i = 0; i < m; ++i) s += ((i % 2) ? 4.0 : 2.0) * f(i * h);
  // f(0) = f(1): endpoint weights 1 + 1 merge into the i = 0 term.
  return s * h / 3.0;
}

}  // namespace

TailEstimate tail_measure(std::int64_t n, const MapParams& params, int quadrature_points, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("tail_measure needs n >= 1");
  TailEstimate t;
  if (!params.theta_dependent()) {
    t.value = 0.25 * boundary_x(n - 1, 0.0, params);
    return t;
  }
  if (n <= 12) {
    t.value = 0.25 * simpson_periodic(quadrature_points, [&](double th) { return boundary_x(n - 1, th, params); });
    return t;
  }
  // Random angles carry fresh digits all the way down the recursion.
  t.monte_carlo = true;
  const std::int64_t samples = std::max<std::int64_t>(64, std::int64_t{quadrature_points} * 16);
  std::vector<double> th(static_cast<std::size_t>(n - 1));
  double sum = 0.0, sum2 = 0.0;
  for (std::int64_t s = 0; s < samples; ++s) {
    BitSource bits(Philox(seed, derive_stream(0x7a11ull + static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(s))));
    ThetaWord w{bits.take(64)};
    for (auto& v : th) {
      v = w.value();
      w.shift(1, &bits);
    }
    const double x = boundary_x_along(th, params);
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / samples;
  const double var = std::max(0.0, sum2 / samples - mean * mean);
  t.value = 0.25 * mean;
  t.stderr_ = 0.25 * std::sqrt(var / (samples - 1));
  return t;
}

double leb_Y(const MapParams& params, int quadrature_points) {
  if (!params.theta_dependent()) return upper_boundary_X_max(params) - kBranchPoint;
  return simpson_periodic(quadrature_points, [&](double th) { return upper_boundary_X(th, params) - kBranchPoint; });
}

ReturnJacobian return_jacobian(Point p, const MapParams& params, BitSource* digits, std::int64_t cap) {
  if (!in_domain_Y(p, params)) throw NotInYError("point is not in Y");
  ReturnJacobian r;
  ThetaWord w = ThetaWord::from_double(p.theta);
  double x = p.x;
  double log_a = 0.0;
  double bs = 0.0;
  std::int64_t n = 0;
  do {
    if (n >= cap) throw ReturnOverflowError(cap);
    const double th = w.value();
    const Jacobian J = evaluate_jacobian({x, th}, params);
    // [[a,b],[0,4]] * [[A,B],[0,4^n]]: B/4^(n+1) = (a/4)(B/4^n) + b/4.
    bs = 0.25 * J.dx_dx * bs + 0.25 * J.dx_dtheta;
    log_a += std::log(J.dx_dx);
    x = params.f1(x, th);
    w.shift(1, digits);
    ++n;
  } while (x < kBranchPoint);
  r.n = n;
  r.a_entry = std::exp(log_a);
  r.b_scaled = bs;
  r.log_det = static_cast<double>(n) * std::log(4.0) + log_a;
  r.det = std::exp(r.log_det);
  r.b_entry = bs * std::exp(static_cast<double>(n) * std::log(4.0));
  return r;
}

namespace {

struct InverseChain {
  double y = 0.0;
  double log_a = 0.0;
};

// Pull (x', theta') back through the branch with digits d[0..n-1] (d[0] most significant).
InverseChain pull_back(double xp, std::span<const double> thetas, const MapParams& params) {
  // thetas[k] = angle at step k of the forward orbit, k = 0..n-1.
  const std::size_t n = thetas.size();
  double x = xp;
  double log_a = std::log(4.0);
  for (std::size_t k = n; k-- > 1;) {
    x = invert_left_branch(x, thetas[k], params);
    log_a += std::log(params.df1_dx_left(x, thetas[k]));
  }
  return {(x + 3.0) / 4.0, log_a};
}

void branch_angles(std::span<const int> digits, double theta_landing, std::vector<double>& out) {
  const std::size_t n = digits.size();
  out.resize(n);
  double t = theta_landing;
  for (std::size_t k = n; k-- > 0;) {
    t = (digits[k] + t) / 4.0;
    out[k] = t;
  }
}

// Largest x' in F(a) at this landing angle.
double image_top(std::span<const double> thetas, const MapParams& params) {
  if (thetas.size() == 1) return 4.0 * upper_boundary_X(thetas[0], params) - 3.0;
  return params.f1_left(kBranchPoint, thetas.back());
}

}  // namespace

ExpansionDistortionReport verify_expansion_distortion(const MapParams& params, std::int64_t sample_count,
                                                      const ExpansionDistortionSettings& s) {
  ExpansionDistortionReport rep;
  rep.n_values.resize(static_cast<std::size_t>(s.n_max));
  rep.max_distortion.assign(static_cast<std::size_t>(s.n_max), 0.0);
  rep.samples_per_n.assign(static_cast<std::size_t>(s.n_max), 0);
  for (int n = 1; n <= s.n_max; ++n) rep.n_values[static_cast<std::size_t>(n - 1)] = n;

  std::vector<int> digits;
  std::vector<double> th1, th2;
  for (std::int64_t i = 0; i < sample_count; ++i) {
    const int n = 1 + static_cast<int>(i % s.n_max);
    Philox rng(s.seed, derive_stream(0xa11ce, static_cast<std::uint64_t>(i)));
    digits.resize(static_cast<std::size_t>(n));
    for (auto& d : digits) d = static_cast<int>(rng() >> 62);

    double xp1 = 0, tp1 = 0, xp2 = 0, tp2 = 0;
    for (int attempt = 0;; ++attempt) {
      tp1 = s.eps0 + (1.0 - 2.0 * s.eps0) * rng.uniform();
      branch_angles(digits, tp1, th1);
      xp1 = kBranchPoint + (image_top(th1, params) - kBranchPoint) * rng.uniform();
      const double r = s.eps0 * (1e-3 + (1.0 - 1e-3) * rng.uniform());
      const double ang = 2.0 * std::numbers::pi * rng.uniform();
      xp2 = xp1 + r * std::cos(ang);
      tp2 = tp1 + r * std::sin(ang);
      if (tp2 < 0.0 || tp2 >= 1.0) continue;
      branch_angles(digits, tp2, th2);
      if (xp2 >= kBranchPoint && xp2 <= image_top(th2, params)) break;
      if (attempt > 1000) throw std::runtime_error("could not place a pair inside the branch image");
    }
    const auto z1 = pull_back(xp1, th1, params);
    const auto z2 = pull_back(xp2, th2, params);
    const double dxp = xp1 - xp2, dtp = tp1 - tp2;
    const double dist_img = std::hypot(dxp, dtp);
    const double dist_pre = std::hypot(z1.y - z2.y, dtp / std::pow(4.0, n));
    const double ratio = dist_pre / dist_img;
    rep.max_contraction = std::max(rep.max_contraction, ratio);
    if (ratio > s.lambda) ++rep.violations;
    // JF^-1 = 1 / (4^n A); the 4^n cancels in the ratio.
    const double c = std::abs(z1.log_a - z2.log_a) / dist_img;
    auto& m = rep.max_distortion[static_cast<std::size_t>(n - 1)];
    m = std::max(m, c);
    ++rep.samples_per_n[static_cast<std::size_t>(n - 1)];
    ++rep.pairs;
  }
  return rep;
}

double boundary_x_landing(std::int64_t n, std::uint64_t branch_digits_seed, double theta_landing,
                          const MapParams& params) {
  if (n == 0) return kBranchPoint;
  Philox rng(branch_digits_seed, static_cast<std::uint64_t>(n));
  std::vector<int> digits(static_cast<std::size_t>(n));
  for (auto& d : digits) d = static_cast<int>(rng() >> 62);
  std::vector<double> th;
  branch_angles(digits, theta_landing, th);
  return boundary_x_along(th, params);
}

SlopeBoundReport slope_bound_check(const MapParams& params, std::int64_t n_max, int branches, int theta_points,
                                   std::uint64_t seed) {
  SlopeBoundReport rep;
  for (std::int64_t n = 1; n <= n_max;) {
    rep.levels.push_back(n);
    n = (n < 10) ? n + 1 : std::max(n + 1, static_cast<std::int64_t>(std::llround(n * 1.25)));
    if (n > n_max && rep.levels.back() != n_max) n = n_max;
  }
  const double h = 1e-4;
  for (std::int64_t n : rep.levels) {
    double mx = 0.0;
    for (int b = 0; b < branches; ++b) {
      const std::uint64_t bseed = derive_stream(seed, static_cast<std::uint64_t>(b));
      for (int i = 0; i < theta_points; ++i) {
        const double t = (i + 0.5) / theta_points;
        const double lo = wrap_unit(t - h), hi = wrap_unit(t + h);
        const double d = (boundary_x_landing(n, bseed, hi, params) - boundary_x_landing(n, bseed, lo, params)) / (2 * h);
        mx = std::max(mx, std::abs(d));
      }
    }
    rep.per_level_max.push_back(mx);
    rep.max_slope = std::max(rep.max_slope, mx);
  }
  rep.flagged = rep.max_slope >= kSlopeBound;
  rep.fit_lo = std::max<std::int64_t>(1, n_max / 4);
  rep.fit_hi = n_max;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < rep.levels.size(); ++i) {
    if (rep.levels[i] < rep.fit_lo || rep.per_level_max[i] <= 0.0) continue;
    const double lx = std::log(static_cast<double>(rep.levels[i])), ly = std::log(rep.per_level_max[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    ++m;
  }
  rep.fitted_loglog_slope = (m >= 2) ? (m * sxy - sx * sy) / (m * sxx - sx * sx)
                                     : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

}  // namespace pmmap
