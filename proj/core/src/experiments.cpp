#include "pmmap/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pmmap/errors.hpp"
#include "pmmap/parallel.hpp"

namespace pmmap {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

OrbitState lebesgue_M(Philox& g) {
  OrbitState s;
  s.x = g.uniform();
  s.w.bits = g();
  return s;
}

std::int64_t grid_max(const std::vector<std::int64_t>& grid) {
  if (grid.empty()) throw ConfigError("n_grid", "empty grid");
  if (!std::is_sorted(grid.begin(), grid.end()) || grid.front() < 1)
    throw ConfigError("n_grid", "must be increasing and positive");
  return grid.back();
}

// v_n at each grid point along one orbit.
template <class Fn>
void birkhoff_grid(OrbitState s, const ObservableSpec& v, const MapParams& params, BitSource& digits,
                   const std::vector<std::int64_t>& grid, Fn&& record) {
  double sum = 0.0;
  std::size_t g = 0;
  for (std::int64_t k = 1; g < grid.size(); ++k) {
    sum += v(s.point());
    step(s, params, &digits);
    if (k == grid[g]) record(g++, sum);
  }
}

std::vector<OrbitState> starts_for(StartDistribution start, std::int64_t count, const MapParams& params,
                                   std::uint64_t seed, int threads) {
  if (start == StartDistribution::invariant) return sample_invariant_states(count, params, seed, threads);
  std::vector<OrbitState> out(static_cast<std::size_t>(count));
  Philox g(seed, derive_stream(0x5ea, 0));
  for (auto& s : out) s = lebesgue_M(g);
  return out;
}

}  // namespace

double ObservableSpec::i_v() const {
  double r = 0.0;
  switch (kind) {
    case ObservableKind::indicator_rect:
      r = x_lo <= 0.0 && x_hi > 0.0 ? theta_hi - theta_lo : 0.0;
      break;
    case ObservableKind::smooth_trig:
      r = c;
      break;
    case ObservableKind::custom_grid:
      for (int it = 0; it < grid_theta; ++it) r += grid[static_cast<std::size_t>(it)];
      r /= grid_theta;
      break;
  }
  return mean_corrected ? r - mean : r;
}

double ObservableSpec::sup_norm() const {
  const double m = mean_corrected ? mean : 0.0;
  switch (kind) {
    case ObservableKind::indicator_rect:
      return std::max(std::abs(1.0 - m), std::abs(m));
    case ObservableKind::smooth_trig: {
      // bound over x in [0,1]
      const double amp = std::hypot(ccos, csin);
      return std::max(std::abs(c - m) + amp, std::abs(c + cx - m) + amp);
    }
    case ObservableKind::custom_grid: {
      double s = 0.0;
      for (double g : grid) s = std::max(s, std::abs(g - m));
      return s;
    }
  }
  return 0.0;
}

bool ObservableSpec::supported_in_Y() const {
  if (mean_corrected && mean != 0.0) return false;
  switch (kind) {
    case ObservableKind::indicator_rect:
      return x_lo >= kBranchPoint;
    case ObservableKind::smooth_trig:
      return c == 0.0 && cx == 0.0 && ccos == 0.0 && csin == 0.0;
    case ObservableKind::custom_grid:
      for (int ix = 0; ix < grid_x; ++ix) {
        if (static_cast<double>(ix + 1) / grid_x <= kBranchPoint)
          for (int it = 0; it < grid_theta; ++it)
            if (grid[static_cast<std::size_t>(ix * grid_theta + it)] != 0.0) return false;
      }
      return true;
  }
  return false;
}

void ObservableSpec::validate() const {
  switch (kind) {
    case ObservableKind::indicator_rect:
      if (!(0.0 <= x_lo && x_lo < x_hi && x_hi <= 1.0)) throw ConfigError("x_lo", "indicator x-range must satisfy 0 <= x_lo < x_hi <= 1");
      if (!(0.0 <= theta_lo && theta_lo < theta_hi && theta_hi <= 1.0))
        throw ConfigError("theta_lo", "indicator theta-range must satisfy 0 <= lo < hi <= 1");
      break;
    case ObservableKind::smooth_trig:
      if (!std::isfinite(c) || !std::isfinite(cx) || !std::isfinite(ccos) || !std::isfinite(csin))
        throw ConfigError("c", "coefficients must be finite");
      break;
    case ObservableKind::custom_grid:
      if (grid_x < 1 || grid_theta < 1 || grid.size() != static_cast<std::size_t>(grid_x) * static_cast<std::size_t>(grid_theta))
        throw ConfigError("grid", "size must equal grid_x * grid_theta");
      break;
  }
}

ObservableSpec default_observable() { return {}; }

ObservableSpec indicator_rect(double x_lo, double x_hi, double theta_lo, double theta_hi) {
  ObservableSpec v;
  v.kind = ObservableKind::indicator_rect;
  v.x_lo = x_lo;
  v.x_hi = x_hi;
  v.theta_lo = theta_lo;
  v.theta_hi = theta_hi;
  return v;
}

ObservableSpec constant_observable(double value) {
  ObservableSpec v;
  v.c = value;
  v.cx = v.ccos = v.csin = 0.0;
  return v;
}

ObservableSpec with_mean(ObservableSpec v, double mean) {
  v.mean_corrected = true;
  v.mean = mean;
  return v;
}

MeanEstimate mean_by_orbit(const ObservableSpec& v, const MapParams& params, std::int64_t orbits, std::int64_t length,
                           std::int64_t burn_in, std::uint64_t seed, int threads) {
  std::vector<double> means(static_cast<std::size_t>(orbits));
  parallel_for(orbits, threads, [&](std::int64_t i) {
    BitSource digits(Philox(seed, derive_stream(0x3ea, static_cast<std::uint64_t>(i))));
    OrbitState s = lebesgue_M(digits.generator());
    for (std::int64_t k = 0; k < burn_in; ++k) step(s, params, &digits);
    double sum = 0.0;
    for (std::int64_t k = 0; k < length; ++k) {
      sum += v(s.point());
      step(s, params, &digits);
    }
    means[static_cast<std::size_t>(i)] = sum / static_cast<double>(length);
  });
  return {stats::mean(means), orbits > 1 ? stats::stderr_of_mean(means) : kNaN};
}

double mean_by_density(const ObservableSpec& v, const DensityEstimate& density, const MapParams& params, int sub) {
  const auto avg = cell_average(density.mesh, params, v.function(), sub);
  double s = 0.0;
  for (std::size_t c = 0; c < avg.size(); ++c) s += avg[c] * density.mass[c];
  return s / density.total_mass();
}

CorrelationSeries correlation_mc(const ObservableSpec& v, const ObservableSpec& w, const MapParams& params,
                                 const CorrelationMcOptions& opt) {
  const auto L = static_cast<std::size_t>(opt.n_max + 1);
  const auto orbits = static_cast<std::size_t>(opt.n_orbits);
  struct Partial {
    std::vector<double> lag;  // sum v_k w_{k+n}
    std::vector<double> cnt;
    double sv = 0.0, sw = 0.0, n = 0.0;
  };
  std::vector<Partial> parts(orbits);
  parallel_for(opt.n_orbits, opt.threads, [&](std::int64_t i) {
    BitSource digits(Philox(opt.seed, derive_stream(0xc0, static_cast<std::uint64_t>(i))));
    OrbitState s = lebesgue_M(digits.generator());
    for (std::int64_t k = 0; k < opt.burn_in; ++k) step(s, params, &digits);
    Partial& p = parts[static_cast<std::size_t>(i)];
    p.lag.assign(L, 0.0);
    p.cnt.assign(L, 0.0);
    std::vector<double> ring(L, 0.0);
    for (std::int64_t k = 0; k < opt.orbit_len; ++k) {
      const Point q = s.point();
      const double vk = v(q), wk = w(q);
      const auto slot = static_cast<std::size_t>(k) % L;
      ring[slot] = vk;
      p.sv += vk;
      p.sw += wk;
      const std::size_t lags = std::min<std::size_t>(L, static_cast<std::size_t>(k) + 1);
      if (wk != 0.0) {
        for (std::size_t n = 0; n < lags; ++n) p.lag[n] += ring[(slot + L - n) % L] * wk;
      }
      step(s, params, &digits);
    }
    for (std::size_t n = 0; n < L; ++n) p.cnt[n] = static_cast<double>(std::max<std::int64_t>(0, opt.orbit_len - static_cast<std::int64_t>(n)));
    p.n = static_cast<double>(opt.orbit_len);
  });

  auto estimate = [&](const std::vector<std::size_t>& pick, std::vector<double>& rho) {
    std::vector<double> lag(L, 0.0), cnt(L, 0.0);
    double sv = 0, sw = 0, n = 0;
    for (auto i : pick) {
      const Partial& p = parts[i];
      for (std::size_t k = 0; k < L; ++k) lag[k] += p.lag[k], cnt[k] += p.cnt[k];
      sv += p.sv;
      sw += p.sw;
      n += p.n;
    }
    rho.resize(L);
    for (std::size_t k = 0; k < L; ++k) rho[k] = lag[k] / cnt[k] - (sv / n) * (sw / n);
  };

  std::vector<std::size_t> all(orbits);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<double> rho;
  estimate(all, rho);

  std::vector<double> s1(L, 0.0), s2(L, 0.0);
  Philox g(opt.seed, derive_stream(0xb00, 0));
  std::vector<std::size_t> pick(orbits);
  std::vector<double> r;
  for (int b = 0; b < opt.bootstrap; ++b) {
    for (auto& i : pick) i = static_cast<std::size_t>(g.uniform() * static_cast<double>(orbits));
    estimate(pick, r);
    for (std::size_t k = 0; k < L; ++k) s1[k] += r[k], s2[k] += r[k] * r[k];
  }

  CorrelationSeries out;
  out.method = SeriesMethod::monte_carlo;
  for (std::size_t n = 1; n < L; ++n) {
    out.n_values.push_back(static_cast<std::int64_t>(n));
    out.rho.push_back(rho[n]);
    const double B = opt.bootstrap;
    out.stderr_.push_back(opt.bootstrap > 1 ? std::sqrt(std::max(0.0, (s2[n] - s1[n] * s1[n] / B) / (B - 1))) : kNaN);
  }
  return out;
}

CorrelationSeries correlation_by_operator(const ObservableSpec& v, const ObservableSpec& w, const MapParams& params,
                                          const UlamOperator& op_f, const DensityEstimate& density,
                                          std::int64_t n_max) {
  const auto vc = cell_average(op_f.mesh, params, v.function());
  const auto wc = cell_average(op_f.mesh, params, w.function());
  CorrelationSeries out;
  out.method = SeriesMethod::operator_based;
  out.rho = correlation_operator(op_f, density, vc, wc, n_max);
  for (std::int64_t n = 1; n <= n_max; ++n) out.n_values.push_back(n);
  out.stderr_.assign(out.rho.size(), 0.0);
  return out;
}

void set_resolution_error(CorrelationSeries& fine, const CorrelationSeries& coarse) {
  fine.stderr_.assign(fine.rho.size(), kNaN);
  for (std::size_t i = 0; i < fine.rho.size() && i < coarse.rho.size(); ++i)
    fine.stderr_[i] = std::abs(fine.rho[i] - coarse.rho[i]);
}

stats::LinearFit fit_decay_exponent(const CorrelationSeries& s, std::int64_t n_lo, std::int64_t n_hi) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < s.n_values.size(); ++i) {
    const auto n = s.n_values[i];
    if (n < n_lo || n > n_hi) continue;
    const double se = i < s.stderr_.size() ? s.stderr_[i] : 0.0;
    if (!(std::abs(s.rho[i]) > 3.0 * se) || s.rho[i] == 0.0) throw WindowTooNoisy(n, s.rho[i], se);
    x.push_back(static_cast<double>(n));
    y.push_back(s.rho[i]);
  }
  return stats::loglog_fit(x, y);
}

double pinned_decay_constant(const CorrelationSeries& s, std::int64_t n_lo, std::int64_t n_hi, double exponent) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < s.n_values.size(); ++i) {
    const auto n = s.n_values[i];
    if (n < n_lo || n > n_hi || s.rho[i] == 0.0) continue;
    x.push_back(std::log(static_cast<double>(n)));
    y.push_back(std::log(std::abs(s.rho[i])));
  }
  if (x.empty()) return kNaN;
  return std::exp(stats::fixed_slope_intercept(x, y, -exponent));
}

double tail_constant_c2(const MapParams& params, const DensityEstimate& density_Y) {
  return 0.25 * derive_constants(params).cprime * density_Y.trace_at_branch();
}

double predicted_decay_constant(double mu_Y, double gamma, double c2, double int_v, double int_w) {
  const double alpha = 1.0 / gamma;
  return mu_Y * gamma / (alpha - 1.0) * c2 * int_v * int_w;
}

std::vector<OrbitState> sample_invariant_states(std::int64_t count, const MapParams& params, std::uint64_t seed,
                                                int threads, std::int64_t burn_in, int oversample) {
  if (params.gamma() >= 1.0) throw ConfigError("gamma", "invariant starts need a finite invariant measure (gamma < 1)");
  constexpr int chains = 16;
  const std::int64_t K = std::max<std::int64_t>(chains, count * std::max(1, oversample));
  struct Entry {
    OrbitState s;
    BitSource digits{Philox(0, 0)};
    std::int64_t phi = 0;
  };
  std::vector<Entry> pool(static_cast<std::size_t>(K));
  parallel_for(chains, threads, [&](std::int64_t c) {
    const std::int64_t lo = K * c / chains, hi = K * (c + 1) / chains;
    MuYStream st(params, seed, derive_stream(0x1a7, static_cast<std::uint64_t>(c)), burn_in, kDefaultReturnCap, true);
    for (std::int64_t i = lo; i < hi; ++i) {
      Entry& e = pool[static_cast<std::size_t>(i)];
      e.s = st.state();
      e.digits = st.digits();
      e.phi = st.advance();
    }
  });
  std::vector<double> cum(pool.size());
  double total = 0.0;
  for (std::size_t i = 0; i < pool.size(); ++i) cum[i] = (total += static_cast<double>(pool[i].phi));

  std::vector<OrbitState> out(static_cast<std::size_t>(count));
  Philox g(seed, derive_stream(0x70e, 0));
  std::vector<std::pair<std::size_t, std::int64_t>> picks(out.size());
  for (auto& pk : picks) {
    const double u = g.uniform() * total;
    const auto i = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    const std::size_t j = std::min(i, pool.size() - 1);
    const double before = j ? cum[j - 1] : 0.0;
    pk = {j, std::min<std::int64_t>(pool[j].phi - 1, static_cast<std::int64_t>(u - before))};
  }
  parallel_for(count, threads, [&](std::int64_t k) {
    const auto [j, r] = picks[static_cast<std::size_t>(k)];
    OrbitState s = pool[j].s;
    BitSource d = pool[j].digits;  // replays the recorded excursion
    for (std::int64_t t = 0; t < r; ++t) step(s, params, &d);
    out[static_cast<std::size_t>(k)] = s;
  });
  return out;
}

namespace {

double ks_or_degenerate(std::span<const double> v, stats::NormalFit& f) {
  f = stats::ks_normal(v);
  if (!(f.sigma > 0.0)) {
    f.sigma = 0.0;
    for (double a : v)
      if (a != f.mean) return 1.0;
    return 0.0;
  }
  return f.ks;
}

}  // namespace

LimitLawReport clt_experiment(const ObservableSpec& v, const MapParams& params, const LimitOptions& opt) {
  const std::vector<std::int64_t> grid{opt.n, 2 * opt.n};
  std::vector<double> a(static_cast<std::size_t>(opt.samples)), b(a.size());
  parallel_for(opt.samples, opt.threads, [&](std::int64_t i) {
    BitSource digits(Philox(opt.seed, derive_stream(0xc17, static_cast<std::uint64_t>(i))));
    const OrbitState s = lebesgue_M(digits.generator());
    birkhoff_grid(s, v, params, digits, grid, [&](std::size_t g, double sum) {
      (g == 0 ? a : b)[static_cast<std::size_t>(i)] = sum / std::sqrt(static_cast<double>(grid[g]));
    });
  });
  LimitLawReport r;
  r.normalization = LimitNormalization::sqrt_n;
  r.n = opt.n;
  r.samples = opt.samples;
  stats::NormalFit f;
  r.ks_to_gaussian = ks_or_degenerate(a, f);
  r.fitted_mean = f.mean;
  r.fitted_sigma = f.sigma;
  stats::NormalFit f2;
  ks_or_degenerate(b, f2);
  r.fitted_sigma_2n = f2.sigma;
  r.skewness = stats::skewness(a);
  r.iqr = stats::iqr(a);
  r.iqr_2n = stats::iqr(b);
  r.sample_values = std::move(a);
  return r;
}

LimitLawReport stable_experiment(const ObservableSpec& v, const MapParams& params, const LimitOptions& opt,
                                 const StableInputs& inputs, bool contrast) {
  if (std::abs(v.i_v()) < 1e-12) throw IVZeroError();
  const double alpha = 1.0 / params.gamma();
  std::vector<std::int64_t> grid{opt.n, 2 * opt.n};
  if (contrast) grid.push_back(4 * opt.n);
  const auto N = static_cast<std::size_t>(opt.samples);
  std::vector<std::vector<double>> sums(grid.size(), std::vector<double>(N));
  parallel_for(opt.samples, opt.threads, [&](std::int64_t i) {
    BitSource digits(Philox(opt.seed, derive_stream(0x57a, static_cast<std::uint64_t>(i))));
    const OrbitState s = lebesgue_M(digits.generator());
    birkhoff_grid(s, v, params, digits, grid,
                  [&](std::size_t g, double sum) { sums[g][static_cast<std::size_t>(i)] = sum; });
  });
  auto scaled = [&](std::size_t g, double power) {
    std::vector<double> out(N);
    const double k = std::pow(static_cast<double>(grid[g]), -power);
    for (std::size_t i = 0; i < N; ++i) out[i] = sums[g][i] * k;
    return out;
  };
  LimitLawReport r;
  r.normalization = LimitNormalization::n_inv_alpha;
  r.n = opt.n;
  r.samples = opt.samples;
  auto a = scaled(0, 1.0 / alpha);
  const auto b = scaled(1, 1.0 / alpha);
  stats::NormalFit f;
  r.ks_to_gaussian = ks_or_degenerate(a, f);
  r.fitted_mean = f.mean;
  r.fitted_sigma = f.sigma;
  r.fitted_sigma_2n = std::sqrt(stats::variance(b));
  r.tail_fraction = opt.tail_fraction;
  r.hill_index = stats::hill(a, opt.tail_fraction);
  r.hill_fractions = opt.hill_fractions;
  for (double q : opt.hill_fractions) r.hill_sweep.push_back(stats::hill(a, q));
  r.skewness = stats::skewness(a);
  r.iqr = stats::iqr(a);
  r.iqr_2n = stats::iqr(b);
  if (contrast) {
    r.sqrt_norm_sd_n = std::sqrt(stats::variance(scaled(0, 0.5)));
    r.sqrt_norm_sd_4n = std::sqrt(stats::variance(scaled(2, 0.5)));
  }
  if (std::isfinite(inputs.branch_trace)) {
    const double cp = derive_constants(params).cprime;
    r.sigma_tail = 0.25 * cp * params.gamma() * inputs.branch_trace * std::tgamma(1.0 - alpha) *
                   std::cos(alpha * std::numbers::pi / 2.0);
    if (std::isfinite(inputs.mean_return)) {
      const double pre = std::pow(inputs.mean_return, -1.0 / alpha) * v.i_v();
      r.constant_linear = pre * r.sigma_tail;
      r.constant_root = pre * std::pow(r.sigma_tail, 1.0 / alpha);
    }
  }
  r.sample_values = std::move(a);
  return r;
}

ExceedanceSeries large_deviation_experiment(const ObservableSpec& v, double a, double mean,
                                            const std::vector<std::int64_t>& n_grid, std::int64_t samples,
                                            std::uint64_t seed, const MapParams& params, int threads,
                                            StartDistribution start) {
  grid_max(n_grid);
  const auto starts = starts_for(start, samples, params, seed, threads);
  const std::size_t G = n_grid.size();
  std::vector<std::uint8_t> hit(static_cast<std::size_t>(samples) * G, 0);
  parallel_for(samples, threads, [&](std::int64_t i) {
    BitSource digits(Philox(seed, derive_stream(0x1d, static_cast<std::uint64_t>(i))));
    birkhoff_grid(starts[static_cast<std::size_t>(i)], v, params, digits, n_grid, [&](std::size_t g, double sum) {
      hit[static_cast<std::size_t>(i) * G + g] = std::abs(sum / static_cast<double>(n_grid[g]) - mean) > a;
    });
  });
  ExceedanceSeries out;
  out.threshold = a;
  out.samples = samples;
  out.n_values = n_grid;
  std::vector<double> x, y;
  for (std::size_t g = 0; g < G; ++g) {
    std::int64_t k = 0;
    for (std::int64_t i = 0; i < samples; ++i) k += hit[static_cast<std::size_t>(i) * G + g];
    out.exceedances.push_back(k);
    const double p = static_cast<double>(k) / static_cast<double>(samples);
    out.probability.push_back(p);
    const auto ci = stats::wilson(k, samples);
    out.lo.push_back(ci.lo);
    out.hi.push_back(ci.hi);
    if (k > 0) {
      x.push_back(static_cast<double>(n_grid[g]));
      y.push_back(p);
    }
  }
  out.fit = stats::loglog_fit(x, y);
  out.sign_test_p = stats::sign_test_increases(out.probability);
  return out;
}

double moment_growth_exponent(double p, double alpha) {
  double g;
  if (alpha >= 2.0)
    g = p / 2.0;
  else if (p == alpha)
    g = 1.0;
  else
    g = p / alpha;
  return std::max(g, p - alpha + 1.0);
}

MomentSeries moment_experiment(const ObservableSpec& v, double p, const std::vector<std::int64_t>& n_grid,
                               std::int64_t samples, std::uint64_t seed, const MapParams& params, int threads,
                               StartDistribution start) {
  grid_max(n_grid);
  const auto starts = starts_for(start, samples, params, seed, threads);
  const std::size_t G = n_grid.size();
  std::vector<double> val(static_cast<std::size_t>(samples) * G, 0.0);
  parallel_for(samples, threads, [&](std::int64_t i) {
    BitSource digits(Philox(seed, derive_stream(0x30, static_cast<std::uint64_t>(i))));
    birkhoff_grid(starts[static_cast<std::size_t>(i)], v, params, digits, n_grid,
                  [&](std::size_t g, double sum) { val[static_cast<std::size_t>(i) * G + g] = sum; });
  });
  MomentSeries out;
  out.p = p;
  out.samples = samples;
  out.n_values = n_grid;
  std::vector<double> col(static_cast<std::size_t>(samples)), x;
  for (std::size_t g = 0; g < G; ++g) {
    double mx = 0.0;
    for (std::int64_t i = 0; i < samples; ++i) {
      const double s = std::abs(val[static_cast<std::size_t>(i) * G + g]);
      mx = std::max(mx, s);
      col[static_cast<std::size_t>(i)] = std::pow(s, p);
    }
    out.moment.push_back(stats::mean(col));
    out.stderr_.push_back(stats::stderr_of_mean(col));
    out.max_abs.push_back(mx);
    x.push_back(static_cast<double>(n_grid[g]));
  }
  out.fit = stats::loglog_fit(x, out.moment);
  out.predicted_exponent = moment_growth_exponent(p, 1.0 / params.gamma());
  return out;
}

double d_gamma(double gamma) {
  if (gamma == 1.0) return 1.0;
  const double alpha = 1.0 / gamma;
  return std::sin(alpha * std::numbers::pi) / std::numbers::pi;
}

InfiniteMixingReport infinite_mixing_experiment(const ObservableSpec& v, const ObservableSpec& w,
                                                const std::vector<std::int64_t>& n_grid, const MapParams& params,
                                                const InfiniteMixingOptions& opt) {
  if (params.gamma() < 1.0) throw ConfigError("gamma", "infinite-measure mixing needs gamma >= 1");
  grid_max(n_grid);
  const double alpha = 1.0 / params.gamma();
  const std::size_t G = n_grid.size();
  const auto N = static_cast<std::size_t>(opt.samples);
  const int chains = std::max(1, opt.chains);
  std::vector<double> prod(N * G, 0.0), v0(N, 0.0), w0(N, 0.0);
  std::vector<std::int64_t> overflow(static_cast<std::size_t>(chains), 0);
  parallel_for(chains, opt.threads, [&](std::int64_t c) {
    const std::int64_t lo = opt.samples * c / chains, hi = opt.samples * (c + 1) / chains;
    MuYStream st(params, opt.seed, derive_stream(0x1f0, static_cast<std::uint64_t>(c)), opt.burn_in,
                 kDefaultReturnCap, true);
    for (std::int64_t i = lo; i < hi; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      OrbitState s = st.state();
      const double a = v(s.point());
      v0[ui] = a;
      w0[ui] = w(s.point());
      if (a != 0.0) {
        BitSource digits(Philox(opt.seed, derive_stream(0x1f1, static_cast<std::uint64_t>(i))));
        std::size_t g = 0;
        for (std::int64_t k = 1; g < G; ++k) {
          step(s, params, &digits);
          if (k == n_grid[g]) prod[ui * G + g++] = a * w(s.point());
        }
      }
      for (int t = 0; t < std::max(1, opt.thin); ++t) st.advance();
    }
    overflow[static_cast<std::size_t>(c)] = st.overflows();
  });

  InfiniteMixingReport r;
  r.n_values = n_grid;
  r.samples = opt.samples;
  r.mu_Y = opt.mu_Y;
  for (auto o : overflow) r.overflows += o;
  std::vector<double> col(N);
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t i = 0; i < N; ++i) col[i] = prod[i * G + g];
    const double n = static_cast<double>(n_grid[g]);
    const double scale = params.gamma() == 1.0 ? std::log(n) : std::pow(n, 1.0 - alpha);
    const double m = opt.mu_Y * stats::mean(col);
    r.raw.push_back(m);
    r.scaled_integral.push_back(m * scale);
    const double se = N >= 64 ? stats::batch_means_stderr(col, 32) : stats::stderr_of_mean(col);
    r.stderr_.push_back(opt.mu_Y * se * scale);
  }
  for (std::size_t g = 1; g < G; ++g) r.ratios.push_back(r.scaled_integral[g] / r.scaled_integral[g - 1]);
  if (std::isfinite(opt.c2) && opt.c2 > 0.0) {
    const double int_v = opt.mu_Y * stats::mean(v0), int_w = opt.mu_Y * stats::mean(w0);
    r.predicted = d_gamma(params.gamma()) / (opt.mu_Y * params.gamma() * opt.c2) * int_v * int_w;
  }
  return r;
}

TailTrendReport excursion_tail_trend(const ExcursionBatch& batch, const std::vector<std::int64_t>& n_grid,
                                     double alpha, bool use_rho) {
  TailTrendReport r;
  r.n_values = n_grid;
  r.records = static_cast<std::int64_t>(batch.records.size());
  std::vector<std::int64_t> vals;
  vals.reserve(batch.records.size());
  for (const auto& e : batch.records) vals.push_back(use_rho ? e.rho_z : e.tau);
  std::sort(vals.begin(), vals.end());
  const double N = static_cast<double>(vals.size());
  for (auto n : n_grid) {
    const auto above = static_cast<double>(vals.end() - std::upper_bound(vals.begin(), vals.end(), n));
    const double p = above / N;
    const double k = std::pow(static_cast<double>(n), alpha);
    r.survival.push_back(p);
    r.scaled.push_back(p * k);
    r.stderr_.push_back(std::sqrt(p * (1.0 - p) / N) * k);
  }
  r.trend = stats::mann_kendall(r.scaled);
  return r;
}

std::vector<std::int64_t> dyadic_grid(std::int64_t lo, std::int64_t hi) {
  std::vector<std::int64_t> g;
  for (std::int64_t n = std::max<std::int64_t>(1, lo); n <= hi; n *= 2) g.push_back(n);
  return g;
}

}  // namespace pmmap
