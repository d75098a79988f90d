#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "pmmap/map_core.hpp"
#include "pmmap/orbit.hpp"
#include "pmmap/stats.hpp"
#include "pmmap/ulam.hpp"

namespace pmmap {

enum class ObservableKind { indicator_rect, smooth_trig, custom_grid };

// v(x, theta) in one of three families; a mean correction subtracts `mean` when enabled.
struct ObservableSpec {
  ObservableKind kind = ObservableKind::smooth_trig;
  // indicator_rect: [x_lo, x_hi) x [theta_lo, theta_hi)
  double x_lo = 0.0, x_hi = 0.0, theta_lo = 0.0, theta_hi = 0.0;
  // smooth_trig: c + cx x + ccos cos(2 pi theta) + csin sin(2 pi theta)
  double c = 1.0, cx = -1.0, ccos = 1.0, csin = 0.0;
  // custom_grid: piecewise constant on grid_x x grid_theta cells of [0,1) x [0,1), x slow
  int grid_x = 0, grid_theta = 0;
  std::vector<double> grid;

  bool mean_corrected = false;
  double mean = 0.0;

  double raw(const Point& p) const {
    switch (kind) {
      case ObservableKind::indicator_rect:
        return (p.x >= x_lo && p.x < x_hi && p.theta >= theta_lo && p.theta < theta_hi) ? 1.0 : 0.0;
      case ObservableKind::smooth_trig: {
        const double a = 2.0 * std::numbers::pi * p.theta;
        return c + cx * p.x + ccos * std::cos(a) + csin * std::sin(a);
      }
      case ObservableKind::custom_grid: {
        const int ix = std::min(grid_x - 1, static_cast<int>(p.x * grid_x));
        const int it = std::min(grid_theta - 1, static_cast<int>(p.theta * grid_theta));
        return grid[static_cast<std::size_t>(ix * grid_theta + it)];
      }
    }
    return 0.0;
  }
  double operator()(const Point& p) const { return mean_corrected ? raw(p) - mean : raw(p); }
  // theta-average at x = 0
  double i_v() const;
  // sup |v| over M (after correction)
  double sup_norm() const;
  bool supported_in_Y() const;
  Observable function() const {
    return [s = *this](const Point& p) { return s(p); };
  }
  void validate() const;  // throws ConfigError
};

ObservableSpec default_observable();  // (1 - x) + cos 2 pi theta
ObservableSpec indicator_rect(double x_lo, double x_hi, double theta_lo, double theta_hi);
ObservableSpec constant_observable(double value);
ObservableSpec with_mean(ObservableSpec v, double mean);

struct MeanEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

// Mean along burned-in random-digit orbits (batch means across orbits).
MeanEstimate mean_by_orbit(const ObservableSpec& v, const MapParams& params, std::int64_t orbits, std::int64_t length,
                           std::int64_t burn_in, std::uint64_t seed, int threads = 1);
// Integral against a probability density on an M mesh.
double mean_by_density(const ObservableSpec& v, const DensityEstimate& density, const MapParams& params, int sub = 4);

enum class SeriesMethod { monte_carlo, operator_based };

struct CorrelationSeries {
  std::vector<std::int64_t> n_values;
  std::vector<double> rho;
  std::vector<double> stderr_;
  SeriesMethod method = SeriesMethod::monte_carlo;
};

struct CorrelationMcOptions {
  std::int64_t n_max = 30;
  std::int64_t orbit_len = 1'000'000;
  std::int64_t n_orbits = 64;
  std::int64_t burn_in = 1000;
  int bootstrap = 200;
  std::uint64_t seed = 1;
  int threads = 1;
};

// Pooled lag covariances along independent orbits; stderr by resampling whole orbits.
CorrelationSeries correlation_mc(const ObservableSpec& v, const ObservableSpec& w, const MapParams& params,
                                 const CorrelationMcOptions& opt);
// Operator estimate on an M mesh with its invariant density.
CorrelationSeries correlation_by_operator(const ObservableSpec& v, const ObservableSpec& w, const MapParams& params,
                                          const UlamOperator& op_f, const DensityEstimate& density,
                                          std::int64_t n_max);

// Error bar for an operator series: |rho - rho on a mesh with half the cells in each direction|.
void set_resolution_error(CorrelationSeries& fine, const CorrelationSeries& coarse);

// Log-log regression of |rho| on [n_lo, n_hi]. Throws WindowTooNoisy if some |rho| <= 3 stderr there.
stats::LinearFit fit_decay_exponent(const CorrelationSeries& s, std::int64_t n_lo, std::int64_t n_hi);
// exp of the intercept with the slope held at -exponent.
double pinned_decay_constant(const CorrelationSeries& s, std::int64_t n_lo, std::int64_t n_hi, double exponent);

// c2 = (c'/4) * theta-average of h_Y at 3/4+, from a probability density on a Y mesh.
double tail_constant_c2(const MapParams& params, const DensityEstimate& density_Y);
// mu(Y) gamma (alpha - 1)^-1 c2 int v int w
double predicted_decay_constant(double mu_Y, double gamma, double c2, double int_v, double int_w);

enum class LimitNormalization { sqrt_n, n_inv_alpha, n_log_n };

enum class StartDistribution { lebesgue, invariant };

// Starts distributed as mu (gamma < 1): a burned-in mu_Y chain is resampled in proportion to
// phi and each pick is pushed a uniform number of steps into its excursion.
std::vector<OrbitState> sample_invariant_states(std::int64_t count, const MapParams& params, std::uint64_t seed,
                                                int threads = 1, std::int64_t burn_in = 1000, int oversample = 16);

struct LimitLawReport {
  LimitNormalization normalization = LimitNormalization::sqrt_n;
  std::int64_t n = 0;
  std::int64_t samples = 0;
  std::vector<double> sample_values;  // normalized v_n
  double ks_to_gaussian = 0.0;
  double fitted_mean = 0.0;
  double fitted_sigma = 0.0;
  double hill_index = std::nan("");
  double tail_fraction = 0.01;
  std::vector<double> hill_fractions;
  std::vector<double> hill_sweep;
  double skewness = 0.0;
  double iqr = 0.0;

  // at 2n under the same normalization
  double fitted_sigma_2n = 0.0;
  double iqr_2n = 0.0;
  // dispersion of n^-1/2 v at n and 4n (stable only)
  double sqrt_norm_sd_n = 0.0;
  double sqrt_norm_sd_4n = 0.0;
  // stable-law scale candidates: phibar^(-1/alpha) I_v sigma and phibar^(-1/alpha) I_v sigma^(1/alpha)
  double constant_linear = std::nan("");
  double constant_root = std::nan("");
  double sigma_tail = std::nan("");
};

struct LimitOptions {
  std::int64_t n = 10'000;
  std::int64_t samples = 10'000;
  std::uint64_t seed = 1;
  int threads = 1;
  double tail_fraction = 0.01;
  std::vector<double> hill_fractions{0.005, 0.01, 0.02};
};

LimitLawReport clt_experiment(const ObservableSpec& v, const MapParams& params, const LimitOptions& opt);

struct StableInputs {
  double mean_return = std::nan("");    // phibar = E_{mu_Y} phi
  double branch_trace = std::nan("");   // theta-average of h_Y at 3/4+
};
// Throws IVZeroError when i_v = 0.
LimitLawReport stable_experiment(const ObservableSpec& v, const MapParams& params, const LimitOptions& opt,
                                 const StableInputs& inputs = {}, bool contrast = true);

struct ExceedanceSeries {
  double threshold = 0.0;
  std::vector<std::int64_t> n_values;
  std::vector<double> probability;
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<std::int64_t> exceedances;
  std::int64_t samples = 0;
  stats::LinearFit fit;          // log p vs log n over n with p > 0
  double sign_test_p = 1.0;      // increases along the grid under a fair coin
};

// P(|v_n / n - mean| > a); one orbit per sample covers the whole grid.
ExceedanceSeries large_deviation_experiment(const ObservableSpec& v, double a, double mean,
                                            const std::vector<std::int64_t>& n_grid, std::int64_t samples,
                                            std::uint64_t seed, const MapParams& params, int threads = 1,
                                            StartDistribution start = StartDistribution::invariant);

struct MomentSeries {
  double p = 2.0;
  std::vector<std::int64_t> n_values;
  std::vector<double> moment;
  std::vector<double> stderr_;
  std::vector<double> max_abs;  // largest |v_n| seen
  std::int64_t samples = 0;
  stats::LinearFit fit;
  double predicted_exponent = 0.0;
};

// Growth exponent of max{g(n), n^(p - alpha + 1)} (log factors dropped).
double moment_growth_exponent(double p, double alpha);
MomentSeries moment_experiment(const ObservableSpec& v, double p, const std::vector<std::int64_t>& n_grid,
                               std::int64_t samples, std::uint64_t seed, const MapParams& params, int threads = 1,
                               StartDistribution start = StartDistribution::invariant);

struct InfiniteMixingReport {
  std::vector<std::int64_t> n_values;
  std::vector<double> raw;             // E_{mu_Y}[v w(f^n)] times mu(Y)
  std::vector<double> scaled_integral;  // raw times n^(1-alpha), or log n at gamma = 1
  std::vector<double> stderr_;
  std::vector<double> ratios;          // consecutive scaled ratios
  std::int64_t samples = 0;
  std::int64_t overflows = 0;
  double mu_Y = 1.0;
  double predicted = std::nan("");     // d_gamma mu(Y) / (gamma c2) * ... per unit int v int w
};

struct InfiniteMixingOptions {
  std::int64_t samples = 100'000;
  std::int64_t burn_in = 1000;
  int thin = 3;  // F-steps between successive samples of a chain
  int chains = 16;
  std::uint64_t seed = 1;
  int threads = 1;
  double mu_Y = 1.0;       // mu normalized so that mu(Y) = mu_Y
  double c2 = std::nan("");
};

double d_gamma(double gamma);
InfiniteMixingReport infinite_mixing_experiment(const ObservableSpec& v, const ObservableSpec& w,
                                                const std::vector<std::int64_t>& n_grid, const MapParams& params,
                                                const InfiniteMixingOptions& opt);

struct TailTrendReport {
  std::vector<std::int64_t> n_values;
  std::vector<double> survival;  // P(tau > n)
  std::vector<double> scaled;    // P(tau > n) n^alpha
  std::vector<double> stderr_;
  stats::MannKendall trend;
  std::int64_t records = 0;
};

// Survival of tau (or rho_Z when use_rho) scaled by n^alpha across the grid, with a trend test.
TailTrendReport excursion_tail_trend(const ExcursionBatch& batch, const std::vector<std::int64_t>& n_grid,
                                     double alpha, bool use_rho = false);

std::vector<std::int64_t> dyadic_grid(std::int64_t lo, std::int64_t hi);

}  // namespace pmmap
