#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pmmap/map_core.hpp"
#include "pmmap/random.hpp"

namespace pmmap {

inline constexpr std::int64_t kDefaultReturnCap = 1'000'000;
inline constexpr int kMaxStripLevel = 31;  // 4^31 still fits the strip index in 64 bits

// Solve f1(x, theta) = target for x in [0, 3/4]. Throws RootBracketError.
double invert_left_branch(double target, double theta, const MapParams& params);

// x_n(theta_0) given the angle sequence theta_0..theta_{n-1} along the orbit.
double boundary_x_along(std::span<const double> thetas, const MapParams& params);

// x_n(theta): x_0 = 3/4, f1(x_n(theta), theta) = x_{n-1}(4 theta mod 1).
double boundary_x(std::int64_t n, double theta, const MapParams& params);
// y_n(theta) = (x_{n-1}(4 theta mod 1) + 3) / 4, n >= 1.
double boundary_y(std::int64_t n, double theta, const MapParams& params);
// x_0..x_{n_max} for a theta-independent map in one pass.
std::vector<double> boundary_sequence(std::int64_t n_max, const MapParams& params);

struct BoundaryCurve {
  std::int64_t level = 0;
  std::vector<double> theta;
  std::vector<double> x;
  std::uint64_t params_hash = 0;

  // Periodic linear interpolation between samples.
  double interpolate(double t) const;
};

BoundaryCurve make_boundary_curve(std::int64_t n, const MapParams& params, int grid_points = 4096);

struct CellIndex {
  std::int64_t n = 0;
  std::uint64_t j = 0;  // ceil(theta 4^level), clamped to [1, 4^level]
  int level = 0;        // min(n, kMaxStripLevel)
};

// Strip index of theta at level k <= kMaxStripLevel.
std::uint64_t strip_index(ThetaWord theta, int k);

// First return time by iteration plus the theta strip. Throws NotInYError, ReturnOverflowError.
CellIndex cell_of(Point p, const MapParams& params, std::int64_t cap = kDefaultReturnCap);
// Same n located through the boundary curves y_n instead of iterating the map.
std::int64_t return_time_from_curves(Point p, const MapParams& params, std::int64_t cap = 4096);

struct TailEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  bool monte_carlo = false;
};

// Leb(phi > n) = (1/4) int x_{n-1}(theta) dtheta. Simpson for n <= 12, Monte Carlo above.
TailEstimate tail_measure(std::int64_t n, const MapParams& params, int quadrature_points = 4096,
                          std::uint64_t seed = 0x7a11);
double leb_Y(const MapParams& params, int quadrature_points = 1 << 16);

struct ReturnJacobian {
  std::int64_t n = 0;
  double a_entry = 0.0;   // A = prod df1/dx along the return orbit
  double b_scaled = 0.0;  // B / 4^n
  double b_entry = 0.0;   // may overflow to inf for long returns
  double log_det = 0.0;   // log JF = n log 4 + log A
  double det = 0.0;       // 4^n A, inf once it leaves double range
};

// Chain rule along the first return of p. digits supplies fresh low-order theta digits
// (nullptr keeps exact double arithmetic).
ReturnJacobian return_jacobian(Point p, const MapParams& params, BitSource* digits = nullptr,
                               std::int64_t cap = kDefaultReturnCap);

struct ExpansionDistortionSettings {
  double lambda = 0.3;
  double eps0 = 1e-3;
  int n_max = 50;
  std::uint64_t seed = 1;
};

struct ExpansionDistortionReport {
  std::int64_t pairs = 0;
  std::int64_t violations = 0;
  double max_contraction = 0.0;     // max |F^-1 z1 - F^-1 z2| / |z1 - z2|
  std::vector<int> n_values;
  std::vector<double> max_distortion;  // per n: max |log JF^-1(z1) - log JF^-1(z2)| / |z1 - z2|
  std::vector<std::int64_t> samples_per_n;
};

ExpansionDistortionReport verify_expansion_distortion(const MapParams& params, std::int64_t sample_count,
                                                      const ExpansionDistortionSettings& settings = {});

// Curves written against the landing angle theta' = 4^n theta along a fixed branch.
double boundary_x_landing(std::int64_t n, std::uint64_t branch_digits_seed, double theta_landing,
                          const MapParams& params);

struct SlopeBoundReport {
  double max_slope = 0.0;
  bool flagged = false;  // max_slope >= 7/sqrt(72)
  std::vector<std::int64_t> levels;
  std::vector<double> per_level_max;
  double fitted_loglog_slope = 0.0;  // NaN when all slopes vanish
  std::int64_t fit_lo = 0, fit_hi = 0;
};

inline constexpr double kSlopeBound = 0.82495791138430;  // 7 / sqrt(72)

SlopeBoundReport slope_bound_check(const MapParams& params, std::int64_t n_max, int branches = 16,
                                   int theta_points = 64, std::uint64_t seed = 3);

}  // namespace pmmap
