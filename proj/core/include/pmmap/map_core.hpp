#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

namespace pmmap {

inline constexpr double kBranchPoint = 0.75;  // left branch owns x = 3/4
inline constexpr int kBase = 4;

struct Point {
  double x = 0.0;
  double theta = 0.0;
};

inline double wrap_unit(double t) {
  t -= std::floor(t);
  return t < 1.0 ? t : 0.0;
}

// Validates x in [0,1] and reduces theta mod 1.
Point make_point(double x, double theta);

struct ValidationGrid {
  int theta_points = 4096;  // for the u(3/4, theta) bounds
  int x_points = 128;       // x-by-theta grid for the derivative checks
  int xtheta_theta_points = 64;
  double margin = 1e-9;
};

class MapParams {
 public:
  double gamma() const { return gamma_; }
  double c0() const { return c0_; }
  double pert_amp() const { return a_; }
  static constexpr int base() { return kBase; }
  bool theta_dependent() const { return a_ != 0.0; }

  double xpow(double x) const {
    switch (kernel_) {
      case Kernel::half: return std::sqrt(x);
      case Kernel::one: return x;
      case Kernel::three_halves: return x * std::sqrt(x);
      case Kernel::three_quarters: return std::sqrt(x * std::sqrt(x));
      default: return std::pow(x, gamma_);
    }
  }

  double bump(double theta) const { return 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * theta)); }

  double u(double x, double theta) const {
    return a_ == 0.0 ? c0_ : c0_ * (1.0 + a_ * x * bump(theta));
  }
  double u_x(double, double theta) const { return a_ == 0.0 ? 0.0 : c0_ * a_ * bump(theta); }
  double u_theta(double x, double theta) const {
    return a_ == 0.0 ? 0.0 : -c0_ * a_ * x * std::numbers::pi * std::sin(2.0 * std::numbers::pi * theta);
  }

  // Nonlinear branch formula, valid for any x >= 0.
  double f1_left(double x, double theta) const { return x + x * xpow(x) * u(x, theta); }
  double f1(double x, double theta) const { return x <= kBranchPoint ? f1_left(x, theta) : 4.0 * x - 3.0; }

  double df1_dx_left(double x, double theta) const {
    const double xg = xpow(x);
    return 1.0 + (1.0 + gamma_) * xg * u(x, theta) + x * xg * u_x(x, theta);
  }
  double df1_dtheta_left(double x, double theta) const { return x * xpow(x) * u_theta(x, theta); }

  std::uint64_t hash() const;

 private:
  enum class Kernel { general, half, one, three_halves, three_quarters };
  MapParams(double gamma, double c0, double a);
  friend MapParams make_params(double, double, double, const ValidationGrid&);
  friend MapParams make_params_unchecked(double, double, double);

  double gamma_, c0_, a_;
  Kernel kernel_;
};

// Throws AdmissibilityError naming the first violated inequality.
MapParams make_params(double gamma, double c0, double pert_amp, const ValidationGrid& grid = {});
// No admissibility checks; for exploring the boundary of the parameter space.
MapParams make_params_unchecked(double gamma, double c0, double pert_amp);

Point evaluate_map(Point p, const MapParams& params);

struct Jacobian {
  double dx_dx = 1.0;
  double dx_dtheta = 0.0;
  double dtheta_dtheta = 4.0;  // lower-left entry is identically 0
  double det() const { return dx_dx * dtheta_dtheta; }
  double min_singular_value() const;
};

// Throws BranchBoundaryError at x = 3/4.
Jacobian evaluate_jacobian(Point p, const MapParams& params);

struct DerivedConstants {
  double alpha = 0.0;
  double c1 = 0.0;
  double cprime = 0.0;
};

DerivedConstants derive_constants(const MapParams& params);

// Upper boundary of X at theta: max_i f1(3/4, (theta+i)/4).
double upper_boundary_X(double theta, const MapParams& params);
// Supremum of the envelope over the circle.
double upper_boundary_X_max(const MapParams& params);
bool in_domain_X(Point p, const MapParams& params);
// Y = {3/4 <= x <= upper boundary of X}.
bool in_domain_Y(Point p, const MapParams& params);

// Admissible c0 interval (lo, hi] at the given gamma and perturbation amplitude.
struct AdmissibleInterval {
  double lo = 0.0;
  double hi = 0.0;
};
AdmissibleInterval admissible_c0_interval(double gamma, double pert_amp = 0.0);

struct Preset {
  std::string_view name;
  double gamma;
  double c0;
};

const std::array<Preset, 5>& presets();
// Throws std::out_of_range for unknown names.
const Preset& find_preset(std::string_view name);
MapParams preset_params(std::string_view name, double pert_amp = 0.0);

}  // namespace pmmap
