#include "pmmap/map_core.hpp"

#include <algorithm>
#include <bit>
#include <sstream>
#include <stdexcept>

#include "pmmap/errors.hpp"

namespace pmmap {

Point make_point(double x, double theta) {
  if (!std::isfinite(x) || !std::isfinite(theta)) throw std::invalid_argument("point coordinates must be finite");
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("x must lie in [0,1]");
  return {x, wrap_unit(theta)};
}

MapParams::MapParams(double gamma, double c0, double a) : gamma_(gamma), c0_(c0), a_(a), kernel_(Kernel::general) {
  if (gamma == 0.5) kernel_ = Kernel::half;
  else if (gamma == 1.0) kernel_ = Kernel::one;
  else if (gamma == 1.5) kernel_ = Kernel::three_halves;
  else if (gamma == 0.75) kernel_ = Kernel::three_quarters;
}

std::uint64_t MapParams::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (double v : {gamma_, c0_, a_, static_cast<double>(kBase)}) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

void check_admissible(const MapParams& p, const ValidationGrid& g) {
  const double m = g.margin;
  const double lo = 0.25 * std::pow(4.0 / 3.0, p.gamma());
  const double hi = std::pow(4.0 / 3.0, p.gamma()) / 3.0;
  for (int i = 0; i < g.theta_points; ++i) {
    const double th = static_cast<double>(i) / g.theta_points;
    const double u = p.u(kBranchPoint, th);
    if (!(u > lo + m))
      throw AdmissibilityError("u(3/4,theta) > (1/4)(4/3)^gamma", kBranchPoint, th,
                               "u=" + fmt(u) + " lower bound " + fmt(lo));
    if (!(u <= hi))
      throw AdmissibilityError("u(3/4,theta) <= (1/3)(4/3)^gamma", kBranchPoint, th,
                               "u=" + fmt(u) + " upper bound " + fmt(hi));
  }
  for (int i = 0; i <= g.x_points; ++i) {
    const double x = kBranchPoint * i / g.x_points;
    for (int k = 0; k < g.xtheta_theta_points; ++k) {
      const double th = static_cast<double>(k) / g.xtheta_theta_points;
      const double d = p.df1_dx_left(x, th);
      if (!(d >= 1.0 - m))
        throw AdmissibilityError("df1/dx >= 1", x, th, "df1/dx=" + fmt(d));
      Jacobian J{d, p.df1_dtheta_left(x, th), 4.0};
      const double s = J.min_singular_value();
      if (!(s >= 1.0 - m))
        throw AdmissibilityError("min singular value of Df >= 1", x, th, "sigma_min=" + fmt(s));
    }
  }
}

}  // namespace

MapParams make_params_unchecked(double gamma, double c0, double pert_amp) { return MapParams(gamma, c0, pert_amp); }

MapParams make_params(double gamma, double c0, double pert_amp, const ValidationGrid& grid) {
  if (!std::isfinite(gamma) || !(gamma > 0.0)) throw AdmissibilityError("gamma > 0", 0.0, 0.0, "gamma=" + fmt(gamma));
  if (!std::isfinite(c0) || !(c0 > 0.0)) throw AdmissibilityError("c0 > 0", 0.0, 0.0, "c0=" + fmt(c0));
  if (!std::isfinite(pert_amp) || pert_amp < 0.0 || pert_amp >= 1.0)
    throw AdmissibilityError("0 <= pert_amp < 1", 0.0, 0.0, "a=" + fmt(pert_amp));
  if (grid.theta_points < 4096 || (grid.x_points + 1) * grid.xtheta_theta_points < 4096)
    throw std::invalid_argument("validation grid must have at least 4096 points");
  MapParams p(gamma, c0, pert_amp);
  check_admissible(p, grid);
  return p;
}

Point evaluate_map(Point p, const MapParams& params) {
  return {params.f1(p.x, p.theta), wrap_unit(4.0 * p.theta)};
}

double Jacobian::min_singular_value() const {
  const double s = dx_dx * dx_dx + dx_dtheta * dx_dtheta + dtheta_dtheta * dtheta_dtheta;
  const double d = std::abs(det());
  const double smax = std::sqrt(0.5 * (s + std::sqrt(std::max(0.0, s * s - 4.0 * d * d))));
  return smax > 0.0 ? d / smax : 0.0;
}

Jacobian evaluate_jacobian(Point p, const MapParams& params) {
  if (p.x == kBranchPoint) throw BranchBoundaryError("Jacobian undefined on the branch boundary x = 3/4");
  if (p.x > kBranchPoint) return {4.0, 0.0, 4.0};
  return {params.df1_dx_left(p.x, p.theta), params.df1_dtheta_left(p.x, p.theta), 4.0};
}

DerivedConstants derive_constants(const MapParams& params) {
  DerivedConstants d;
  d.alpha = 1.0 / params.gamma();
  d.c1 = std::pow(params.c0() * params.gamma(), -d.alpha);
  d.cprime = std::pow(d.c1, 1.0 + params.gamma()) * params.c0();
  return d;
}

double upper_boundary_X(double theta, const MapParams& params) {
  if (!params.theta_dependent()) return params.f1_left(kBranchPoint, 0.0);
  double b = 0.0;
  for (int i = 0; i < 4; ++i) b = std::max(b, params.f1_left(kBranchPoint, (theta + i) / 4.0));
  return b;
}

double upper_boundary_X_max(const MapParams& params) {
  // u(3/4, .) peaks where cos(2 pi theta) = 1.
  return params.f1_left(kBranchPoint, 0.0);
}

bool in_domain_X(Point p, const MapParams& params) { return p.x <= upper_boundary_X(p.theta, params); }

bool in_domain_Y(Point p, const MapParams& params) {
  return p.x >= kBranchPoint && p.x <= upper_boundary_X(p.theta, params);
}

AdmissibleInterval admissible_c0_interval(double gamma, double pert_amp) {
  const double s = std::pow(4.0 / 3.0, gamma);
  // u(3/4, theta) ranges over c0 * [1, 1 + 3a/4].
  return {0.25 * s, s / 3.0 / (1.0 + 0.75 * pert_amp)};
}

const std::array<Preset, 5>& presets() {
  static const std::array<Preset, 5> table{{
      {"clt", 0.3, 0.30},
      {"decay", 0.5, 0.35},
      {"stable", 0.75, 0.36},
      {"barrier", 1.0, 0.40},
      {"infinite", 1.5, 0.45},
  }};
  return table;
}

const Preset& find_preset(std::string_view name) {
  for (const auto& p : presets())
    if (p.name == name) return p;
  throw std::out_of_range("unknown preset '" + std::string(name) + "'");
}

MapParams preset_params(std::string_view name, double pert_amp) {
  const auto& p = find_preset(name);
  return make_params(p.gamma, p.c0, pert_amp);
}

}  // namespace pmmap
