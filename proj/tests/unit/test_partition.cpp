#include <doctest.h>

#include <cmath>
#include <vector>

#include "pmmap/errors.hpp"
#include "pmmap/partition.hpp"

using namespace pmmap;

namespace {

// x_n for a theta-free map by plain bisection on x + c0 x^(1+gamma) = target.
std::vector<double> reference_xn(int n_max, double gamma, double c0) {
  std::vector<double> xs{0.75};
  for (int n = 1; n <= n_max; ++n) {
    double lo = 0.0, hi = 0.75;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (mid + c0 * std::pow(mid, 1.0 + gamma) < xs.back() ? lo : hi) = mid;
    }
    xs.push_back(0.5 * (lo + hi));
  }
  return xs;
}

}  // namespace

TEST_CASE("boundary curves agree with an independent recursion") {
  const auto p = preset_params("decay");
  const auto ref = reference_xn(50, 0.5, 0.35);
  CHECK(boundary_x(0, 0.2, p) == 0.75);
  CHECK(boundary_x(1, 0.3, p) == doctest::Approx(0.590986399).epsilon(1e-9));
  for (int n : {1, 2, 7, 30, 50}) CHECK(boundary_x(n, 0.37, p) == doctest::Approx(ref[n]).epsilon(1e-12));
  const auto seq = boundary_sequence(50, p);
  for (int n = 0; n <= 50; ++n) CHECK(seq[n] == doctest::Approx(ref[n]).epsilon(1e-12));
  CHECK(boundary_y(1, 0.4, p) == doctest::Approx(15.0 / 16.0));
}

TEST_CASE("curves are decreasing in n for a theta-dependent map") {
  const auto p = make_params(0.5, 0.35, 0.05);
  for (double th : {0.0, 0.2, 0.61}) {
    double prev = 1.0;
    for (int n = 0; n < 40; ++n) {
      const double x = boundary_x(n, th, p);
      CHECK(x < prev);
      prev = x;
    }
  }
  const auto c = make_boundary_curve(5, p, 256);
  CHECK(c.x.size() == 256);
  CHECK(c.interpolate(c.theta[10]) == doctest::Approx(c.x[10]));
}

TEST_CASE("left-branch inverse") {
  const auto p = make_params(0.5, 0.35, 0.05);
  const double x = invert_left_branch(0.5, 0.3, p);
  CHECK(p.f1(x, 0.3) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK_THROWS_AS(invert_left_branch(1.5, 0.3, p), RootBracketError);
}

TEST_CASE("cells and return times") {
  const auto p = preset_params("decay");
  // Y_1 = (15/16, top]: one linear step lands above 3/4
  const auto c1 = cell_of({0.97, 0.1}, p);
  CHECK(c1.n == 1);
  CHECK(c1.j == 1);  // ceil(0.1 * 4)
  // 0.9 -> 0.6 -> 0.7627: two steps
  const auto c2 = cell_of({0.9, 0.3}, p);
  CHECK(c2.n == 2);
  CHECK(c2.j == 5);  // ceil(0.3 * 16)
  CHECK_THROWS_AS(cell_of({0.5, 0.1}, p), NotInYError);
  for (double x : {0.76, 0.8, 0.85, 0.9, 0.93, 0.95}) CHECK(return_time_from_curves({x, 0.3}, p) == cell_of({x, 0.3}, p).n);
  const auto q = make_params(0.5, 0.35, 0.05);
  for (double x : {0.77, 0.81, 0.88}) CHECK(return_time_from_curves({x, 0.71}, q) == cell_of({x, 0.71}, q).n);
}

TEST_CASE("strip index saturates at the top level") {
  CHECK(strip_index(ThetaWord::from_double(0.3), 1) == 2);
  CHECK(strip_index(ThetaWord::from_double(0.0), 3) == 1);
  CHECK(strip_index(ThetaWord{~std::uint64_t{0}}, kMaxStripLevel) == (std::uint64_t{1} << 62));
}

TEST_CASE("tail measure") {
  const auto p = preset_params("decay");
  const auto ref = reference_xn(20, 0.5, 0.35);
  CHECK(tail_measure(1, p).value == doctest::Approx(0.1875).epsilon(1e-12));
  for (int n : {2, 5, 20}) CHECK(tail_measure(n, p).value == doctest::Approx(0.25 * ref[n - 1]).epsilon(1e-9));
  const auto d = derive_constants(p);
  CHECK(tail_measure(1000, p).value * 1e6 / (0.25 * d.c1) == doctest::Approx(1.0036).epsilon(1e-3));
  CHECK(leb_Y(p) == doctest::Approx(0.35 * std::pow(0.75, 1.5)).epsilon(1e-8));
  CHECK(leb_Y(p) == doctest::Approx(0.227331668).epsilon(1e-8));
}

TEST_CASE("return jacobian") {
  const auto p = preset_params("decay");
  const auto j1 = return_jacobian({0.97, 0.2}, p);
  CHECK(j1.n == 1);
  CHECK(j1.a_entry == 4.0);
  CHECK(j1.det == doctest::Approx(16.0));
  // two steps: 4 * f1'(0.88)
  const auto j2 = return_jacobian({0.97 - 0.0225, 0.2}, p);
  if (j2.n == 2) CHECK(j2.a_entry == doctest::Approx(4.0 * (1.0 + 1.5 * 0.35 * std::sqrt(4 * 0.9475 - 3))));
  CHECK(j2.log_det == doctest::Approx(std::log(j2.det)));
}

TEST_CASE("expansion verifier on a short run") {
  ExpansionDistortionSettings s;
  s.n_max = 12;
  const auto r = verify_expansion_distortion(preset_params("decay"), 2000, s);
  CHECK(r.pairs == 2000);
  CHECK(r.violations == 0);
  CHECK(r.max_contraction <= 0.3);
  CHECK(r.max_contraction >= 0.25 - 1e-9);
}

TEST_CASE("slope bound on a theta-dependent map") {
  const auto r = slope_bound_check(make_params(0.5, 0.35, 0.05), 20);
  CHECK(r.max_slope > 0.0);
  CHECK_FALSE(r.flagged);
  const auto flat = slope_bound_check(preset_params("decay"), 20);
  CHECK(flat.max_slope == doctest::Approx(0.0).epsilon(1e-9));
}
