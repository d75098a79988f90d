#include <doctest.h>

#include <cmath>
#include <numeric>

#include "pmmap/errors.hpp"
#include "pmmap/orbit.hpp"

using namespace pmmap;

TEST_CASE("iterate agrees with repeated evaluation") {
  const auto p = make_params(0.5, 0.35, 0.05);
  Point z{0.31, 0.123};
  const auto orb = orbit(z, 10, p);
  REQUIRE(orb.size() == 11);
  for (int k = 0; k < 10; ++k) z = evaluate_map(z, p);
  CHECK(orb.back().x == doctest::Approx(z.x).epsilon(1e-14));
  CHECK(iterate({0.31, 0.123}, 10, p).x == doctest::Approx(z.x).epsilon(1e-14));
}

TEST_CASE("first return matches the cell index") {
  const auto p = preset_params("decay");
  for (double x : {0.76, 0.8, 0.9, 0.95}) {
    const auto e = first_return({x, 0.37}, p);
    CHECK(e.phi == cell_of({x, 0.37}, p).n);
    CHECK(e.landing.x > 0.75);
    CHECK(e.cell.n == e.phi);
  }
  CHECK_THROWS_AS(first_return({0.2, 0.1}, p), NotInYError);
  CHECK_THROWS_AS(first_return({0.7500001, 0.1}, p, 5), ReturnOverflowError);
}

TEST_CASE("random-digit returns keep the leading orbit") {
  const auto p = make_params(0.5, 0.35, 0.05);
  BitSource bits(Philox(11, 0));
  const auto a = first_return({0.85, 0.4}, p);
  const auto b = first_return({0.85, 0.4}, p, bits);
  CHECK(a.phi == b.phi);
  CHECK(a.landing.x == doctest::Approx(b.landing.x).epsilon(1e-9));
}

TEST_CASE("excursion bookkeeping") {
  const auto p = make_params(0.5, 0.35, 0.05);
  const ZConfig z;
  CHECK(z.side() == doctest::Approx(0.2));
  BitSource bits(Philox(5, 1));
  const auto starts = sample_lebesgue(200, Region::Z, 3, p, z);
  for (const auto& s : starts) {
    REQUIRE(z.in_Z(s, p));
    OrbitState st = random_start(s, bits);
    std::vector<std::int64_t> phis;
    const auto r = excursion_to_Z(st, z, p, bits, kDefaultExcursionCap, kDefaultReturnCap, &phis);
    CHECK(r.rho_z >= 1);
    CHECK(r.tau >= r.rho_z);
    CHECK(r.tau >= r.max_phi);
    CHECK(static_cast<std::int64_t>(phis.size()) == r.rho_z);
    CHECK(std::accumulate(phis.begin(), phis.end(), std::int64_t{0}) == r.tau);
    CHECK(z.in_Z(st.point(), p));
  }
}

TEST_CASE("samplers are deterministic and stay in their regions") {
  const auto p = preset_params("stable");
  const auto a = sample_lebesgue(500, Region::Y, 77, p);
  const auto b = sample_lebesgue(500, Region::Y, 77, p);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(in_domain_Y(a[i], p));
  }
  for (const auto& q : sample_lebesgue(500, Region::X, 78, p)) CHECK(in_domain_X(q, p));
  const auto m1 = sample_mu_Y(1000, 50, 9, p, 4, 1);
  const auto m2 = sample_mu_Y(1000, 50, 9, p, 4, 3);
  REQUIRE(m1.points.size() == 1000);
  for (std::size_t i = 0; i < m1.points.size(); ++i) {
    CHECK(m1.points[i].x == m2.points[i].x);
    CHECK(m1.phi[i] == m2.phi[i]);
    CHECK(in_domain_Y(m1.points[i], p));
  }
}

TEST_CASE("Birkhoff sums do not depend on the thread count") {
  const auto p = preset_params("clt");
  const auto starts = sample_lebesgue(64, Region::M, 4, p);
  const Observable v = [](const Point& z) { return 1.0 - z.x; };
  const auto a = birkhoff(v, 500, starts, p, 8, 1);
  const auto b = birkhoff(v, 500, starts, p, 8, 4);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value == b[i].value);
  // constant observable sums to n
  const auto c = birkhoff([](const Point&) { return 1.0; }, 123, starts, p, 8, 2);
  CHECK(c[0].value == 123.0);
}

TEST_CASE("mean return time is close to 1/mu(Y)") {
  // decay: mu(Y) ~ 0.1218 from independent Ulam and Kac runs
  const auto s = sample_mu_Y(200000, 500, 21, preset_params("decay"), 8, 0);
  const double m = std::accumulate(s.phi.begin(), s.phi.end(), 0.0) / static_cast<double>(s.phi.size());
  CHECK(1.0 / m == doctest::Approx(0.1218).epsilon(0.03));
}
