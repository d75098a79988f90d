#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pmmap/errors.hpp"
#include "pmmap/experiments.hpp"

using namespace pmmap;

TEST_CASE("moment growth exponents") {
  CHECK(moment_growth_exponent(2.0, 4.0 / 3.0) == doctest::Approx(5.0 / 3.0));
  CHECK(moment_growth_exponent(2.0, 10.0 / 3.0) == doctest::Approx(1.0));
  CHECK(moment_growth_exponent(3.0, 2.5) == doctest::Approx(1.5));
  CHECK(moment_growth_exponent(1.2, 1.5) == doctest::Approx(0.8));
}

TEST_CASE("mixing constants") {
  CHECK(d_gamma(1.0) == doctest::Approx(1.0));
  CHECK(d_gamma(1.5) == doctest::Approx(std::sin(2.0 * std::numbers::pi / 3.0) / std::numbers::pi));
  CHECK(predicted_decay_constant(0.12, 0.5, 80.0, 0.03, 0.03) == doctest::Approx(0.12 * 0.5 * 80.0 * 0.03 * 0.03));
}

TEST_CASE("observables") {
  const auto v = default_observable();
  CHECK(v({0.0, 0.0}) == doctest::Approx(2.0));
  CHECK(v.i_v() == doctest::Approx(1.0));
  const auto c = with_mean(v, 0.4);
  CHECK(c({0.0, 0.25}) == doctest::Approx(0.6));
  CHECK(c.i_v() == doctest::Approx(0.6));
  const auto r = indicator_rect(0.8, 0.9, 0.0, 0.5);
  CHECK(r({0.85, 0.2}) == 1.0);
  CHECK(r({0.85, 0.7}) == 0.0);
  CHECK(r.supported_in_Y());
  CHECK(r.i_v() == 0.0);
  CHECK(constant_observable(2.5)({0.3, 0.3}) == 2.5);
  ObservableSpec bad = indicator_rect(0.9, 0.8, 0.0, 1.0);
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("grids") {
  CHECK(dyadic_grid(200, 2000) == std::vector<std::int64_t>{200, 400, 800, 1600});
  CHECK(dyadic_grid(1, 8).size() == 4);
}

TEST_CASE("window checks") {
  CorrelationSeries s;
  for (int n = 1; n <= 20; ++n) {
    s.n_values.push_back(n);
    s.rho.push_back(3.0 * std::pow(n, -1.5));
    s.stderr_.push_back(1e-6);
  }
  const auto f = fit_decay_exponent(s, 5, 20);
  CHECK(f.slope == doctest::Approx(-1.5));
  CHECK(pinned_decay_constant(s, 5, 20, 1.5) == doctest::Approx(3.0));
  s.stderr_[10] = 1.0;
  CHECK_THROWS_AS(fit_decay_exponent(s, 5, 20), WindowTooNoisy);
}

TEST_CASE("stable experiment needs I_v != 0") {
  LimitOptions o;
  o.n = 10;
  o.samples = 10;
  CHECK_THROWS_AS(stable_experiment(indicator_rect(0.8, 0.9, 0.0, 1.0), preset_params("stable"), o), IVZeroError);
}

TEST_CASE("invariant starts are reproducible") {
  const auto p = preset_params("decay");
  const auto a = sample_invariant_states(300, p, 5, 1, 100);
  const auto b = sample_invariant_states(300, p, 5, 3, 100);
  REQUIRE(a.size() == 300);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].w.bits == b[i].w.bits);
  }
  // fraction of mu in Y is mu(Y)
  const auto c = sample_invariant_states(40000, p, 6, 0, 200);
  int inY = 0;
  for (const auto& s : c) inY += s.x > 0.75;
  CHECK(inY / 40000.0 == doctest::Approx(0.1218).epsilon(0.06));
  CHECK_THROWS(sample_invariant_states(10, preset_params("barrier"), 1));
}

TEST_CASE("clt experiment on a small run") {
  LimitOptions o;
  o.n = 200;
  o.samples = 400;
  o.seed = 3;
  const auto p = preset_params("clt");
  const auto v = with_mean(default_observable(), mean_by_orbit(default_observable(), p, 8, 50000, 100, 2).value);
  const auto r = clt_experiment(v, p, o);
  CHECK(r.sample_values.size() == 400);
  CHECK(r.fitted_sigma > 0.5);
  CHECK(r.ks_to_gaussian < 0.1);
}

TEST_CASE("infinite mixing refuses finite measures") {
  InfiniteMixingOptions o;
  o.samples = 10;
  const auto Y = indicator_rect(0.75, 1.0, 0.0, 1.0);
  CHECK_THROWS_AS(infinite_mixing_experiment(Y, Y, {16}, preset_params("decay"), o), ConfigError);
}
