#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "pmmap/random.hpp"
#include "pmmap/stats.hpp"

using namespace pmmap;
using namespace pmmap::stats;

TEST_CASE("log-log fit recovers 7 n^-1") {
  std::vector<double> x, y;
  for (int n = 1; n <= 100; ++n) {
    x.push_back(n);
    y.push_back(7.0 / n);
  }
  const auto f = loglog_fit(x, y);
  CHECK(f.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(7.0).epsilon(1e-10));
  CHECK(f.r2 == doctest::Approx(1.0));
  y[3] = 0.0;  // skipped
  CHECK(loglog_fit(x, y).points == 99);
  std::vector<double> lx, ly;
  for (int n = 1; n <= 100; ++n) {
    lx.push_back(std::log(n));
    ly.push_back(std::log(7.0 / n));
  }
  CHECK(std::exp(fixed_slope_intercept(lx, ly, -1.0)) == doctest::Approx(7.0));
}

TEST_CASE("moments and quantiles") {
  const std::vector<double> v{1, 2, 3, 4, 5};
  CHECK(mean(v) == 3.0);
  CHECK(variance(v) == doctest::Approx(2.5));
  CHECK(quantile(v, 0.25) == doctest::Approx(2.0));
  CHECK(quantile(v, 0.1) == doctest::Approx(1.4));
  CHECK(iqr(v) == doctest::Approx(2.0));
  CHECK(skewness(v) == doctest::Approx(0.0));
  const std::vector<double> w{0, 0, 0, 10};
  CHECK(skewness(w) > 0.0);
}

TEST_CASE("Hill estimator on Pareto samples") {
  Philox g(1, 2);
  std::vector<double> v;
  for (int i = 0; i < 200000; ++i) v.push_back(std::pow(g.uniform_pos(), -1.0 / 1.5));
  CHECK(hill(v, 0.01) == doctest::Approx(1.5).epsilon(0.08));
}

TEST_CASE("KS distance") {
  Philox g(3, 4);
  std::normal_distribution<double> nd(2.0, 3.0);
  std::vector<double> v;
  for (int i = 0; i < 20000; ++i) v.push_back(nd(g));
  const auto f = ks_normal(v);
  CHECK(f.mean == doctest::Approx(2.0).epsilon(0.03));
  CHECK(f.sigma == doctest::Approx(3.0).epsilon(0.02));
  CHECK(f.ks < 0.01);
  std::vector<double> u;
  for (int i = 0; i < 20000; ++i) u.push_back(g.uniform());
  CHECK(ks_normal(u).ks > 0.03);
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975));
}

TEST_CASE("Wilson interval") {
  const auto w = wilson(5, 10);
  CHECK(w.lo == doctest::Approx(0.2366).epsilon(1e-3));
  CHECK(w.hi == doctest::Approx(0.7634).epsilon(1e-3));
  const auto z = wilson(0, 100);
  CHECK(z.lo == doctest::Approx(0.0));
  CHECK(z.hi == doctest::Approx(0.0370).epsilon(1e-2));
}

TEST_CASE("trend tests") {
  std::vector<double> up, flat{3, 1, 4, 1, 5, 9, 2, 6, 5, 3};
  for (int i = 0; i < 10; ++i) up.push_back(i + 0.1 * (i % 3));
  const auto mu = mann_kendall(up);
  CHECK(mu.s == 45.0);
  CHECK(mu.upward());
  CHECK_FALSE(mann_kendall(flat).upward());
  std::vector<double> down(up.rbegin(), up.rend());
  CHECK(mann_kendall(down).p_up > 0.99);
  CHECK(sign_test_increases(down) == doctest::Approx(1.0));
  CHECK(sign_test_increases(up) < 0.01);
}

TEST_CASE("batch means") {
  Philox g(8, 8);
  std::vector<double> v;
  for (int i = 0; i < 32000; ++i) v.push_back(g.uniform());
  CHECK(batch_means_stderr(v) == doctest::Approx(stderr_of_mean(v)).epsilon(0.35));
}
