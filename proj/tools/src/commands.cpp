#include "pmmap/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>

#include "pmmap/errors.hpp"
#include "pmmap/experiments.hpp"
#include "pmmap/parallel.hpp"
#include "pmmap/partition.hpp"
#include "pmmap/stats.hpp"
#include "pmmap/ulam.hpp"

namespace pmmap::cli {

namespace {

struct Ctx {
  const ExperimentConfig& cfg;
  fs::path out;
  RunManifest& manifest;
  int threads;
  bool pass = true;

  Report report(const std::string& experiment, const MapParams& p) const {
    Report r;
    r.experiment = experiment;
    r.params = params_json(p);
    r.seed = cfg.seed;
    return r;
  }
  void emit(const Report& r, const std::string& file) {
    write_json(out / file, r.to_json());
    manifest.artifact(out / file);
    pass = pass && r.all_pass();
  }
  void csv(const Series& s, const std::string& file) {
    write_series_csv(out / file, s);
    manifest.artifact(out / file);
  }
  template <class Fn>
  auto stage(const std::string& name, Fn&& fn) {
    manifest.begin_stage(name);
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        manifest.end_stage();
      } else {
        auto r = fn();
        manifest.end_stage();
        return r;
      }
    } catch (const std::exception& e) {
      manifest.fail(name, e.what());
      throw;
    }
  }
};

void cmd_validate(Ctx& c) {
  MapParams p = c.cfg.params_unchecked();
  const auto iv = admissible_c0_interval(c.cfg.gamma, c.cfg.pert_amp);
  Report r = c.report("validate", p);
  r.estimates = {iv.lo, iv.hi};
  std::printf("gamma=%.6g c0=%.6g a=%.6g\nadmissible c0 interval: (%.5f, %.5f]\n", c.cfg.gamma, c.cfg.c0,
              c.cfg.pert_amp, iv.lo, iv.hi);
  try {
    c.stage("validate", [&] { p = c.cfg.params(); });
    r.params = params_json(p);
    r.verdict("admissible", true, c.cfg.c0, iv.hi);
    std::printf("valid\n");
  } catch (const AdmissibilityError& e) {
    r.verdict("admissible", false, c.cfg.c0, iv.hi);
    r.extra["violated_constraint"] = e.constraint();
    r.extra["x"] = e.x();
    r.extra["theta"] = e.theta();
    std::printf("invalid: %s\n", e.what());
  }
  c.emit(r, "validate.json");
}

void cmd_tails(Ctx& c) {
  const MapParams p = c.cfg.params();
  const auto& t = c.cfg.tails;
  const auto d = derive_constants(p);
  Series s;
  c.stage("tail_measure", [&] {
    for (std::int64_t n = t.n_min; n <= t.n_max; ++n) {
      const auto e = tail_measure(n, p, t.quadrature_points, c.cfg.seed);
      s.n.push_back(n);
      s.value.push_back(e.value);
      s.stderr_.push_back(e.stderr_);
    }
  });
  c.csv(s, "tails.csv");
  Report r = c.report("tails", p);
  r.n_grid = s.n;
  r.estimates = s.value;
  r.stderr_ = s.stderr_;
  r.extra["leb_Y"] = leb_Y(p);
  if (p.gamma() < 1.0 && t.check_n >= t.n_min && t.check_n <= t.n_max) {
    const double v = s.value[static_cast<std::size_t>(t.check_n - t.n_min)];
    const double ratio = v * std::pow(static_cast<double>(t.check_n), d.alpha) / (0.25 * d.c1);
    r.verdict("asymptotic_ratio", std::abs(ratio - 1.0) <= t.tolerance, ratio, 1.0);
  }
  c.emit(r, "tails.json");
}

void cmd_curves(Ctx& c) {
  const MapParams p = c.cfg.params();
  const auto& k = c.cfg.curves;
  const auto d = derive_constants(p);
  c.stage("curves", [&] {
    for (auto n : k.levels) {
      const auto curve = make_boundary_curve(n, p, k.grid_points);
      const auto file = "curve_" + std::to_string(n) + ".csv";
      write_curve_csv(c.out / file, curve);
      c.manifest.artifact(c.out / file);
    }
  });
  Report r = c.report("curves", p);
  Series xs, gaps;
  double max_x = 0.0, max_gap = 0.0;
  c.stage("asymptotics", [&] {
    const double thetas[] = {0.0, 0.25, 0.5, 0.75};
    for (auto n : dyadic_grid(k.asymptotic_lo, k.asymptotic_hi)) {
      double wx = 0.0, wg = 0.0;
      for (double th : thetas) {
        const double xn = boundary_x(n, th, p), xn1 = boundary_x(n + 1, th, p);
        const double a = xn * std::pow(static_cast<double>(n), d.alpha) / d.c1 - 1.0;
        const double b = (xn - xn1) * std::pow(static_cast<double>(n), 1.0 + d.alpha) / d.cprime - 1.0;
        if (std::abs(a) > std::abs(wx)) wx = a;
        if (std::abs(b) > std::abs(wg)) wg = b;
      }
      xs.n.push_back(n);
      xs.value.push_back(wx);
      gaps.n.push_back(n);
      gaps.value.push_back(wg);
      max_x = std::max(max_x, std::abs(wx));
      max_gap = std::max(max_gap, std::abs(wg));
    }
  });
  xs.stderr_.assign(xs.n.size(), 0.0);
  gaps.stderr_.assign(gaps.n.size(), 0.0);
  c.csv(xs, "curve_asymptotics_x.csv");
  c.csv(gaps, "curve_asymptotics_gap.csv");
  r.n_grid = xs.n;
  r.estimates = xs.value;
  r.verdict("x_n_asymptotic", max_x <= k.x_tolerance, max_x, k.x_tolerance);
  r.verdict("gap_asymptotic", max_gap <= k.gap_tolerance, max_gap, k.gap_tolerance);
  if (p.theta_dependent()) {
    const auto sb = c.stage("slope_bound", [&] { return slope_bound_check(p, k.slope_levels); });
    r.extra["slope_bound"] = {{"max_slope", sb.max_slope},
                              {"bound", kSlopeBound},
                              {"flagged", sb.flagged},
                              {"levels", sb.levels},
                              {"per_level_max", sb.per_level_max},
                              {"fitted_loglog_slope", std::isfinite(sb.fitted_loglog_slope) ? Json(sb.fitted_loglog_slope) : Json(nullptr)}};
    if (sb.flagged) c.manifest.warn("curve slope bound 7/sqrt(72) exceeded");
  }
  c.emit(r, "curves.json");
}

Json spectral_json(const SpectralReport& s) {
  return {{"leading_eigenvalue_re", s.leading_eigenvalue.real()},
          {"leading_eigenvalue_im", s.leading_eigenvalue.imag()},
          {"leading_modulus", s.leading_modulus},
          {"subleading_modulus", std::isfinite(s.subleading_modulus) ? Json(s.subleading_modulus) : Json(nullptr)},
          {"residual", s.residual},
          {"sweeps", s.sweeps},
          {"converged", s.converged}};
}

void cmd_ulam(Ctx& c) {
  const MapParams p = c.cfg.params();
  const auto& u = c.cfg.ulam;
  UlamBuildOptions bo;
  bo.samples_per_cell = u.samples_per_cell;
  bo.seed = c.cfg.seed;
  bo.threads = c.threads;
  const bool onY = u.region == "Y";
  const Mesh mesh = onY ? make_mesh_Y(p, u.x_cells, u.theta_cells)
                        : make_mesh_M(p, u.x_cells, u.theta_cells, u.grading, u.x_floor);
  const UlamOperator op = c.stage("build", [&] { return onY ? build_ulam_F(mesh, p, bo) : build_ulam_f(mesh, p, bo); });
  if (op.overflow_samples > 0)
    c.manifest.warn(std::to_string(op.overflow_samples) + " samples hit the return cap");
  std::int64_t flagged = 0;
  for (auto f : op.flagged) flagged += f;
  if (flagged > 0) c.manifest.warn(std::to_string(flagged) + " cells flagged for mixed return times");
  SolveOptions so;
  so.tolerance = u.tolerance;
  so.seed = c.cfg.seed;
  const auto res = c.stage("solve", [&] { return invariant_density(op, so); });
  write_density_csv(c.out / "density.csv", res.density);
  c.manifest.artifact(c.out / "density.csv");
  if (u.write_operator) {
    write_operator_csv(c.out / "operator.csv", op);
    c.manifest.artifact(c.out / "operator.csv");
  }
  write_json(c.out / "spectral.json", spectral_json(res.spectral));
  c.manifest.artifact(c.out / "spectral.json");

  Report r = c.report("ulam", p);
  const double lam = std::abs(res.spectral.leading_eigenvalue - 1.0);
  r.estimates = {res.spectral.leading_eigenvalue.real(), res.density.min_active()};
  r.verdict("leading_eigenvalue", lam <= u.eigen_tolerance, res.spectral.leading_eigenvalue.real(), 1.0);
  r.verdict("density_positive", res.density.min_active() > 0.0, res.density.min_active(), 0.0);
  r.extra["discarded_mass"] = op.discarded_mass;
  r.extra["flagged_cells"] = flagged;
  if (onY) {
    const double phibar = mean_return_time(op, res.density.mass);
    r.extra["mean_return_time"] = phibar;
    r.extra["mu_Y_kac"] = 1.0 / phibar;
    r.extra["branch_trace"] = res.density.trace_at_branch();
    r.extra["c2"] = tail_constant_c2(p, res.density);
  } else {
    r.extra["mu_Y"] = res.density.mass_Y() / res.density.total_mass();
  }
  c.emit(r, "ulam.json");
}

double resolve_mean(Ctx& c, const ObservableSpec& v, const MapParams& p, const std::string& how,
                    std::optional<double> value, std::int64_t orbits, std::int64_t length, Report& r) {
  if (how == "none") return 0.0;
  if (how == "value") return *value;
  const auto m = c.stage("mean", [&] { return mean_by_orbit(v, p, orbits, length, 1000, c.cfg.seed ^ 0x6d65616eull, c.threads); });
  r.extra["mean"] = m.value;
  r.extra["mean_stderr"] = m.stderr_;
  return m.value;
}

void cmd_correlations(Ctx& c) {
  const MapParams p = c.cfg.params();
  const auto& k = c.cfg.correlations;
  if (p.gamma() >= 1.0) throw ConfigError("preset", "correlation decay needs gamma < 1");
  const auto d = derive_constants(p);
  Report r = c.report("correlations", p);
  CorrelationSeries opser, mcser;
  if (k.operator_based) {
    UlamBuildOptions bo;
    bo.samples_per_cell = k.samples_per_cell;
    bo.seed = c.cfg.seed;
    bo.threads = c.threads;
    const Mesh mesh = make_mesh_M(p, k.x_cells, k.theta_cells);
    const auto op = c.stage("build_f", [&] { return build_ulam_f(mesh, p, bo); });
    const auto res = c.stage("density_f", [&] { return invariant_density(op); });
    opser = c.stage("operator_series", [&] { return correlation_by_operator(k.v, k.w, p, op, res.density, k.n_max); });
    // error bars from the same construction at half resolution
    c.stage("operator_half", [&] {
      const auto op2 = build_ulam_f(make_mesh_M(p, std::max(1, k.x_cells / 2), std::max(1, k.theta_cells / 2), 1.05 * 1.05), p, bo);
      const auto r2 = invariant_density(op2);
      set_resolution_error(opser, correlation_by_operator(k.v, k.w, p, op2, r2.density, k.n_max));
    });
    c.csv({opser.n_values, opser.rho, opser.stderr_}, "correlation_operator.csv");
    const double mu_Y = res.density.mass_Y() / res.density.total_mass();
    const double iv = mean_by_density(k.v, res.density, p), iw = mean_by_density(k.w, res.density, p);
    // c2 from the induced operator on Y
    UlamBuildOptions by = bo;
    by.samples_per_cell = 32;
    const auto opY = c.stage("build_F", [&] { return build_ulam_F(make_mesh_Y(p, 128, 128), p, by); });
    const auto resY = c.stage("density_F", [&] { return invariant_density(opY); });
    const double c2 = tail_constant_c2(p, resY.density);
    const double predicted = predicted_decay_constant(mu_Y, p.gamma(), c2, iv, iw);
    r.extra["mu_Y"] = mu_Y;
    r.extra["int_v"] = iv;
    r.extra["int_w"] = iw;
    r.extra["c2"] = c2;
    r.extra["predicted_constant"] = predicted;
    try {
      const auto fit = fit_decay_exponent(opser, k.fit_lo, k.fit_hi);
      r.fitted = fit_json(fit.slope, fit.intercept, fit.r2);
      const double target = -(d.alpha - 1.0);
      r.verdict("decay_slope", std::abs(fit.slope - target) <= k.slope_tolerance, fit.slope, target);
      const double emp = pinned_decay_constant(opser, k.fit_lo, k.fit_hi, d.alpha - 1.0);
      r.extra["empirical_constant"] = emp;
      r.extra["empirical_constant_free_slope"] = std::exp(fit.intercept);
      const double ratio = emp / predicted;
      r.verdict("constant_within_factor_2", ratio >= 0.5 && ratio <= 2.0, ratio, 1.0);
    } catch (const WindowTooNoisy& e) {
      r.verdict("decay_slope", false, std::nan(""), -(d.alpha - 1.0));
      c.manifest.warn(e.what());
    }
    r.n_grid = opser.n_values;
    r.estimates = opser.rho;
    r.stderr_ = opser.stderr_;
  }
  if (k.monte_carlo) {
    CorrelationMcOptions mo;
    mo.n_max = k.mc_n_max;
    mo.orbit_len = k.orbit_len;
    mo.n_orbits = k.n_orbits;
    mo.bootstrap = k.bootstrap;
    mo.seed = c.cfg.seed;
    mo.threads = c.threads;
    mcser = c.stage("monte_carlo", [&] { return correlation_mc(k.v, k.w, p, mo); });
    c.csv({mcser.n_values, mcser.rho, mcser.stderr_}, "correlation_mc.csv");
    if (!k.operator_based) {
      r.n_grid = mcser.n_values;
      r.estimates = mcser.rho;
      r.stderr_ = mcser.stderr_;
    }
  }
  if (k.operator_based && k.monte_carlo) {
    double worst = 0.0;
    for (std::size_t i = 0; i < mcser.rho.size() && i < opser.rho.size(); ++i) {
      const double z = std::abs(mcser.rho[i] - opser.rho[i]) / std::hypot(mcser.stderr_[i], opser.stderr_[i]);
      worst = std::max(worst, z);
    }
    r.verdict("mc_operator_agreement", worst <= k.agreement_sigmas, worst, k.agreement_sigmas);
  }
  c.emit(r, "correlations.json");
}

Series samples_series(const std::vector<double>& v) {
  Series s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    s.n.push_back(static_cast<std::int64_t>(i));
    s.value.push_back(v[i]);
  }
  s.stderr_.assign(v.size(), 0.0);
  return s;
}

void cmd_limits(Ctx& c) {
  const MapParams p = c.cfg.params();
  const auto& k = c.cfg.limits;
  const auto d = derive_constants(p);
  Report r = c.report(k.experiment, p);
  ObservableSpec v = k.v;
  if (!v.mean_corrected && k.mean != "none") v = with_mean(v, resolve_mean(c, k.v, p, k.mean, k.mean_value, k.mean_orbits, k.mean_length, r));
  r.extra["observable"] = observable_to_json(v);
  LimitOptions lo;
  lo.n = k.n;
  lo.samples = k.samples;
  lo.seed = c.cfg.seed;
  lo.threads = c.threads;
  const auto start = k.start == "invariant" ? StartDistribution::invariant : StartDistribution::lebesgue;
  if (k.experiment == "clt") {
    if (p.gamma() >= 0.5) throw ConfigError("limits.experiment", "the CLT experiment needs gamma < 1/2");
    const auto rep = c.stage("clt", [&] { return clt_experiment(v, p, lo); });
    c.csv(samples_series(rep.sample_values), "clt_samples.csv");
    r.n_grid = {k.n, 2 * k.n};
    r.estimates = {rep.fitted_sigma, rep.fitted_sigma_2n};
    r.extra["ks"] = rep.ks_to_gaussian;
    r.extra["fitted_mean"] = rep.fitted_mean;
    r.verdict("ks_to_normal", rep.ks_to_gaussian <= k.ks_tolerance, rep.ks_to_gaussian, k.ks_tolerance);
    const double ratio = (rep.fitted_sigma_2n * rep.fitted_sigma_2n) / (rep.fitted_sigma * rep.fitted_sigma);
    r.verdict("variance_stable", std::abs(ratio - 1.0) <= k.sigma_tolerance, ratio, 1.0);
  } else if (k.experiment == "stable") {
    if (p.gamma() <= 0.5 || p.gamma() >= 1.0) throw ConfigError("limits.experiment", "the stable experiment needs gamma in (1/2, 1)");
    StableInputs in;
    {
      UlamBuildOptions bo;
      bo.seed = c.cfg.seed;
      bo.threads = c.threads;
      const auto op = c.stage("build_F", [&] { return build_ulam_F(make_mesh_Y(p, 128, 128), p, bo); });
      const auto res = c.stage("density_F", [&] { return invariant_density(op); });
      in.mean_return = mean_return_time(op, res.density.mass);
      in.branch_trace = res.density.trace_at_branch();
    }
    const auto rep = c.stage("stable", [&] { return stable_experiment(v, p, lo, in); });
    c.csv(samples_series(rep.sample_values), "stable_samples.csv");
    r.n_grid = {k.n, 2 * k.n, 4 * k.n};
    r.estimates = {rep.hill_index, rep.skewness, rep.iqr, rep.iqr_2n};
    r.extra["hill_fractions"] = rep.hill_fractions;
    r.extra["hill_sweep"] = rep.hill_sweep;
    r.extra["sqrt_normalized_sd"] = {rep.sqrt_norm_sd_n, rep.sqrt_norm_sd_4n};
    r.extra["constant_linear"] = rep.constant_linear;
    r.extra["constant_root"] = rep.constant_root;
    r.extra["sigma"] = rep.sigma_tail;
    r.extra["i_v"] = v.i_v();
    r.verdict("hill_index", rep.hill_index >= k.hill_lo && rep.hill_index <= k.hill_hi, rep.hill_index, d.alpha);
    r.verdict("skewness_positive", rep.skewness > 0.0, rep.skewness, 0.0);
    const double iq = rep.iqr_2n / rep.iqr;
    r.verdict("iqr_stable", std::abs(iq - 1.0) <= k.iqr_tolerance, iq, 1.0);
    const double contrast = rep.sqrt_norm_sd_4n / rep.sqrt_norm_sd_n;
    r.verdict("wrong_normalization_diverges", contrast > 1.2, contrast, 1.2);
  } else if (k.experiment == "large_deviation") {
    const auto s = c.stage("large_deviation", [&] {
      return large_deviation_experiment(v, k.threshold, 0.0, k.n_grid, k.samples, c.cfg.seed, p, c.threads, start);
    });
    Series out{s.n_values, s.probability, {}};
    for (std::size_t i = 0; i < s.lo.size(); ++i) out.stderr_.push_back(0.5 * (s.hi[i] - s.lo[i]) / 1.959963984540054);
    c.csv(out, "large_deviation.csv");
    r.n_grid = s.n_values;
    r.estimates = s.probability;
    r.stderr_ = out.stderr_;
    r.fitted = fit_json(s.fit.slope, s.fit.intercept, s.fit.r2);
    r.extra["wilson_lo"] = s.lo;
    r.extra["wilson_hi"] = s.hi;
    r.extra["sign_test_p"] = s.sign_test_p;
    r.verdict("exceedance_slope", s.fit.slope <= k.slope_bound, s.fit.slope, k.slope_bound);
    r.verdict("nonincreasing", s.sign_test_p >= 0.05, s.sign_test_p, 0.05);
  } else {
    const auto s = c.stage("moment", [&] { return moment_experiment(v, k.p, k.n_grid, k.samples, c.cfg.seed, p, c.threads, start); });
    c.csv({s.n_values, s.moment, s.stderr_}, "moments.csv");
    r.n_grid = s.n_values;
    r.estimates = s.moment;
    r.stderr_ = s.stderr_;
    r.fitted = fit_json(s.fit.slope, s.fit.intercept, s.fit.r2);
    r.extra["predicted_exponent"] = s.predicted_exponent;
    r.verdict("growth_exponent", std::abs(s.fit.slope - s.predicted_exponent) <= k.exponent_tolerance, s.fit.slope,
              s.predicted_exponent);
  }
  c.emit(r, "limits.json");
}

void cmd_infinite(Ctx& c) {
  const MapParams p = c.cfg.params();
  const auto& k = c.cfg.infinite;
  if (p.gamma() < 1.0) throw ConfigError("preset", "infinite-measure mixing needs gamma >= 1");
  InfiniteMixingOptions o;
  o.samples = k.samples;
  o.burn_in = k.burn_in;
  o.thin = k.thin;
  o.chains = k.chains;
  o.seed = c.cfg.seed;
  o.threads = c.threads;
  {
    UlamBuildOptions bo;
    bo.seed = c.cfg.seed;
    bo.threads = c.threads;
    bo.samples_per_cell = 16;
    const auto op = c.stage("build_F", [&] { return build_ulam_F(make_mesh_Y(p, 64, 32), p, bo); });
    const auto res = c.stage("density_F", [&] { return invariant_density(op); });
    o.c2 = tail_constant_c2(p, res.density);
  }
  const auto rep = c.stage("mixing", [&] { return infinite_mixing_experiment(k.v, k.w, k.n_grid, p, o); });
  c.csv({rep.n_values, rep.scaled_integral, rep.stderr_}, "infinite_mixing.csv");
  Report r = c.report("infinite", p);
  r.n_grid = rep.n_values;
  r.estimates = rep.scaled_integral;
  r.stderr_ = rep.stderr_;
  r.extra["ratios"] = rep.ratios;
  r.extra["predicted"] = rep.predicted;
  r.extra["c2"] = o.c2;
  r.extra["scaling"] = p.gamma() == 1.0 ? "log n" : "n^(1-alpha)";
  if (rep.overflows) c.manifest.warn(std::to_string(rep.overflows) + " return-cap restarts in mu_Y chains");
  // top decade: consecutive ratios whose larger n is within a factor 10 of the largest n
  double worst = 0.0;
  for (std::size_t i = 1; i < rep.n_values.size(); ++i)
    if (rep.n_values[i] * 10 > rep.n_values.back()) worst = std::max(worst, std::abs(rep.ratios[i - 1] - 1.0));
  r.verdict("plateau", worst <= k.ratio_tolerance, worst, k.ratio_tolerance);
  bool nonneg = true;
  for (double s : rep.scaled_integral) nonneg = nonneg && s > 0.0;
  const bool applies = k.v.kind == ObservableKind::indicator_rect && k.w.kind == ObservableKind::indicator_rect;
  if (applies) r.verdict("positive", nonneg, rep.scaled_integral.empty() ? 0.0 : *std::min_element(rep.scaled_integral.begin(), rep.scaled_integral.end()), 0.0);
  c.emit(r, "infinite.json");
}

void cmd_verify(Ctx& c) {
  const MapParams p = c.cfg.params();
  const auto& k = c.cfg.verify;
  ExpansionDistortionSettings s;
  s.lambda = k.lambda;
  s.eps0 = k.eps0;
  s.n_max = k.n_max;
  s.seed = c.cfg.seed;
  const auto rep = c.stage("expansion_distortion", [&] { return verify_expansion_distortion(p, k.samples, s); });
  Series ds;
  for (std::size_t i = 0; i < rep.n_values.size(); ++i) {
    ds.n.push_back(rep.n_values[i]);
    ds.value.push_back(rep.max_distortion[i]);
    ds.stderr_.push_back(0.0);
  }
  c.csv(ds, "distortion.csv");
  Report r = c.report("verify", p);
  r.n_grid = ds.n;
  r.estimates = ds.value;
  r.extra["pairs"] = rep.pairs;
  r.extra["max_contraction"] = rep.max_contraction;
  std::vector<double> tail;
  for (std::size_t i = 0; i < ds.n.size(); ++i)
    if (ds.n[i] >= k.trend_from && rep.samples_per_n[i] > 0) tail.push_back(ds.value[i]);
  const auto mk = stats::mann_kendall(tail);
  r.extra["mann_kendall"] = {{"s", mk.s}, {"z", mk.z}, {"p_up", mk.p_up}};
  r.verdict("no_contraction_violations", rep.violations == 0, static_cast<double>(rep.violations), 0.0);
  r.verdict("distortion_no_upward_trend", !mk.upward(k.trend_level), mk.p_up, k.trend_level);
  c.emit(r, "verify.json");
}

const std::map<std::string, std::function<void(Ctx&)>>& table() {
  static const std::map<std::string, std::function<void(Ctx&)>> t{
      {"validate", cmd_validate}, {"tails", cmd_tails},   {"curves", cmd_curves},     {"ulam", cmd_ulam},
      {"correlations", cmd_correlations}, {"limits", cmd_limits}, {"infinite", cmd_infinite}, {"verify", cmd_verify}};
  return t;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [k, _] : table()) n.push_back(k);
    return n;
  }();
  return names;
}

int run_command(const std::string& name, const ExperimentConfig& cfg) {
  const auto it = table().find(name);
  if (it == table().end()) {
    std::fprintf(stderr, "unknown command '%s'\n", name.c_str());
    return kExitConfig;
  }
  const fs::path out = cfg.output_dir;
  RunManifest manifest(name, cfg.hash());
  Ctx ctx{cfg, out, manifest, resolve_threads(cfg.threads)};
  int code = kExitOk;
  try {
    fs::create_directories(out);
    it->second(ctx);
    code = ctx.pass ? kExitOk : kExitVerdict;
  } catch (const ConfigError& e) {
    manifest.fail("config", e.what());
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    code = kExitConfig;
  } catch (const AdmissibilityError& e) {
    manifest.fail("params", e.what());
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    code = kExitConfig;
  } catch (const NonConvergence& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    code = kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    code = kExitNumeric;
  }
  try {
    manifest.write(out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "could not write manifest: %s\n", e.what());
  }
  return code;
}

}  // namespace pmmap::cli
