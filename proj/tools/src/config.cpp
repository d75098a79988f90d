#include "pmmap/cli/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pmmap/errors.hpp"

namespace pmmap::cli {

ObjectReader::ObjectReader(const Json& j, std::string path) : obj_(&j), path_(std::move(path)) {
  if (!j.is_object()) throw ConfigError(path_, "expected an object");
}

bool ObjectReader::has(const std::string& key) const { return obj_->contains(key); }

const Json& ObjectReader::raw(const std::string& key) {
  used_.insert(key);
  return obj_->at(key);
}

ObjectReader ObjectReader::child(const std::string& key) {
  used_.insert(key);
  return ObjectReader(obj_->at(key), qualified(key));
}

void ObjectReader::finish() const {
  for (const auto& [k, _] : obj_->items())
    if (!used_.count(k)) throw ConfigError(qualified(k), "unknown key");
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::pair<double, double> range2(ObjectReader& r, const std::string& key, std::pair<double, double> fallback) {
  if (!r.has(key)) return fallback;
  const Json& j = r.raw(key);
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(r.qualified(key), "expected [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

template <class T>
std::vector<T> list(ObjectReader& r, const std::string& key, std::vector<T> fallback) {
  if (!r.has(key)) return fallback;
  const Json& j = r.raw(key);
  if (!j.is_array() || j.empty()) throw ConfigError(r.qualified(key), "expected a non-empty array");
  try {
    return j.get<std::vector<T>>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(r.qualified(key), "wrong element type");
  }
}

std::int64_t positive(ObjectReader& r, const std::string& key, std::int64_t fallback) {
  const auto v = r.get<std::int64_t>(key, fallback);
  if (v < 1) throw ConfigError(r.qualified(key), "must be positive");
  return v;
}

void parse_tails(ObjectReader r, TailsConfig& c) {
  c.n_min = positive(r, "n_min", c.n_min);
  c.n_max = positive(r, "n_max", c.n_max);
  c.quadrature_points = static_cast<int>(positive(r, "quadrature_points", c.quadrature_points));
  c.check_n = positive(r, "check_n", c.check_n);
  c.tolerance = r.get("tolerance", c.tolerance);
  if (c.n_min > c.n_max) throw ConfigError(r.qualified("n_min"), "exceeds n_max");
  r.finish();
}

void parse_curves(ObjectReader r, CurvesConfig& c) {
  c.levels = list(r, "levels", c.levels);
  c.grid_points = static_cast<int>(positive(r, "grid_points", c.grid_points));
  c.asymptotic_lo = positive(r, "asymptotic_lo", c.asymptotic_lo);
  c.asymptotic_hi = positive(r, "asymptotic_hi", c.asymptotic_hi);
  c.x_tolerance = r.get("x_tolerance", c.x_tolerance);
  c.gap_tolerance = r.get("gap_tolerance", c.gap_tolerance);
  c.slope_levels = positive(r, "slope_levels", c.slope_levels);
  for (auto n : c.levels)
    if (n < 0) throw ConfigError(r.qualified("levels"), "levels must be nonnegative");
  r.finish();
}

void parse_ulam(ObjectReader r, UlamConfig& c) {
  c.region = r.get<std::string>("region", c.region);
  if (c.region != "Y" && c.region != "M") throw ConfigError(r.qualified("region"), "must be \"Y\" or \"M\"");
  c.x_cells = static_cast<int>(positive(r, "x_cells", c.x_cells));
  c.theta_cells = static_cast<int>(positive(r, "theta_cells", c.theta_cells));
  c.samples_per_cell = static_cast<int>(positive(r, "samples_per_cell", c.samples_per_cell));
  c.grading = r.get("grading", c.grading);
  c.x_floor = r.get("x_floor", c.x_floor);
  c.tolerance = r.get("tolerance", c.tolerance);
  c.eigen_tolerance = r.get("eigen_tolerance", c.eigen_tolerance);
  c.write_operator = r.get("write_operator", c.write_operator);
  r.finish();
}

void parse_correlations(ObjectReader r, CorrelationsConfig& c) {
  if (r.has("v")) c.v = parse_observable(r.child("v"));
  if (r.has("w")) c.w = parse_observable(r.child("w"));
  c.n_max = positive(r, "n_max", c.n_max);
  c.mc_n_max = positive(r, "mc_n_max", c.mc_n_max);
  c.orbit_len = positive(r, "orbit_len", c.orbit_len);
  c.n_orbits = positive(r, "n_orbits", c.n_orbits);
  c.bootstrap = static_cast<int>(positive(r, "bootstrap", c.bootstrap));
  c.x_cells = static_cast<int>(positive(r, "x_cells", c.x_cells));
  c.theta_cells = static_cast<int>(positive(r, "theta_cells", c.theta_cells));
  c.samples_per_cell = static_cast<int>(positive(r, "samples_per_cell", c.samples_per_cell));
  c.fit_lo = positive(r, "fit_lo", c.fit_lo);
  c.fit_hi = positive(r, "fit_hi", c.fit_hi);
  c.slope_tolerance = r.get("slope_tolerance", c.slope_tolerance);
  c.agreement_sigmas = r.get("agreement_sigmas", c.agreement_sigmas);
  c.monte_carlo = r.get("monte_carlo", c.monte_carlo);
  c.operator_based = r.get("operator", c.operator_based);
  r.finish();
}

void parse_limits(ObjectReader r, LimitsConfig& c) {
  c.experiment = r.get<std::string>("experiment", c.experiment);
  if (c.experiment != "clt" && c.experiment != "stable" && c.experiment != "large_deviation" && c.experiment != "moment")
    throw ConfigError(r.qualified("experiment"), "must be clt, stable, large_deviation or moment");
  if (r.has("v")) c.v = parse_observable(r.child("v"));
  if (r.has("mean")) {
    const Json& m = r.raw("mean");
    if (m.is_number()) {
      c.mean = "value";
      c.mean_value = m.get<double>();
    } else if (m.is_string() && (m == "orbit" || m == "none")) {
      c.mean = m.get<std::string>();
    } else {
      throw ConfigError(r.qualified("mean"), "must be a number, \"orbit\" or \"none\"");
    }
  }
  c.mean_orbits = positive(r, "mean_orbits", c.mean_orbits);
  c.mean_length = positive(r, "mean_length", c.mean_length);
  c.n = positive(r, "n", c.n);
  c.samples = positive(r, "samples", c.samples);
  c.n_grid = list(r, "n_grid", c.n_grid);
  c.threshold = r.get("threshold", c.threshold);
  c.p = r.get("p", c.p);
  if (c.p < 1.0) throw ConfigError(r.qualified("p"), "must be at least 1");
  c.start = r.get<std::string>("start", c.start);
  if (c.start != "invariant" && c.start != "lebesgue") throw ConfigError(r.qualified("start"), "must be invariant or lebesgue");
  c.ks_tolerance = r.get("ks_tolerance", c.ks_tolerance);
  c.sigma_tolerance = r.get("sigma_tolerance", c.sigma_tolerance);
  std::tie(c.hill_lo, c.hill_hi) = range2(r, "hill_range", {c.hill_lo, c.hill_hi});
  c.iqr_tolerance = r.get("iqr_tolerance", c.iqr_tolerance);
  c.slope_bound = r.get("slope_bound", c.slope_bound);
  c.exponent_tolerance = r.get("exponent_tolerance", c.exponent_tolerance);
  r.finish();
}

void parse_infinite(ObjectReader r, InfiniteConfig& c) {
  if (r.has("v")) c.v = parse_observable(r.child("v"));
  if (r.has("w")) c.w = parse_observable(r.child("w"));
  c.n_grid = list(r, "n_grid", c.n_grid);
  c.samples = positive(r, "samples", c.samples);
  c.burn_in = r.get("burn_in", c.burn_in);
  c.thin = static_cast<int>(positive(r, "thin", c.thin));
  c.chains = static_cast<int>(positive(r, "chains", c.chains));
  c.ratio_tolerance = r.get("ratio_tolerance", c.ratio_tolerance);
  r.finish();
}

void parse_verify(ObjectReader r, VerifyConfig& c) {
  c.samples = positive(r, "samples", c.samples);
  c.lambda = r.get("lambda", c.lambda);
  c.eps0 = r.get("eps0", c.eps0);
  c.n_max = static_cast<int>(positive(r, "n_max", c.n_max));
  c.trend_level = r.get("trend_level", c.trend_level);
  c.trend_from = r.get("trend_from", c.trend_from);
  r.finish();
}

}  // namespace

ObservableSpec parse_observable(ObjectReader r) {
  ObservableSpec v;
  const auto kind = r.require<std::string>("kind");
  if (kind == "indicator_rect") {
    v.kind = ObservableKind::indicator_rect;
    std::tie(v.x_lo, v.x_hi) = range2(r, "x", {0.0, 0.0});
    std::tie(v.theta_lo, v.theta_hi) = range2(r, "theta", {0.0, 1.0});
  } else if (kind == "smooth_trig") {
    v.c = r.get("c", v.c);
    v.cx = r.get("cx", v.cx);
    v.ccos = r.get("ccos", v.ccos);
    v.csin = r.get("csin", v.csin);
  } else if (kind == "custom_grid") {
    v.kind = ObservableKind::custom_grid;
    v.grid_x = r.require<int>("grid_x");
    v.grid_theta = r.require<int>("grid_theta");
    v.grid = list<double>(r, "values", {});
  } else {
    throw ConfigError(r.qualified("kind"), "must be indicator_rect, smooth_trig or custom_grid");
  }
  v.mean_corrected = r.get("mean_corrected", false);
  v.mean = r.get("mean", 0.0);
  r.finish();
  v.validate();
  return v;
}

Json observable_to_json(const ObservableSpec& v) {
  Json j;
  switch (v.kind) {
    case ObservableKind::indicator_rect:
      j = {{"kind", "indicator_rect"}, {"x", {v.x_lo, v.x_hi}}, {"theta", {v.theta_lo, v.theta_hi}}};
      break;
    case ObservableKind::smooth_trig:
      j = {{"kind", "smooth_trig"}, {"c", v.c}, {"cx", v.cx}, {"ccos", v.ccos}, {"csin", v.csin}};
      break;
    case ObservableKind::custom_grid:
      j = {{"kind", "custom_grid"}, {"grid_x", v.grid_x}, {"grid_theta", v.grid_theta}, {"values", v.grid}};
      break;
  }
  j["mean_corrected"] = v.mean_corrected;
  if (v.mean_corrected) j["mean"] = v.mean;
  return j;
}

ExperimentConfig parse_config(Json doc) {
  if (!doc.is_object()) throw ConfigError("", "config must be a JSON object");
  ExperimentConfig c;
  ObjectReader r(doc, "");
  c.seed = r.require<std::uint64_t>("seed");
  if (r.has("params")) {
    auto p = r.child("params");
    c.gamma = p.require<double>("gamma");
    c.c0 = p.require<double>("c0");
    c.pert_amp = p.get("pert_amp", 0.0);
    p.finish();
    if (r.has("preset")) throw ConfigError("preset", "give either preset or params, not both");
  } else {
    c.preset = r.require<std::string>("preset");
    try {
      const auto& pr = find_preset(c.preset);
      c.gamma = pr.gamma;
      c.c0 = pr.c0;
    } catch (const std::exception&) {
      throw ConfigError("preset", "unknown preset '" + c.preset + "'");
    }
    c.pert_amp = r.get("pert_amp", 0.0);
  }
  c.output_dir = r.get<std::string>("output_dir", c.output_dir);
  c.threads = r.get("threads", c.threads);
  if (c.threads < 0) throw ConfigError("threads", "must be nonnegative");
  if (r.has("tails")) parse_tails(r.child("tails"), c.tails);
  if (r.has("curves")) parse_curves(r.child("curves"), c.curves);
  if (r.has("ulam")) parse_ulam(r.child("ulam"), c.ulam);
  if (r.has("correlations")) parse_correlations(r.child("correlations"), c.correlations);
  if (r.has("limits")) parse_limits(r.child("limits"), c.limits);
  if (r.has("infinite")) parse_infinite(r.child("infinite"), c.infinite);
  if (r.has("verify")) parse_verify(r.child("verify"), c.verify);
  r.finish();
  c.canonical = std::move(doc);
  return c;
}

MapParams ExperimentConfig::params() const { return make_params(gamma, c0, pert_amp); }
MapParams ExperimentConfig::params_unchecked() const { return make_params_unchecked(gamma, c0, pert_amp); }

std::string ExperimentConfig::hash() const {
  // threads and output_dir do not change results
  Json j = canonical;
  j.erase("threads");
  j.erase("output_dir");
  return fnv1a_hex(j.dump());
}

Overrides environment_overrides() {
  Overrides o;
  try {
    if (const char* s = std::getenv("PMMAP_SEED")) o.seed = std::stoull(s);
    if (const char* s = std::getenv("PMMAP_THREADS")) o.threads = std::stoi(s);
  } catch (const std::exception&) {
    throw ConfigError("PMMAP_SEED/PMMAP_THREADS", "not an integer");
  }
  if (const char* s = std::getenv("PMMAP_OUT")) o.output_dir = s;
  if (const char* s = std::getenv("PMMAP_PRESET")) o.preset = s;
  return o;
}

namespace {

void apply(Json& doc, const Overrides& o) {
  if (o.seed) doc["seed"] = *o.seed;
  if (o.threads) doc["threads"] = *o.threads;
  if (o.output_dir) doc["output_dir"] = *o.output_dir;
  if (o.preset) {
    doc["preset"] = *o.preset;
    doc.erase("params");
  }
}

}  // namespace

ExperimentConfig load_config(const std::optional<std::string>& path, const Overrides& env, const Overrides& flags) {
  Json doc = Json::object();
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("", "cannot open config file " + *path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      doc = Json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
  }
  if (!doc.is_object()) throw ConfigError("", "config must be a JSON object");
  apply(doc, env);
  apply(doc, flags);
  return parse_config(std::move(doc));
}

}  // namespace pmmap::cli
