#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmmap/errors.hpp"
#include "pmmap/experiments.hpp"
#include "pmmap/map_core.hpp"

namespace pmmap::cli {

using Json = nlohmann::json;

// Reads keys from one JSON object and rejects whatever was not read.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path);
  bool has(const std::string& key) const;
  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return as<T>(key);
  }
  template <class T>
  T require(const std::string& key) {
    if (!has(key)) throw ConfigError(qualified(key), "missing required key");
    return as<T>(key);
  }
  const Json& raw(const std::string& key);
  ObjectReader child(const std::string& key);
  void finish() const;  // throws ConfigError naming the first unknown key
  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  template <class T>
  T as(const std::string& key) {
    used_.insert(key);
    try {
      return obj_->at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(qualified(key), "wrong type");
    }
  }
  const Json* obj_;
  std::string path_;
  std::set<std::string> used_;
};

struct TailsConfig {
  std::int64_t n_min = 1;
  std::int64_t n_max = 2000;
  int quadrature_points = 4096;
  std::int64_t check_n = 1000;
  double tolerance = 0.05;
};

struct CurvesConfig {
  std::vector<std::int64_t> levels{1, 2, 5, 10, 20};
  int grid_points = 4096;
  std::int64_t asymptotic_lo = 200;
  std::int64_t asymptotic_hi = 2000;
  double x_tolerance = 0.05;
  double gap_tolerance = 0.10;
  std::int64_t slope_levels = 200;
};

struct UlamConfig {
  std::string region = "Y";
  int x_cells = 256;
  int theta_cells = 256;
  int samples_per_cell = 64;
  double grading = 1.05;
  double x_floor = 0.0;
  double tolerance = 1e-12;
  double eigen_tolerance = 1e-8;
  bool write_operator = true;
};

struct CorrelationsConfig {
  ObservableSpec v = indicator_rect(0.8, 0.9, 0.0, 0.5);
  ObservableSpec w = indicator_rect(0.8, 0.9, 0.0, 0.5);
  std::int64_t n_max = 100;
  std::int64_t mc_n_max = 30;
  std::int64_t orbit_len = 1'000'000;
  std::int64_t n_orbits = 64;
  int bootstrap = 200;
  int x_cells = 512;
  int theta_cells = 32;
  int samples_per_cell = 16;
  std::int64_t fit_lo = 10;
  std::int64_t fit_hi = 100;
  double slope_tolerance = 0.25;
  double agreement_sigmas = 3.0;
  bool monte_carlo = true;
  bool operator_based = true;
};

struct LimitsConfig {
  std::string experiment = "clt";  // clt | stable | large_deviation | moment
  ObservableSpec v = default_observable();
  std::string mean = "orbit";       // orbit | none | <number>
  std::optional<double> mean_value;
  std::int64_t mean_orbits = 64;
  std::int64_t mean_length = 1'000'000;
  std::int64_t n = 10'000;
  std::int64_t samples = 10'000;
  std::vector<std::int64_t> n_grid{100, 200, 400, 800, 1600};
  double threshold = 0.1;
  double p = 2.0;
  std::string start = "invariant";
  double ks_tolerance = 0.02;
  double sigma_tolerance = 0.10;
  double hill_lo = 1.1, hill_hi = 1.6;
  double iqr_tolerance = 0.20;
  double slope_bound = -0.7;
  double exponent_tolerance = 0.3;
};

struct InfiniteConfig {
  ObservableSpec v = indicator_rect(0.75, 1.0, 0.0, 1.0);
  ObservableSpec w = indicator_rect(0.75, 1.0, 0.0, 1.0);
  std::vector<std::int64_t> n_grid{64, 128, 256, 512, 1024, 2048, 4096, 8192};
  std::int64_t samples = 100'000;
  std::int64_t burn_in = 1000;
  int thin = 3;
  int chains = 16;
  double ratio_tolerance = 0.20;
};

struct VerifyConfig {
  std::int64_t samples = 100'000;
  double lambda = 0.3;
  double eps0 = 1e-3;
  int n_max = 50;
  double trend_level = 0.05;
  int trend_from = 10;  // trend test over n in [trend_from, n_max]
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string preset;  // empty when explicit params are given
  double gamma = 0.0, c0 = 0.0, pert_amp = 0.0;
  std::string output_dir = "out";
  int threads = 0;  // 0 = all logical cores
  TailsConfig tails;
  CurvesConfig curves;
  UlamConfig ulam;
  CorrelationsConfig correlations;
  LimitsConfig limits;
  InfiniteConfig infinite;
  VerifyConfig verify;
  Json canonical;  // the parsed document after overrides, keys sorted

  MapParams params() const;             // validated; throws AdmissibilityError
  MapParams params_unchecked() const;
  std::string hash() const;             // 16 hex digits over the canonical dump
};

ObservableSpec parse_observable(ObjectReader r);
Json observable_to_json(const ObservableSpec& v);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> output_dir;
  std::optional<std::string> preset;
};

// Environment variables PMMAP_SEED, PMMAP_THREADS, PMMAP_OUT, PMMAP_PRESET.
Overrides environment_overrides();

// Order of precedence: file < environment < command line. Throws ConfigError.
ExperimentConfig load_config(const std::optional<std::string>& path, const Overrides& env, const Overrides& flags);
ExperimentConfig parse_config(Json doc);

std::string fnv1a_hex(const std::string& s);

}  // namespace pmmap::cli
