#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmmap/orbit.hpp"
#include "pmmap/partition.hpp"
#include "pmmap/ulam.hpp"

namespace pmmap::cli {

using Json = nlohmann::json;
namespace fs = std::filesystem;

// 17 significant digits, '.' decimal point regardless of locale.
std::string format_double(double v);
double parse_double(const std::string& s);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t column(const std::string& name) const;  // throws if missing
};

void write_csv(const fs::path& path, const CsvTable& t);
CsvTable read_csv(const fs::path& path);

struct Series {
  std::vector<std::int64_t> n;
  std::vector<double> value;
  std::vector<double> stderr_;
};
void write_series_csv(const fs::path& path, const Series& s);
Series read_series_csv(const fs::path& path);

void write_curve_csv(const fs::path& path, const BoundaryCurve& c);
BoundaryCurve read_curve_csv(const fs::path& path);  // level and hash are not stored

void write_returns_csv(const fs::path& path, const std::vector<ReturnEvent>& events);
std::vector<ReturnEvent> read_returns_csv(const fs::path& path);  // landing is not stored

void write_excursions_csv(const fs::path& path, const std::vector<ExcursionRecord>& records);
std::vector<ExcursionRecord> read_excursions_csv(const fs::path& path);

struct OperatorEntry {
  std::int64_t row = 0;
  std::int64_t col = 0;
  double re = 0.0;
  double im = 0.0;
};
void write_operator_csv(const fs::path& path, const UlamOperator& op);
std::vector<OperatorEntry> read_operator_csv(const fs::path& path);

struct DensityRow {
  double x_lo = 0, x_hi = 0, theta_lo = 0, theta_hi = 0, value = 0;
};
void write_density_csv(const fs::path& path, const DensityEstimate& d);
std::vector<DensityRow> read_density_csv(const fs::path& path);

void write_json(const fs::path& path, const Json& j);
Json read_json(const fs::path& path);

Json params_json(const MapParams& params);

// {experiment, params, seed, n_grid, estimates, stderr, fitted{slope,intercept,r2}, verdicts}
struct Report {
  std::string experiment;
  Json params;
  std::uint64_t seed = 0;
  std::vector<std::int64_t> n_grid;
  std::vector<double> estimates;
  std::vector<double> stderr_;
  Json fitted = Json::object();
  Json verdicts = Json::object();
  Json extra = Json::object();  // experiment-specific diagnostics

  void verdict(const std::string& name, bool pass, double value, double target);
  bool all_pass() const;
  Json to_json() const;
  static Report from_json(const Json& j);
};

Json fit_json(double slope, double intercept, double r2);

class RunManifest {
 public:
  RunManifest(std::string command, std::string config_hash);
  void begin_stage(const std::string& name);
  void end_stage(const std::string& status = "ok");
  void warn(const std::string& message);
  void artifact(const fs::path& p);
  void fail(const std::string& stage, const std::string& message);
  bool failed() const { return failed_; }
  Json to_json() const;
  void write(const fs::path& dir) const;

 private:
  using Clock = std::chrono::steady_clock;
  std::string command_, hash_;
  Clock::time_point start_;
  Json stages_ = Json::array();
  Json warnings_ = Json::array();
  Json artifacts_ = Json::array();
  Json failures_ = Json::array();
  std::string stage_;
  Clock::time_point stage_start_;
  bool failed_ = false;
};

}  // namespace pmmap::cli
