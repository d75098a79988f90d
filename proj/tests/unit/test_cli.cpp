#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "pmmap/cli/commands.hpp"
#include "pmmap/cli/config.hpp"
#include "pmmap/cli/io.hpp"
#include "pmmap/errors.hpp"

using namespace pmmap;
using namespace pmmap::cli;

namespace {

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("pmmap_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

ExperimentConfig cfg_from(const std::string& text, const fs::path& out) {
  Json j = Json::parse(text);
  j["output_dir"] = out.string();
  return parse_config(j);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(Json::parse(R"({"seed": 4, "preset": "stable", "tails": {"n_max": 50}})"));
  CHECK(c.gamma == 0.75);
  CHECK(c.tails.n_max == 50);
  CHECK_THROWS_AS(parse_config(Json::parse(R"({"seed": 4, "preset": "stable", "tail": {}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(Json::parse(R"({"seed": 4, "preset": "stable", "tails": {"nmax": 5}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(Json::parse(R"({"preset": "stable"})")), ConfigError);
  CHECK_THROWS_AS(parse_config(Json::parse(R"({"seed": 1, "preset": "weird"})")), ConfigError);
  CHECK_THROWS_AS(parse_config(Json::parse(R"({"seed": "x", "preset": "decay"})")), ConfigError);
  const auto e = parse_config(Json::parse(R"({"seed": 1, "params": {"gamma": 0.5, "c0": 0.3, "pert_amp": 0.05}})"));
  CHECK(e.pert_amp == 0.05);
  CHECK_THROWS_AS(parse_config(Json::parse(R"({"seed": 1, "params": {"gamma": 0.5}})")), ConfigError);
}

TEST_CASE("observable configs round trip") {
  const auto j = Json::parse(R"({"kind": "indicator_rect", "x": [0.8, 0.9], "theta": [0.0, 0.5]})");
  const auto v = parse_observable(ObjectReader(j, "v"));
  CHECK(v.x_hi == 0.9);
  const auto back = parse_observable(ObjectReader(observable_to_json(v), "v"));
  CHECK(back.x_lo == v.x_lo);
  CHECK(back.theta_hi == v.theta_hi);
  const auto bad = Json::parse(R"({"kind": "indicator_rect", "x": [0.8, 0.9], "colour": 1})");
  CHECK_THROWS_AS(parse_observable(ObjectReader(bad, "v")), ConfigError);
}

TEST_CASE("precedence and hashing") {
  const auto d = scratch("prec");
  const auto file = d / "c.json";
  std::ofstream(file) << R"({"seed": 3, "preset": "decay", "threads": 2})";
  Overrides env, flags;
  env.seed = 10;
  env.threads = 3;
  flags.seed = 20;
  const auto c = load_config(file.string(), env, flags);
  CHECK(c.seed == 20);
  CHECK(c.threads == 3);
  Overrides none, t1;
  t1.threads = 1;
  CHECK(load_config(file.string(), none, none).hash() == load_config(file.string(), none, t1).hash());
  Overrides s2;
  s2.seed = 99;
  CHECK(load_config(file.string(), none, none).hash() != load_config(file.string(), none, s2).hash());
  std::ofstream(d / "bad.json") << R"({"seed": )";
  CHECK_THROWS_AS(load_config((d / "bad.json").string(), none, none), ConfigError);
  CHECK_THROWS_AS(load_config((d / "missing.json").string(), none, none), ConfigError);
}

TEST_CASE("number formatting round trips") {
  for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0})
    CHECK(parse_double(format_double(x)) == x);
}

TEST_CASE("series csv round trip") {
  const auto d = scratch("csv");
  Series s{{1, 2, 3}, {0.5, 1.0 / 3.0, 1e-20}, {0.0, 0.1, 0.2}};
  write_series_csv(d / "s.csv", s);
  const auto r = read_series_csv(d / "s.csv");
  CHECK(r.n == s.n);
  CHECK(r.value == s.value);
  CHECK(r.stderr_ == s.stderr_);
  CHECK(slurp(d / "s.csv").rfind("n,value,stderr\n", 0) == 0);
}

TEST_CASE("report json round trip") {
  Report r;
  r.experiment = "tails";
  r.seed = 12;
  r.n_grid = {1, 2};
  r.estimates = {0.5, 0.25};
  r.stderr_ = {0, 0};
  r.verdict("ok", true, 1.0, 1.0);
  const auto back = Report::from_json(r.to_json());
  CHECK(back.experiment == "tails");
  CHECK(back.estimates == r.estimates);
  CHECK(back.all_pass());
  r.verdict("bad", false, 0.0, 1.0);
  CHECK_FALSE(r.all_pass());
}

TEST_CASE("validate exit codes") {
  const auto d = scratch("validate");
  CHECK(run_command("validate", cfg_from(R"({"seed": 1, "preset": "decay"})", d)) == kExitOk);
  CHECK(run_command("validate", cfg_from(R"({"seed": 1, "params": {"gamma": 0.5, "c0": 0.5}})", d)) == kExitVerdict);
  const auto j = read_json(d / "validate.json");
  CHECK_FALSE(j["verdicts"]["admissible"]["pass"].get<bool>());
  CHECK(fs::exists(d / "manifest.json"));
  CHECK(run_command("tails", cfg_from(R"({"seed": 1, "params": {"gamma": 0.5, "c0": 0.5}})", d)) == kExitConfig);
  CHECK(read_json(d / "manifest.json")["failed"].get<bool>());
  CHECK(run_command("nonsense", cfg_from(R"({"seed": 1, "preset": "decay"})", d)) == kExitConfig);
}

TEST_CASE("tails output and determinism") {
  const auto a = scratch("tails_a"), b = scratch("tails_b");
  const std::string text = R"({"seed": 7, "preset": "decay", "tails": {"n_max": 30, "check_n": 30, "tolerance": 0.5}})";
  auto ca = cfg_from(text, a);
  ca.threads = 1;
  auto cb = cfg_from(text, b);
  cb.threads = 4;
  CHECK(run_command("tails", ca) == kExitOk);
  CHECK(run_command("tails", cb) == kExitOk);
  const auto s = read_series_csv(a / "tails.csv");
  REQUIRE(s.n.size() == 30);
  CHECK(s.value[0] == doctest::Approx(0.1875));
  CHECK(slurp(a / "tails.csv") == slurp(b / "tails.csv"));
  const auto m = read_json(a / "manifest.json");
  CHECK(m["config_hash"] == read_json(b / "manifest.json")["config_hash"]);
}

TEST_CASE("ulam command writes its artifacts reproducibly") {
  const auto a = scratch("ulam_a"), b = scratch("ulam_b");
  const std::string text = R"({"seed": 2, "preset": "decay", "ulam": {"x_cells": 16, "theta_cells": 8, "samples_per_cell": 8}})";
  auto ca = cfg_from(text, a);
  ca.threads = 1;
  auto cb = cfg_from(text, b);
  cb.threads = 3;
  CHECK(run_command("ulam", ca) == kExitOk);
  CHECK(run_command("ulam", cb) == kExitOk);
  for (const char* f : {"density.csv", "operator.csv", "spectral.json"}) {
    CHECK(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const auto rows = read_density_csv(a / "density.csv");
  CHECK(rows.size() == 128);
  CHECK_FALSE(read_operator_csv(a / "operator.csv").empty());
}

TEST_CASE("curves command") {
  const auto d = scratch("curves");
  auto c = cfg_from(R"({"seed": 1, "preset": "decay", "curves": {"levels": [1, 3], "grid_points": 64}})", d);
  CHECK(run_command("curves", c) == kExitOk);
  const auto curve = read_curve_csv(d / "curve_3.csv");
  CHECK(curve.x.size() == 64);
}
