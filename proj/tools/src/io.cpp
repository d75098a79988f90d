#include "pmmap/cli/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pmmap/errors.hpp"

namespace pmmap::cli {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return {buf, end};
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw Error("not a number: '" + s + "'");
  return v;
}

namespace {

std::int64_t parse_int(const std::string& s) {
  std::int64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw Error("not an integer: '" + s + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& s) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw Error("not an integer: '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw Error("csv column '" + name + "' missing");
}

void write_csv(const fs::path& path, const CsvTable& t) {
  auto out = open_out(path);
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw Error("empty csv " + path.string());
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size()) throw Error("ragged csv row in " + path.string());
    t.rows.push_back(std::move(cells));
  }
  return t;
}

void write_series_csv(const fs::path& path, const Series& s) {
  CsvTable t{{"n", "value", "stderr"}, {}};
  for (std::size_t i = 0; i < s.n.size(); ++i)
    t.rows.push_back({std::to_string(s.n[i]), format_double(s.value[i]),
                      format_double(i < s.stderr_.size() ? s.stderr_[i] : 0.0)});
  write_csv(path, t);
}

Series read_series_csv(const fs::path& path) {
  const auto t = read_csv(path);
  const auto cn = t.column("n"), cv = t.column("value"), cs = t.column("stderr");
  Series s;
  for (const auto& r : t.rows) {
    s.n.push_back(parse_int(r[cn]));
    s.value.push_back(parse_double(r[cv]));
    s.stderr_.push_back(parse_double(r[cs]));
  }
  return s;
}

void write_curve_csv(const fs::path& path, const BoundaryCurve& c) {
  CsvTable t{{"theta", "x"}, {}};
  for (std::size_t i = 0; i < c.theta.size(); ++i) t.rows.push_back({format_double(c.theta[i]), format_double(c.x[i])});
  write_csv(path, t);
}

BoundaryCurve read_curve_csv(const fs::path& path) {
  const auto t = read_csv(path);
  const auto ct = t.column("theta"), cx = t.column("x");
  BoundaryCurve c;
  for (const auto& r : t.rows) {
    c.theta.push_back(parse_double(r[ct]));
    c.x.push_back(parse_double(r[cx]));
  }
  return c;
}

void write_returns_csv(const fs::path& path, const std::vector<ReturnEvent>& events) {
  CsvTable t{{"start_x", "start_theta", "phi", "cell_n", "cell_j"}, {}};
  for (const auto& e : events)
    t.rows.push_back({format_double(e.start.x), format_double(e.start.theta), std::to_string(e.phi),
                      std::to_string(e.cell.n), std::to_string(e.cell.j)});
  write_csv(path, t);
}

std::vector<ReturnEvent> read_returns_csv(const fs::path& path) {
  const auto t = read_csv(path);
  const auto a = t.column("start_x"), b = t.column("start_theta"), c = t.column("phi"), d = t.column("cell_n"),
             e = t.column("cell_j");
  std::vector<ReturnEvent> out;
  for (const auto& r : t.rows) {
    ReturnEvent ev;
    ev.start = {parse_double(r[a]), parse_double(r[b])};
    ev.phi = parse_int(r[c]);
    ev.cell.n = parse_int(r[d]);
    ev.cell.j = parse_uint(r[e]);
    ev.cell.level = static_cast<int>(std::min<std::int64_t>(ev.cell.n, kMaxStripLevel));
    out.push_back(ev);
  }
  return out;
}

void write_excursions_csv(const fs::path& path, const std::vector<ExcursionRecord>& records) {
  CsvTable t{{"rho_z", "tau", "max_phi"}, {}};
  for (const auto& e : records)
    t.rows.push_back({std::to_string(e.rho_z), std::to_string(e.tau), std::to_string(e.max_phi)});
  write_csv(path, t);
}

std::vector<ExcursionRecord> read_excursions_csv(const fs::path& path) {
  const auto t = read_csv(path);
  const auto a = t.column("rho_z"), b = t.column("tau"), c = t.column("max_phi");
  std::vector<ExcursionRecord> out;
  for (const auto& r : t.rows) out.push_back({parse_int(r[a]), parse_int(r[b]), parse_int(r[c])});
  return out;
}

void write_operator_csv(const fs::path& path, const UlamOperator& op) {
  auto out = open_out(path);
  out << "row,col,value_re,value_im\n";
  for (int i = 0; i < op.rows(); ++i)
    for (auto k = op.row_ptr[static_cast<std::size_t>(i)]; k < op.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
      const auto uk = static_cast<std::size_t>(k);
      const double re = op.twisted() ? op.cval[uk].real() : op.val[uk];
      const double im = op.twisted() ? op.cval[uk].imag() : 0.0;
      out << i << ',' << op.col[uk] << ',' << format_double(re) << ',' << format_double(im) << '\n';
    }
}

std::vector<OperatorEntry> read_operator_csv(const fs::path& path) {
  const auto t = read_csv(path);
  const auto a = t.column("row"), b = t.column("col"), c = t.column("value_re"), d = t.column("value_im");
  std::vector<OperatorEntry> out;
  out.reserve(t.rows.size());
  for (const auto& r : t.rows) out.push_back({parse_int(r[a]), parse_int(r[b]), parse_double(r[c]), parse_double(r[d])});
  return out;
}

void write_density_csv(const fs::path& path, const DensityEstimate& d) {
  auto out = open_out(path);
  out << "cell_x_lo,cell_x_hi,cell_theta_lo,cell_theta_hi,value\n";
  const Mesh& m = d.mesh;
  for (int c = 0; c < m.cells(); ++c) {
    const int ix = m.column(c), it = m.row_theta(c);
    out << format_double(m.x_edges[static_cast<std::size_t>(ix)]) << ','
        << format_double(m.x_edges[static_cast<std::size_t>(ix) + 1]) << ',' << format_double(m.theta_lo(it)) << ','
        << format_double(m.theta_hi(it)) << ',' << format_double(d.values[static_cast<std::size_t>(c)]) << '\n';
  }
}

std::vector<DensityRow> read_density_csv(const fs::path& path) {
  const auto t = read_csv(path);
  const auto a = t.column("cell_x_lo"), b = t.column("cell_x_hi"), c = t.column("cell_theta_lo"),
             d = t.column("cell_theta_hi"), e = t.column("value");
  std::vector<DensityRow> out;
  out.reserve(t.rows.size());
  for (const auto& r : t.rows)
    out.push_back({parse_double(r[a]), parse_double(r[b]), parse_double(r[c]), parse_double(r[d]), parse_double(r[e])});
  return out;
}

void write_json(const fs::path& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

Json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

Json params_json(const MapParams& params) {
  const auto d = derive_constants(params);
  return {{"gamma", params.gamma()}, {"c0", params.c0()},       {"pert_amp", params.pert_amp()},
          {"base", 4},               {"alpha", d.alpha},        {"c1", d.c1},
          {"cprime", d.cprime}};
}

Json fit_json(double slope, double intercept, double r2) {
  auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  return {{"slope", num(slope)}, {"intercept", num(intercept)}, {"r2", num(r2)}};
}

namespace {

Json num_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num_or_null(x));
  return a;
}

std::vector<double> from_numbers(const Json& a) {
  std::vector<double> out;
  for (const auto& x : a) out.push_back(x.is_null() ? std::nan("") : x.get<double>());
  return out;
}

}  // namespace

void Report::verdict(const std::string& name, bool pass, double value, double target) {
  verdicts[name] = {{"pass", pass}, {"value", num_or_null(value)}, {"target", num_or_null(target)}};
}

bool Report::all_pass() const {
  for (const auto& [_, v] : verdicts.items())
    if (!v.at("pass").get<bool>()) return false;
  return true;
}

Json Report::to_json() const {
  Json j{{"experiment", experiment}, {"params", params},     {"seed", seed},
         {"n_grid", n_grid},         {"estimates", numbers(estimates)}, {"stderr", numbers(stderr_)},
         {"fitted", fitted},         {"verdicts", verdicts}};
  if (!extra.empty()) j["extra"] = extra;
  return j;
}

Report Report::from_json(const Json& j) {
  Report r;
  r.experiment = j.at("experiment").get<std::string>();
  r.params = j.at("params");
  r.seed = j.at("seed").get<std::uint64_t>();
  r.n_grid = j.at("n_grid").get<std::vector<std::int64_t>>();
  r.estimates = from_numbers(j.at("estimates"));
  r.stderr_ = from_numbers(j.at("stderr"));
  r.fitted = j.at("fitted");
  r.verdicts = j.at("verdicts");
  if (j.contains("extra")) r.extra = j.at("extra");
  return r;
}

RunManifest::RunManifest(std::string command, std::string config_hash)
    : command_(std::move(command)), hash_(std::move(config_hash)), start_(Clock::now()) {}

void RunManifest::begin_stage(const std::string& name) {
  stage_ = name;
  stage_start_ = Clock::now();
}

void RunManifest::end_stage(const std::string& status) {
  if (stage_.empty()) return;
  const double s = std::chrono::duration<double>(Clock::now() - stage_start_).count();
  stages_.push_back({{"name", stage_}, {"seconds", s}, {"status", status}});
  stage_.clear();
}

void RunManifest::warn(const std::string& message) { warnings_.push_back(message); }

void RunManifest::artifact(const fs::path& p) { artifacts_.push_back(p.filename().string()); }

void RunManifest::fail(const std::string& stage, const std::string& message) {
  failed_ = true;
  failures_.push_back({{"stage", stage}, {"error", message}});
  if (stage_ == stage) end_stage("failed");
}

Json RunManifest::to_json() const {
  return {{"command", command_},
          {"config_hash", hash_},
          {"version", PMMAP_VERSION},
          {"wall_clock_seconds", std::chrono::duration<double>(Clock::now() - start_).count()},
          {"stages", stages_},
          {"warnings", warnings_},
          {"artifacts", artifacts_},
          {"failed", failed_},
          {"failures", failures_}};
}

void RunManifest::write(const fs::path& dir) const { write_json(dir / "manifest.json", to_json()); }

}  // namespace pmmap::cli
