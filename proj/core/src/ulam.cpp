#include "pmmap/ulam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pmmap/errors.hpp"
#include "pmmap/parallel.hpp"

namespace pmmap {

int Mesh::locate_x(double x) const {
  if (x_edges.empty() || x < x_edges.front() || x > x_edges.back()) return -1;
  const auto it = std::upper_bound(x_edges.begin(), x_edges.end(), x);
  return std::clamp(static_cast<int>(it - x_edges.begin()) - 1, 0, x_cells - 1);
}

int Mesh::locate(Point p) const {
  const int ix = locate_x(p.x);
  if (ix < 0) return -1;
  const int it = std::min(theta_cells - 1, static_cast<int>(wrap_unit(p.theta) * theta_cells));
  return index(ix, it);
}

namespace {

void compute_areas(Mesh& m, const MapParams& params) {
  constexpr int Q = 16;
  m.area.assign(static_cast<std::size_t>(m.cells()), 0.0);
  const double dth = 1.0 / m.theta_cells;
  for (int it = 0; it < m.theta_cells; ++it) {
    double env[Q];
    for (int q = 0; q < Q; ++q) env[q] = upper_boundary_X(m.theta_lo(it) + (q + 0.5) * dth / Q, params);
    for (int ix = 0; ix < m.x_cells; ++ix) {
      const double xl = m.x_edges[static_cast<std::size_t>(ix)], xr = m.x_edges[static_cast<std::size_t>(ix + 1)];
      double len = 0.0;
      for (double e : env) len += std::max(0.0, std::min(xr, e) - xl);
      m.area[static_cast<std::size_t>(m.index(ix, it))] = len / Q * dth;
    }
  }
}

}  // namespace

Mesh make_mesh_Y(const MapParams& params, int x_cells, int theta_cells) {
  if (x_cells < 1 || theta_cells < 1) throw std::invalid_argument("mesh needs positive cell counts");
  Mesh m;
  m.region = MeshRegion::Y;
  m.x_cells = x_cells;
  m.theta_cells = theta_cells;
  m.grading = 1.0;
  const double b = upper_boundary_X_max(params);
  m.x_edges.resize(static_cast<std::size_t>(x_cells + 1));
  for (int k = 0; k <= x_cells; ++k)
    m.x_edges[static_cast<std::size_t>(k)] = kBranchPoint + (b - kBranchPoint) * k / x_cells;
  m.x_edges.back() = b;
  compute_areas(m, params);
  return m;
}

Mesh make_mesh_M(const MapParams& params, int x_cells, int theta_cells, double grading, double x_floor) {
  if (x_cells < 1 || theta_cells < 1) throw std::invalid_argument("mesh needs positive cell counts");
  if (!(grading >= 1.0)) throw std::invalid_argument("grading must be >= 1");
  Mesh m;
  m.region = MeshRegion::M;
  m.theta_cells = theta_cells;
  m.grading = grading;
  const double b = upper_boundary_X_max(params);
  const double w = b / x_cells;
  if (x_floor <= 0.0) x_floor = std::max(1e-10, std::pow(1e-8 / params.c0(), 1.0 / params.gamma()));
  std::vector<double> lower{kBranchPoint};
  for (double e = kBranchPoint;;) {
    double next = e - w;
    if (grading > 1.0) next = std::max(next, e / grading);
    if (next <= x_floor) break;
    lower.push_back(next);
    e = next;
  }
  lower.push_back(std::min(x_floor, 0.5 * lower.back()));
  lower.push_back(0.0);
  std::reverse(lower.begin(), lower.end());
  const int n_up = std::max(1, static_cast<int>(std::ceil((b - kBranchPoint) / w - 1e-9)));
  m.x_edges = lower;
  for (int k = 1; k <= n_up; ++k) m.x_edges.push_back(kBranchPoint + (b - kBranchPoint) * k / n_up);
  m.x_edges.back() = b;
  m.x_cells = static_cast<int>(m.x_edges.size()) - 1;
  compute_areas(m, params);
  return m;
}

void UlamOperator::push(const std::vector<double>& in, std::vector<double>& out) const {
  out.assign(in.size(), 0.0);
  const int n = rows();
  for (int i = 0; i < n; ++i) {
    const double m = in[static_cast<std::size_t>(i)];
    if (m == 0.0) continue;
    for (auto k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
      out[static_cast<std::size_t>(col[static_cast<std::size_t>(k)])] += m * val[static_cast<std::size_t>(k)];
  }
}

void UlamOperator::push(const std::vector<std::complex<double>>& in, std::vector<std::complex<double>>& out) const {
  out.assign(in.size(), {0.0, 0.0});
  const int n = rows();
  const bool tw = twisted();
  for (int i = 0; i < n; ++i) {
    const auto m = in[static_cast<std::size_t>(i)];
    if (m == 0.0) continue;
    for (auto k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      out[static_cast<std::size_t>(col[kk])] += tw ? m * cval[kk] : m * val[kk];
    }
  }
}

double UlamOperator::row_sum(int i) const {
  double s = 0.0;
  for (auto k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
    s += val[static_cast<std::size_t>(k)];
  return s;
}

double UlamOperator::row_abs_sum(int i) const {
  double s = 0.0;
  for (auto k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
    s += twisted() ? std::abs(cval[static_cast<std::size_t>(k)]) : std::abs(val[static_cast<std::size_t>(k)]);
  return s;
}

namespace {

struct RawEntry {
  std::int32_t col;
  std::int32_t phi;
  double w;
};

struct RowBuild {
  std::vector<RawEntry> entries;
  double accepted = 0.0;
  double overflow = 0.0;
  std::int64_t samples = 0;
  std::int64_t overflow_samples = 0;
};

void merge_row(std::vector<RawEntry>& e) {
  std::sort(e.begin(), e.end(), [](const RawEntry& a, const RawEntry& b) {
    return a.col != b.col ? a.col < b.col : a.phi < b.phi;
  });
  std::size_t out = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (out > 0 && e[out - 1].col == e[i].col && e[out - 1].phi == e[i].phi) e[out - 1].w += e[i].w;
    else e[out++] = e[i];
  }
  e.resize(out);
}

// Redirect landings in cells that carry no row to the nearest active cell below.
int remap_target(const Mesh& m, const std::vector<std::uint8_t>& active, int c) {
  if (active[static_cast<std::size_t>(c)]) return c;
  const int it = m.row_theta(c);
  for (int ix = m.column(c); ix >= 0; --ix)
    if (active[static_cast<std::size_t>(m.index(ix, it))]) return m.index(ix, it);
  for (int ix = m.column(c); ix < m.x_cells; ++ix)
    if (active[static_cast<std::size_t>(m.index(ix, it))]) return m.index(ix, it);
  return c;
}

UlamOperator assemble(const Mesh& mesh, std::vector<RowBuild>& rows, bool with_phi) {
  UlamOperator op;
  op.mesh = mesh;
  const int n = mesh.cells();
  op.active.assign(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i)
    op.active[static_cast<std::size_t>(i)] = (rows[static_cast<std::size_t>(i)].accepted > 0.0 &&
                                              !rows[static_cast<std::size_t>(i)].entries.empty());
  op.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  double lost = 0.0, tot = 0.0;
  if (with_phi) {
    op.modal_phi.assign(static_cast<std::size_t>(n), 0);
    op.flagged.assign(static_cast<std::size_t>(n), 0);
  }
  for (int i = 0; i < n; ++i) {
    auto& r = rows[static_cast<std::size_t>(i)];
    op.samples += r.samples;
    op.overflow_samples += r.overflow_samples;
    const double a = mesh.area[static_cast<std::size_t>(i)];
    if (r.accepted + r.overflow > 0.0) {
      lost += a * r.overflow / (r.accepted + r.overflow);
      tot += a;
    }
    if (!op.active[static_cast<std::size_t>(i)]) {
      r.entries.clear();
    } else {
      for (auto& e : r.entries) {
        e.col = remap_target(mesh, op.active, e.col);
        e.w /= r.accepted;
      }
      merge_row(r.entries);
      if (with_phi) {
        std::vector<std::pair<std::int32_t, double>> by_phi;
        for (const auto& e : r.entries) by_phi.emplace_back(e.phi, e.w);
        std::sort(by_phi.begin(), by_phi.end());
        std::int32_t best = 0;
        double best_w = -1.0, cur_w = 0.0;
        for (std::size_t k = 0; k < by_phi.size(); ++k) {
          cur_w += by_phi[k].second;
          if (k + 1 == by_phi.size() || by_phi[k + 1].first != by_phi[k].first) {
            if (cur_w > best_w) best_w = cur_w, best = by_phi[k].first;
            cur_w = 0.0;
          }
        }
        op.modal_phi[static_cast<std::size_t>(i)] = best;
        op.flagged[static_cast<std::size_t>(i)] = (1.0 - best_w) > 0.2;
      }
    }
    op.row_ptr[static_cast<std::size_t>(i) + 1] =
        op.row_ptr[static_cast<std::size_t>(i)] + static_cast<std::int64_t>(r.entries.size());
  }
  op.discarded_mass = tot > 0.0 ? lost / tot : 0.0;
  const auto nnz = static_cast<std::size_t>(op.row_ptr.back());
  op.col.resize(nnz);
  op.val.resize(nnz);
  if (with_phi) op.phi.resize(nnz);
  for (int i = 0; i < n; ++i) {
    auto k = static_cast<std::size_t>(op.row_ptr[static_cast<std::size_t>(i)]);
    for (const auto& e : rows[static_cast<std::size_t>(i)].entries) {
      op.col[k] = e.col;
      op.val[k] = e.w;
      if (with_phi) op.phi[k] = e.phi;
      ++k;
    }
    std::vector<RawEntry>().swap(rows[static_cast<std::size_t>(i)].entries);
  }
  return op;
}

}  // namespace

UlamOperator build_ulam_F(const Mesh& mesh, const MapParams& params, const UlamBuildOptions& opt) {
  if (mesh.region != MeshRegion::Y) throw std::invalid_argument("build_ulam_F needs a mesh on Y");
  const int n = mesh.cells();
  std::vector<RowBuild> rows(static_cast<std::size_t>(n));
  const DerivedConstants dc = derive_constants(params);
  double min_off = opt.graded_min_offset;
  if (min_off <= 0.0)  // return time about graded_phi_target at the innermost stratum edge
    min_off = 0.25 * dc.c1 * std::pow(static_cast<double>(opt.graded_phi_target), -dc.alpha);

  parallel_for(n, opt.threads, [&](std::int64_t ci) {
    const int c = static_cast<int>(ci);
    auto& row = rows[static_cast<std::size_t>(c)];
    if (mesh.area[static_cast<std::size_t>(c)] <= 0.0) return;
    const int ix = mesh.column(c), it = mesh.row_theta(c);
    const double xl = mesh.x_edges[static_cast<std::size_t>(ix)], xr = mesh.x_edges[static_cast<std::size_t>(ix + 1)];
    const double tl = mesh.theta_lo(it), dth = 1.0 / mesh.theta_cells;
    BitSource bits(Philox(opt.seed, derive_stream(0xF0F, static_cast<std::uint64_t>(c))));
    Philox& g = bits.generator();

    auto run = [&](double x, double th, double w) {
      ++row.samples;
      OrbitState s{x, ThetaWord::from_double(th)};
      s.w.bits = (s.w.bits & ~std::uint64_t{0x7ff}) | bits.take(11);
      if (s.x > upper_boundary_X(s.w.value(), params)) return;
      const std::int64_t phi = advance_to_Y(s, params, &bits, opt.return_cap);
      if (phi < 0) {
        row.overflow += w;
        ++row.overflow_samples;
        return;
      }
      int target = mesh.locate(s.point());
      if (target < 0) target = mesh.index(mesh.x_cells - 1, std::min(mesh.theta_cells - 1, static_cast<int>(s.w.value() * mesh.theta_cells)));
      row.entries.push_back({target, static_cast<std::int32_t>(phi), w});
      row.accepted += w;
    };

    if (ix == 0 && opt.graded_strata > 0 && min_off < xr - xl) {
      const int K = opt.graded_strata, m = std::max(1, opt.graded_theta_samples);
      const double wid = xr - xl;
      const double r = std::pow(min_off / wid, 1.0 / K);
      // [xl, xl + min_off) is not simulated; its mass is reported as discarded
      row.overflow += min_off / wid;
      for (int k = 0; k < K; ++k) {
        const double hi = wid * std::pow(r, k);
        const double lo = wid * std::pow(r, k + 1);
        for (int j = 0; j < m; ++j) {
          const double x = xl + lo + (hi - lo) * g.uniform();
          const double th = tl + (j + g.uniform()) / m * dth;
          run(x, th, (hi - lo) / wid / m);
        }
      }
    } else {
      const double sa = g.uniform(), sb = g.uniform();
      for (int k = 0; k < opt.samples_per_cell; ++k) {
        const auto [u, v] = r2_point(static_cast<std::uint64_t>(k), sa, sb);
        run(xl + u * (xr - xl), tl + v * dth, 1.0 / opt.samples_per_cell);
      }
    }
  }, 16);
  return assemble(mesh, rows, true);
}

namespace {

double solve_bracketed(double target, double theta, double lo, double hi, const MapParams& params) {
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double g = params.f1_left(x, theta) - target;
    if (g == 0.0) return x;
    if (g > 0.0) hi = x;
    else lo = x;
    double next = x - g / params.df1_dx_left(x, theta);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - x);
    x = next;
    if (step <= 4.0 * std::numeric_limits<double>::epsilon() * x) break;
  }
  return x;
}

}  // namespace

UlamOperator build_ulam_f(const Mesh& mesh, const MapParams& params, const UlamBuildOptions& opt) {
  if (mesh.region != MeshRegion::M) throw std::invalid_argument("build_ulam_f needs a mesh on M");
  const int n = mesh.cells();
  const int T = mesh.theta_cells;
  const int per_quarter = std::max(1, (opt.samples_per_cell + 3) / 4);
  std::vector<RowBuild> rows(static_cast<std::size_t>(n));

  parallel_for(n, opt.threads, [&](std::int64_t ci) {
    const int c = static_cast<int>(ci);
    auto& row = rows[static_cast<std::size_t>(c)];
    if (mesh.area[static_cast<std::size_t>(c)] <= 0.0) return;
    const int ix = mesh.column(c), it = mesh.row_theta(c);
    const double xl = mesh.x_edges[static_cast<std::size_t>(ix)], xr = mesh.x_edges[static_cast<std::size_t>(ix + 1)];
    const double tl = mesh.theta_lo(it), dth = 1.0 / T;
    const bool linear = xl >= kBranchPoint;
    Philox g(opt.seed, derive_stream(0xF1F, static_cast<std::uint64_t>(c)));
    for (int q = 0; q < 4; ++q) {
      const int t_target = (4 * it + q) % T;
      for (int s = 0; s < per_quarter; ++s) {
        const double th = tl + (q + (s + g.uniform()) / per_quarter) * dth / 4.0;
        const double top = std::min(xr, upper_boundary_X(th, params));
        ++row.samples;
        if (!(top > xl)) continue;
        const double len = top - xl;
        auto image = [&](double x) { return linear ? 4.0 * x - 3.0 : params.f1_left(x, th); };
        auto preimage = [&](double e, double lo, double hi) {
          return linear ? (e + 3.0) / 4.0 : solve_bracketed(e, th, lo, hi, params);
        };
        const double X0 = image(xl), X1 = image(top);
        int k0 = mesh.locate_x(X0), k1 = mesh.locate_x(X1);
        if (k0 < 0) k0 = X0 < mesh.x_edges.front() ? 0 : mesh.x_cells - 1;
        if (k1 < 0) k1 = X1 < mesh.x_edges.front() ? 0 : mesh.x_cells - 1;
        double prev = xl;
        for (int k = k0; k <= k1; ++k) {
          const double e_hi = mesh.x_edges[static_cast<std::size_t>(k + 1)];
          const double cut = (k == k1 || e_hi >= X1) ? top : preimage(e_hi, prev, top);
          const double part = cut - prev;
          if (part > 0.0) row.entries.push_back({mesh.index(k, t_target), 0, part});
          prev = cut;
        }
        row.accepted += len;
      }
    }
  }, 16);
  return assemble(mesh, rows, false);
}

double DensityEstimate::total_mass() const { return std::accumulate(mass.begin(), mass.end(), 0.0); }

double DensityEstimate::mass_Y() const {
  double s = 0.0;
  for (int c = 0; c < mesh.cells(); ++c)
    if (mesh.x_edges[static_cast<std::size_t>(mesh.column(c))] >= kBranchPoint) s += mass[static_cast<std::size_t>(c)];
  return s;
}

double DensityEstimate::min_active() const {
  double m = std::numeric_limits<double>::infinity();
  for (int c = 0; c < mesh.cells(); ++c)
    if (mesh.area[static_cast<std::size_t>(c)] > 0.0) m = std::min(m, values[static_cast<std::size_t>(c)]);
  return m;
}

double DensityEstimate::trace_at_branch() const {
  int ix = 0;
  while (ix < mesh.x_cells && mesh.x_edges[static_cast<std::size_t>(ix)] < kBranchPoint) ++ix;
  if (ix >= mesh.x_cells) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (int it = 0; it < mesh.theta_cells; ++it) s += values[static_cast<std::size_t>(mesh.index(ix, it))];
  return s / mesh.theta_cells;
}

double DensityEstimate::value_at(Point p) const {
  const int c = mesh.locate(p);
  return c < 0 ? 0.0 : values[static_cast<std::size_t>(c)];
}

namespace {

void normalize_mass(const Mesh& mesh, std::vector<double>& m, Normalization norm) {
  double s = 0.0;
  if (norm == Normalization::probability) {
    s = std::accumulate(m.begin(), m.end(), 0.0);
  } else {
    for (int c = 0; c < mesh.cells(); ++c)
      if (mesh.x_edges[static_cast<std::size_t>(mesh.column(c))] >= kBranchPoint) s += m[static_cast<std::size_t>(c)];
  }
  if (s > 0.0)
    for (auto& v : m) v /= s;
}

double l1(const std::vector<double>& a) {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

double subleading_estimate(const UlamOperator& op, const std::vector<double>& pi, int sweeps, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(op.rows());
  Philox g(seed, 0xde71);
  std::vector<double> v(n), out;
  for (std::size_t i = 0; i < n; ++i) v[i] = op.active[i] ? g.uniform() - 0.5 : 0.0;
  auto project = [&](std::vector<double>& x) {
    const double s = std::accumulate(x.begin(), x.end(), 0.0);
    const double ps = std::accumulate(pi.begin(), pi.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) x[i] -= s * pi[i] / ps;
    const double nrm = l1(x);
    if (nrm > 0.0)
      for (auto& e : x) e /= nrm;
  };
  project(v);
  const int window = std::max(10, sweeps / 3);
  double log_growth = 0.0;
  for (int k = 0; k < sweeps; ++k) {
    op.push(v, out);
    const double s = std::accumulate(out.begin(), out.end(), 0.0);
    const double ps = std::accumulate(pi.begin(), pi.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) out[i] -= s * pi[i] / ps;
    const double nrm = l1(out);
    if (nrm == 0.0) return 0.0;
    if (k >= sweeps - window) log_growth += std::log(nrm);
    for (auto& e : out) e /= nrm;
    v.swap(out);
  }
  return std::exp(log_growth / window);
}

}  // namespace

InvariantDensityResult invariant_density(const UlamOperator& op, const SolveOptions& opt,
                                         std::optional<Normalization> normalization) {
  if (op.twisted()) throw std::invalid_argument("invariant_density needs an untwisted operator");
  const Mesh& mesh = op.mesh;
  const auto n = static_cast<std::size_t>(op.rows());
  const Normalization norm = normalization.value_or(Normalization::probability);
  Solver solver = opt.solver;
  if (solver == Solver::automatic) solver = mesh.region == MeshRegion::M ? Solver::gauss_seidel : Solver::power;

  std::vector<double> pi(n, 0.0), next;
  for (std::size_t i = 0; i < n; ++i) pi[i] = op.active[i] ? mesh.area[i] : 0.0;
  normalize_mass(mesh, pi, norm);

  SpectralReport rep;
  double change = std::numeric_limits<double>::infinity();
  if (solver == Solver::power) {
    for (rep.sweeps = 0; rep.sweeps < opt.max_sweeps; ++rep.sweeps) {
      op.push(pi, next);
      normalize_mass(mesh, next, norm);
      change = 0.0;
      for (std::size_t i = 0; i < n; ++i) change += std::abs(next[i] - pi[i]);
      change /= std::max(l1(next), 1e-300);
      pi.swap(next);
      if (change < opt.tolerance) {
        ++rep.sweeps;
        break;
      }
    }
  } else {
    // Column access: inflow lists and off-diagonal out-rates.
    std::vector<std::int64_t> cptr(n + 1, 0);
    for (std::size_t k = 0; k < op.col.size(); ++k) ++cptr[static_cast<std::size_t>(op.col[k]) + 1];
    for (std::size_t j = 0; j < n; ++j) cptr[j + 1] += cptr[j];
    std::vector<std::int32_t> src(op.col.size());
    std::vector<double> w(op.col.size());
    std::vector<double> out_rate(n, 0.0);
    {
      std::vector<std::int64_t> fill(cptr.begin(), cptr.end() - 1);
      for (std::size_t i = 0; i < n; ++i)
        for (auto k = op.row_ptr[i]; k < op.row_ptr[i + 1]; ++k) {
          const auto j = static_cast<std::size_t>(op.col[static_cast<std::size_t>(k)]);
          const double p = op.val[static_cast<std::size_t>(k)];
          if (j == i) continue;
          out_rate[i] += p;
          const auto slot = static_cast<std::size_t>(fill[j]++);
          src[slot] = static_cast<std::int32_t>(i);
          w[slot] = p;
        }
      // Off-diagonal inflow of column j occupies [cptr[j], fill[j]).
      std::vector<std::int64_t> start(cptr.begin(), cptr.end() - 1);
      std::vector<std::int64_t> stop(fill.begin(), fill.end());
      for (rep.sweeps = 0; rep.sweeps < opt.max_sweeps; ++rep.sweeps) {
        change = 0.0;
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (!op.active[j] || out_rate[j] <= 0.0) continue;
          double in = 0.0;
          for (auto k = start[j]; k < stop[j]; ++k)
            in += pi[static_cast<std::size_t>(src[static_cast<std::size_t>(k)])] * w[static_cast<std::size_t>(k)];
          const double v = in / out_rate[j];
          change += std::abs(v - pi[j]);
          total += v;
          pi[j] = v;
        }
        normalize_mass(mesh, pi, norm);
        if (total > 0.0 && change / total < opt.tolerance) {
          ++rep.sweeps;
          break;
        }
      }
    }
  }

  op.push(pi, next);
  double res = 0.0;
  for (std::size_t i = 0; i < n; ++i) res += std::abs(next[i] - pi[i]);
  rep.residual = res / std::max(l1(pi), 1e-300);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) num += next[i] * pi[i], den += pi[i] * pi[i];
  rep.leading_eigenvalue = den > 0.0 ? num / den : 0.0;
  rep.leading_modulus = std::abs(rep.leading_eigenvalue);
  rep.converged = change < opt.tolerance || rep.residual < 1e-9;
  if (!rep.converged) throw NonConvergence("invariant density iteration", rep.residual);
  rep.subleading_modulus = opt.estimate_subleading ? subleading_estimate(op, pi, opt.deflation_sweeps, opt.seed)
                                                   : std::numeric_limits<double>::quiet_NaN();

  InvariantDensityResult r;
  r.spectral = rep;
  r.density.mesh = mesh;
  r.density.normalization = norm;
  r.density.mass = pi;
  r.density.values.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    r.density.values[i] = mesh.area[i] > 0.0 ? pi[i] / mesh.area[i] : 0.0;
  return r;
}

UlamOperator twist(const UlamOperator& op, std::complex<double> omega) {
  if (!op.has_phi()) throw PhiUnavailable();
  UlamOperator out = op;
  out.omega = omega;
  out.cval.resize(op.val.size());
  const double r = std::abs(omega), a = std::arg(omega);
  for (std::size_t k = 0; k < op.val.size(); ++k) {
    const double ph = op.phi[k];
    out.cval[k] = op.val[k] * std::polar(std::pow(r, ph), a * ph);
  }
  return out;
}

SpectralReport leading_eigenvalue(const UlamOperator& op, const std::vector<double>& start, double tolerance,
                                  std::int64_t max_sweeps) {
  const auto n = start.size();
  std::vector<std::complex<double>> x(n), y;
  double nrm = 0.0;
  for (std::size_t i = 0; i < n; ++i) x[i] = start[i], nrm += start[i] * start[i];
  nrm = std::sqrt(nrm);
  for (auto& e : x) e /= nrm;
  SpectralReport rep;
  rep.subleading_modulus = std::numeric_limits<double>::quiet_NaN();
  std::complex<double> lam{0.0, 0.0};
  std::vector<double> growth;
  for (rep.sweeps = 0; rep.sweeps < max_sweeps;) {
    op.push(x, y);
    ++rep.sweeps;
    std::complex<double> dot{0.0, 0.0};
    double yy = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += y[i] * std::conj(x[i]), yy += std::norm(y[i]);
    lam = dot;
    double r2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) r2 += std::norm(y[i] - lam * x[i]);
    rep.residual = std::sqrt(r2);
    const double ny = std::sqrt(yy);
    growth.push_back(ny);
    if (ny == 0.0) break;
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ny;
    if (rep.residual <= tolerance * std::max(std::abs(lam), 1e-300)) {
      rep.converged = true;
      break;
    }
  }
  rep.leading_eigenvalue = lam;
  // Growth rate over the last third of the sweeps; robust when eigenvalues compete.
  const std::size_t w = std::max<std::size_t>(1, growth.size() / 3);
  double lg = 0.0;
  for (std::size_t k = growth.size() - w; k < growth.size(); ++k) lg += std::log(std::max(growth[k], 1e-300));
  rep.leading_modulus = std::exp(lg / static_cast<double>(w));
  return rep;
}

std::vector<EigenPoint> eigenvalue_curve(const UlamOperator& op, double psi_shift, const std::vector<double>& t_grid,
                                         const std::vector<double>& start_mass, double tolerance,
                                         std::int64_t max_sweeps) {
  if (!op.has_phi()) throw PhiUnavailable();
  std::vector<EigenPoint> out;
  UlamOperator rt = op;
  rt.cval.resize(op.val.size());
  for (double t : t_grid) {
    EigenPoint e;
    e.t = t;
    if (t == 0.0) {
      e.converged = true;
      out.push_back(e);
      continue;
    }
    for (std::size_t k = 0; k < op.val.size(); ++k)
      rt.cval[k] = op.val[k] * std::polar(1.0, t * (op.phi[k] - psi_shift));
    const auto rep = leading_eigenvalue(rt, start_mass, tolerance, max_sweeps);
    e.lambda = rep.leading_eigenvalue;
    e.residual = rep.residual;
    e.converged = rep.converged;
    out.push_back(e);
  }
  return out;
}

double mean_return_time(const UlamOperator& op, const std::vector<double>& mass) {
  if (!op.has_phi()) throw PhiUnavailable();
  double s = 0.0, m = 0.0;
  for (int i = 0; i < op.rows(); ++i) {
    const double mi = mass[static_cast<std::size_t>(i)];
    m += mi;
    for (auto k = op.row_ptr[static_cast<std::size_t>(i)]; k < op.row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
      s += mi * op.val[static_cast<std::size_t>(k)] * op.phi[static_cast<std::size_t>(k)];
  }
  return s / m;
}

std::vector<double> return_time_pmf(const UlamOperator& op, const std::vector<double>& mass, std::int64_t n_max) {
  if (!op.has_phi()) throw PhiUnavailable();
  std::vector<double> p(static_cast<std::size_t>(n_max + 1), 0.0);
  double m = 0.0;
  for (int i = 0; i < op.rows(); ++i) {
    const double mi = mass[static_cast<std::size_t>(i)];
    m += mi;
    for (auto k = op.row_ptr[static_cast<std::size_t>(i)]; k < op.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
      const auto ph = op.phi[static_cast<std::size_t>(k)];
      if (ph <= n_max) p[static_cast<std::size_t>(ph)] += mi * op.val[static_cast<std::size_t>(k)];
    }
  }
  for (auto& v : p) v /= m;
  return p;
}

std::vector<double> cell_average(const Mesh& mesh, const MapParams& params, const Observable& v, int sub) {
  std::vector<double> out(static_cast<std::size_t>(mesh.cells()), 0.0);
  for (int c = 0; c < mesh.cells(); ++c) {
    const int ix = mesh.column(c), it = mesh.row_theta(c);
    const double xl = mesh.x_edges[static_cast<std::size_t>(ix)], xr = mesh.x_edges[static_cast<std::size_t>(ix + 1)];
    double s = 0.0;
    int cnt = 0;
    for (int a = 0; a < sub; ++a)
      for (int b = 0; b < sub; ++b) {
        const Point p{xl + (a + 0.5) / sub * (xr - xl), mesh.theta_lo(it) + (b + 0.5) / sub / mesh.theta_cells};
        if (p.x > upper_boundary_X(p.theta, params)) continue;
        s += v(p);
        ++cnt;
      }
    out[static_cast<std::size_t>(c)] = cnt ? s / cnt : 0.0;
  }
  return out;
}

std::vector<double> correlation_operator(const UlamOperator& op_f, const DensityEstimate& density,
                                         const std::vector<double>& v_cell, const std::vector<double>& w_cell,
                                         std::int64_t n_max) {
  const auto n = density.mass.size();
  const double tot = density.total_mass();
  double ev = 0.0, ew = 0.0;
  std::vector<double> q(n), next;
  for (std::size_t i = 0; i < n; ++i) {
    q[i] = v_cell[i] * density.mass[i] / tot;
    ev += q[i];
    ew += w_cell[i] * density.mass[i] / tot;
  }
  std::vector<double> rho;
  rho.reserve(static_cast<std::size_t>(n_max));
  for (std::int64_t k = 1; k <= n_max; ++k) {
    op_f.push(q, next);
    q.swap(next);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += q[i] * w_cell[i];
    rho.push_back(s - ev * ew);
  }
  return rho;
}

double density_l1_distance(const DensityEstimate& coarse, const DensityEstimate& fine, int sub) {
  double s = 0.0;
  const Mesh& m = fine.mesh;
  for (int c = 0; c < m.cells(); ++c) {
    const double a = m.area[static_cast<std::size_t>(c)];
    if (a <= 0.0) continue;
    const int ix = m.column(c), it = m.row_theta(c);
    const double xl = m.x_edges[static_cast<std::size_t>(ix)], xr = m.x_edges[static_cast<std::size_t>(ix + 1)];
    double acc = 0.0;
    for (int u = 0; u < sub; ++u)
      for (int v = 0; v < sub; ++v) {
        const Point p{xl + (u + 0.5) / sub * (xr - xl), m.theta_lo(it) + (v + 0.5) / sub / m.theta_cells};
        acc += std::abs(coarse.value_at(p) - fine.values[static_cast<std::size_t>(c)]);
      }
    s += a * acc / (sub * sub);
  }
  return s;
}

}  // namespace pmmap
