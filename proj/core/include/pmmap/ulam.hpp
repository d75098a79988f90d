#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "pmmap/map_core.hpp"
#include "pmmap/orbit.hpp"

namespace pmmap {

enum class MeshRegion { M, Y };

// Tensor mesh in (x, theta). Cell index = ix * theta_cells + it, so x is the slow index.
struct Mesh {
  MeshRegion region = MeshRegion::Y;
  int x_cells = 0;  // number of x-columns actually present
  int theta_cells = 0;
  double grading = 1.0;
  std::vector<double> x_edges;  // x_cells + 1 increasing edges
  std::vector<double> area;     // Lebesgue area of cell intersected with the region

  int cells() const { return x_cells * theta_cells; }
  int index(int ix, int it) const { return ix * theta_cells + it; }
  int column(int cell) const { return cell / theta_cells; }
  int row_theta(int cell) const { return cell % theta_cells; }
  double theta_lo(int it) const { return static_cast<double>(it) / theta_cells; }
  double theta_hi(int it) const { return static_cast<double>(it + 1) / theta_cells; }
  // Cell containing p, or -1 outside the x-range.
  int locate(Point p) const;
  int locate_x(double x) const;
};

// Uniform mesh on [3/4, b_max] x T.
Mesh make_mesh_Y(const MapParams& params, int x_cells, int theta_cells);
// Mesh on [0, b_max] x T: uniform width b_max/x_cells, geometric with ratio `grading`
// toward 0 down to `x_floor`, then one floor cell [0, x_floor]. x = 3/4 is always an edge.
// x_floor <= 0 picks max(1e-10, (1e-8/c0)^(1/gamma)).
Mesh make_mesh_M(const MapParams& params, int x_cells, int theta_cells, double grading = 1.05, double x_floor = 0.0);

struct UlamOperator {
  Mesh mesh;
  std::vector<std::int64_t> row_ptr;  // CSR
  std::vector<std::int32_t> col;
  std::vector<double> val;
  std::vector<std::int32_t> phi;  // per entry return time (operators over F only)
  std::vector<std::complex<double>> cval;  // twisted entries; empty when untwisted
  std::optional<std::complex<double>> omega;

  std::vector<std::int32_t> modal_phi;  // per source cell (F only)
  std::vector<std::uint8_t> flagged;    // per source cell: >20% of weight off the modal phi
  std::vector<std::uint8_t> active;     // per cell: row carries mass
  std::int64_t samples = 0;
  std::int64_t overflow_samples = 0;
  double discarded_mass = 0.0;  // area-weighted fraction dropped by return overflows

  int rows() const { return static_cast<int>(row_ptr.size()) - 1; }
  std::int64_t nnz() const { return static_cast<std::int64_t>(col.size()); }
  bool twisted() const { return !cval.empty(); }
  bool has_phi() const { return !phi.empty(); }

  // out = in * P (mass push-forward); in and out have size rows().
  void push(const std::vector<double>& in, std::vector<double>& out) const;
  void push(const std::vector<std::complex<double>>& in, std::vector<std::complex<double>>& out) const;
  double row_sum(int i) const;
  double row_abs_sum(int i) const;
};

struct UlamBuildOptions {
  int samples_per_cell = 64;
  std::uint64_t seed = 17;
  int threads = 1;
  std::int64_t return_cap = kDefaultReturnCap;
  // First x-column of Y: geometric strata toward 3/4 to resolve the phi tail.
  int graded_strata = 40;
  int graded_theta_samples = 8;
  double graded_min_offset = 0.0;            // <= 0: from graded_phi_target
  std::int64_t graded_phi_target = 10'000;  // return time at the innermost stratum
};

UlamOperator build_ulam_F(const Mesh& mesh, const MapParams& params, const UlamBuildOptions& opt = {});
// One step of f on an M mesh: per cell, samples_per_cell theta-lines pushed forward exactly in x.
UlamOperator build_ulam_f(const Mesh& mesh, const MapParams& params, const UlamBuildOptions& opt = {});

enum class Normalization { probability, y_restricted };

struct DensityEstimate {
  Mesh mesh;
  std::vector<double> values;  // density per cell
  std::vector<double> mass;    // values * area
  Normalization normalization = Normalization::probability;

  double total_mass() const;
  double mass_Y() const;  // mass in cells with x >= 3/4
  double min_active() const;
  // theta-average of the density on the first column to the right of x = 3/4.
  double trace_at_branch() const;
  double value_at(Point p) const;
};

struct SpectralReport {
  std::complex<double> leading_eigenvalue{1.0, 0.0};
  double leading_modulus = 1.0;     // growth-rate estimate of the iteration
  double subleading_modulus = 0.0;  // NaN when not estimated
  double residual = 0.0;
  std::int64_t sweeps = 0;
  bool converged = false;
};

enum class Solver { automatic, power, gauss_seidel };

struct SolveOptions {
  double tolerance = 1e-12;
  std::int64_t max_sweeps = 100000;
  bool estimate_subleading = true;
  int deflation_sweeps = 300;
  Solver solver = Solver::automatic;
  std::uint64_t seed = 5;
};

struct InvariantDensityResult {
  DensityEstimate density;
  SpectralReport spectral;
};

// Left fixed vector. Throws NonConvergence.
InvariantDensityResult invariant_density(const UlamOperator& op, const SolveOptions& opt = {},
                                         std::optional<Normalization> normalization = std::nullopt);

// Entries multiplied by omega^phi(sample). Throws PhiUnavailable.
UlamOperator twist(const UlamOperator& op, std::complex<double> omega);

struct TwistedSpectrum {
  std::complex<double> omega;
  SpectralReport report;
};

// Leading eigenvalue of a twisted operator by complex power iteration started at `start`.
SpectralReport leading_eigenvalue(const UlamOperator& op, const std::vector<double>& start, double tolerance = 1e-10,
                                  std::int64_t max_sweeps = 20000);

struct EigenPoint {
  double t = 0.0;
  std::complex<double> lambda{1.0, 0.0};
  double residual = 0.0;
  bool converged = false;
};

// R_t with weights exp(i t (phi - psi_shift)); power iteration from the invariant mass.
std::vector<EigenPoint> eigenvalue_curve(const UlamOperator& op, double psi_shift, const std::vector<double>& t_grid,
                                         const std::vector<double>& start_mass, double tolerance = 1e-12,
                                         std::int64_t max_sweeps = 20000);

// Mean return time and return-time law under the discrete invariant mass.
double mean_return_time(const UlamOperator& op, const std::vector<double>& mass);
// P(phi = n) for n = 0..n_max (index 0 unused).
std::vector<double> return_time_pmf(const UlamOperator& op, const std::vector<double>& mass, std::int64_t n_max);

// Cell averages of an observable over the mesh (sub x sub midpoint rule, clipped to the region).
std::vector<double> cell_average(const Mesh& mesh, const MapParams& params, const Observable& v, int sub = 4);

// rho(n) = sum_j ((v pi) P^n)_j w_j - (v.pi)(w.pi), n = 1..n_max.
std::vector<double> correlation_operator(const UlamOperator& op_f, const DensityEstimate& density,
                                         const std::vector<double>& v_cell, const std::vector<double>& w_cell,
                                         std::int64_t n_max);

// L1 distance between densities on nested meshes sharing the same region and envelope.
double density_l1_distance(const DensityEstimate& coarse, const DensityEstimate& fine, int sub = 4);

}  // namespace pmmap
