#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pmmap/map_core.hpp"
#include "pmmap/partition.hpp"
#include "pmmap/random.hpp"

namespace pmmap {

// Orbit state with theta as a 64-bit word (see ThetaWord).
struct OrbitState {
  double x = 0.0;
  ThetaWord w;
  Point point() const { return {x, w.value()}; }
};

// Start word for a random-digit orbit: the double theta, refined below 2^-53 with fresh digits.
inline OrbitState random_start(Point p, BitSource& digits) {
  ThetaWord w = ThetaWord::from_double(p.theta);
  w.bits = (w.bits & ~std::uint64_t{0x7ff}) | digits.take(11);
  return {p.x, w};
}

// One application of f. digits == nullptr refills zeros (exact double arithmetic).
inline void step(OrbitState& s, const MapParams& params, BitSource* digits) {
  s.x = params.f1(s.x, s.w.value());
  s.w.shift(1, digits);
}

// Apply f until x >= 3/4 (at least once). Returns the step count, or -1 if cap was hit
// (state is then left where the cap stopped it).
std::int64_t advance_to_Y(OrbitState& s, const MapParams& params, BitSource* digits, std::int64_t cap);

Point iterate(Point p, std::int64_t n, const MapParams& params);
std::vector<Point> orbit(Point p, std::int64_t n, const MapParams& params);  // p, f(p), ..., f^n(p)
void for_each_orbit_point(Point p, std::int64_t n, const MapParams& params, const std::function<void(const Point&)>& visit);

struct ReturnEvent {
  Point start;
  Point landing;
  std::int64_t phi = 0;
  CellIndex cell;
};

// Exact-arithmetic first return of p in Y. Throws NotInYError, ReturnOverflowError.
ReturnEvent first_return(Point p, const MapParams& params, std::int64_t cap = kDefaultReturnCap);
// Random-digit variant: the theta orbit is that of a Lebesgue-random refinement of p.theta.
ReturnEvent first_return(Point p, const MapParams& params, BitSource& digits, std::int64_t cap = kDefaultReturnCap);

struct ZConfig {
  double delta = 20.0;  // side c*delta = 0.2
  Point center{kBranchPoint, 0.0};
  double c_frac = 0.01;

  double side() const { return c_frac * delta; }
  bool in_Z(Point p, const MapParams& params) const { return in_square(p, side(), params); }
  bool in_Zprime(Point p, const MapParams& params) const { return in_square(p, 2.0 * side(), params); }

 private:
  bool in_square(Point p, double s, const MapParams& params) const;
};

struct ExcursionRecord {
  std::int64_t rho_z = 0;
  std::int64_t tau = 0;
  std::int64_t max_phi = 0;
};

inline constexpr std::int64_t kDefaultExcursionCap = 100'000;

// Apply F from p in Z until the iterate is back in Z. Throws ExcursionOverflowError, ReturnOverflowError.
ExcursionRecord excursion_to_Z(OrbitState& s, const ZConfig& z, const MapParams& params, BitSource& digits,
                               std::int64_t cap = kDefaultExcursionCap, std::int64_t return_cap = kDefaultReturnCap,
                               std::vector<std::int64_t>* phis = nullptr);
ExcursionRecord excursion_to_Z(Point p, const ZConfig& z, const MapParams& params, BitSource& digits,
                               std::int64_t cap = kDefaultExcursionCap);

enum class Region { M, X, Y, Z };

// i.i.d. uniform points; identical (count, region, seed) give identical output.
std::vector<Point> sample_lebesgue(std::int64_t count, Region region, std::uint64_t seed, const MapParams& params,
                                   const ZConfig& z = {});

// Approximate mu_Y stream: Lebesgue start in Y, burn_in F-steps discarded, then successive
// F-iterates (a correlated chain).
class MuYStream {
 public:
  MuYStream(const MapParams& params, std::uint64_t seed, std::uint64_t stream, std::int64_t burn_in,
            std::int64_t return_cap = kDefaultReturnCap, bool restart_on_overflow = false);
  // Current point (in Y) and its word.
  const OrbitState& state() const { return s_; }
  // Advance by one F-step; returns phi of the step taken.
  std::int64_t advance();
  BitSource& digits() { return digits_; }
  std::int64_t overflows() const { return overflows_; }

 private:
  void restart();
  const MapParams* params_;
  BitSource digits_;
  OrbitState s_;
  std::int64_t cap_;
  bool restart_;
  std::int64_t overflows_ = 0;
};

struct MuYSample {
  std::vector<Point> points;
  std::vector<std::int64_t> phi;  // return time of each emitted point
  std::int64_t overflows = 0;
};

MuYSample sample_mu_Y(std::int64_t count, std::int64_t burn_in, std::uint64_t seed, const MapParams& params,
                      int chains = 1, int threads = 1, std::int64_t return_cap = kDefaultReturnCap);

struct BirkhoffSample {
  std::int64_t n = 0;
  double value = 0.0;
  Point start;
};

using Observable = std::function<double(const Point&)>;

// v_n at each start along a random-digit orbit (substream per start index).
std::vector<BirkhoffSample> birkhoff(const Observable& v, std::int64_t n, const std::vector<Point>& starts,
                                     const MapParams& params, std::uint64_t seed, int threads = 1);

struct ExcursionBatch {
  std::vector<ExcursionRecord> records;
  std::int64_t excursion_overflows = 0;
  std::int64_t return_overflows = 0;
};

// Consecutive Z-excursions along burned-in chains (starts distributed as mu restricted to Z).
ExcursionBatch run_excursions(std::int64_t count, const ZConfig& z, const MapParams& params, std::uint64_t seed,
                              int chains = 1, int threads = 1, std::int64_t burn_in = 1000,
                              std::int64_t cap = kDefaultExcursionCap);

}  // namespace pmmap
