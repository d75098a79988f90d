#include "pmmap/orbit.hpp"

#include <algorithm>
#include <cmath>

#include "pmmap/errors.hpp"
#include "pmmap/parallel.hpp"

namespace pmmap {

std::int64_t advance_to_Y(OrbitState& s, const MapParams& params, BitSource* digits, std::int64_t cap) {
  std::int64_t n = 0;
  if (!params.theta_dependent()) {
    // f1 ignores theta: run x alone and shift the word once at the end.
    const double c0 = params.c0();
    double x = s.x;
    do {
      if (n >= cap) {
        s.x = x;
        s.w.shift(n, digits);
        return -1;
      }
      x = (x <= kBranchPoint) ? x + c0 * x * params.xpow(x) : 4.0 * x - 3.0;
      ++n;
    } while (x < kBranchPoint);
    s.x = x;
    s.w.shift(n, digits);
    return n;
  }
  do {
    if (n >= cap) return -1;
    step(s, params, digits);
    ++n;
  } while (s.x < kBranchPoint);
  return n;
}

Point iterate(Point p, std::int64_t n, const MapParams& params) {
  OrbitState s{p.x, ThetaWord::from_double(p.theta)};
  if (!params.theta_dependent()) {
    for (std::int64_t k = 0; k < n; ++k) s.x = params.f1(s.x, 0.0);
    s.w.shift(n, nullptr);
    return s.point();
  }
  for (std::int64_t k = 0; k < n; ++k) step(s, params, nullptr);
  return s.point();
}

void for_each_orbit_point(Point p, std::int64_t n, const MapParams& params,
                          const std::function<void(const Point&)>& visit) {
  OrbitState s{p.x, ThetaWord::from_double(p.theta)};
  visit(s.point());
  for (std::int64_t k = 0; k < n; ++k) {
    step(s, params, nullptr);
    visit(s.point());
  }
}

std::vector<Point> orbit(Point p, std::int64_t n, const MapParams& params) {
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(n + 1));
  for_each_orbit_point(p, n, params, [&](const Point& q) { out.push_back(q); });
  return out;
}

namespace {

ReturnEvent first_return_impl(Point p, const MapParams& params, BitSource* digits, std::int64_t cap) {
  if (!in_domain_Y(p, params)) throw NotInYError("first_return needs a point in Y");
  OrbitState s = digits ? random_start(p, *digits) : OrbitState{p.x, ThetaWord::from_double(p.theta)};
  const ThetaWord start_word = s.w;
  const std::int64_t phi = advance_to_Y(s, params, digits, cap);
  if (phi < 0) throw ReturnOverflowError(cap);
  ReturnEvent ev;
  ev.start = p;
  ev.landing = s.point();
  ev.phi = phi;
  ev.cell.n = phi;
  ev.cell.level = static_cast<int>(std::min<std::int64_t>(phi, kMaxStripLevel));
  ev.cell.j = strip_index(start_word, ev.cell.level);
  return ev;
}

}  // namespace

ReturnEvent first_return(Point p, const MapParams& params, std::int64_t cap) {
  return first_return_impl(p, params, nullptr, cap);
}

ReturnEvent first_return(Point p, const MapParams& params, BitSource& digits, std::int64_t cap) {
  return first_return_impl(p, params, &digits, cap);
}

bool ZConfig::in_square(Point p, double s, const MapParams& params) const {
  const double h = 0.5 * s;
  if (std::abs(p.x - center.x) >= h) return false;
  double d = std::abs(wrap_unit(p.theta - center.theta));
  d = std::min(d, 1.0 - d);
  if (d >= h) return false;
  return in_domain_Y(p, params);
}

ExcursionRecord excursion_to_Z(OrbitState& s, const ZConfig& z, const MapParams& params, BitSource& digits,
                               std::int64_t cap, std::int64_t return_cap, std::vector<std::int64_t>* phis) {
  ExcursionRecord r;
  for (;;) {
    if (r.rho_z >= cap) throw ExcursionOverflowError(cap);
    const std::int64_t phi = advance_to_Y(s, params, &digits, return_cap);
    if (phi < 0) throw ReturnOverflowError(return_cap);
    if (phis) phis->push_back(phi);
    ++r.rho_z;
    r.tau += phi;
    r.max_phi = std::max(r.max_phi, phi);
    if (z.in_Z(s.point(), params)) return r;
  }
}

ExcursionRecord excursion_to_Z(Point p, const ZConfig& z, const MapParams& params, BitSource& digits,
                               std::int64_t cap) {
  if (!z.in_Z(p, params)) throw NotInYError("excursion_to_Z needs a start point in Z");
  OrbitState s = random_start(p, digits);
  return excursion_to_Z(s, z, params, digits, cap);
}

namespace {

OrbitState lebesgue_state(Region region, Philox& g, const MapParams& params, const ZConfig& z) {
  const double bmax = upper_boundary_X_max(params);
  for (;;) {
    OrbitState s;
    switch (region) {
      case Region::M:
        s.x = g.uniform();
        s.w.bits = g();
        return s;
      case Region::X:
        s.x = bmax * g.uniform();
        s.w.bits = g();
        break;
      case Region::Y:
        s.x = kBranchPoint + (bmax - kBranchPoint) * g.uniform();
        s.w.bits = g();
        break;
      case Region::Z: {
        const double h = 0.5 * z.side();
        s.x = z.center.x + h * g.uniform();  // left half of the square lies outside Y
        s.w = ThetaWord::from_double(wrap_unit(z.center.theta - h + 2.0 * h * g.uniform()));
        s.w.bits = (s.w.bits & ~std::uint64_t{0x7ff}) | (g() >> 53);
        if (z.in_Z(s.point(), params)) return s;
        continue;
      }
    }
    if (s.x <= upper_boundary_X(s.w.value(), params)) return s;
  }
}

}  // namespace

std::vector<Point> sample_lebesgue(std::int64_t count, Region region, std::uint64_t seed, const MapParams& params,
                                   const ZConfig& z) {
  Philox g(seed, derive_stream(0x1eb, static_cast<std::uint64_t>(region)));
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(std::max<std::int64_t>(0, count)));
  for (std::int64_t i = 0; i < count; ++i) out.push_back(lebesgue_state(region, g, params, z).point());
  return out;
}

MuYStream::MuYStream(const MapParams& params, std::uint64_t seed, std::uint64_t stream, std::int64_t burn_in,
                     std::int64_t return_cap, bool restart_on_overflow)
    : params_(&params), digits_(Philox(seed, stream)), cap_(return_cap), restart_(restart_on_overflow) {
  restart();
  for (std::int64_t i = 0; i < burn_in; ++i) advance();
}

void MuYStream::restart() { s_ = lebesgue_state(Region::Y, digits_.generator(), *params_, ZConfig{}); }

std::int64_t MuYStream::advance() {
  for (;;) {
    const std::int64_t phi = advance_to_Y(s_, *params_, &digits_, cap_);
    if (phi >= 0) return phi;
    ++overflows_;
    if (!restart_) throw ReturnOverflowError(cap_);
    restart();
  }
}

MuYSample sample_mu_Y(std::int64_t count, std::int64_t burn_in, std::uint64_t seed, const MapParams& params,
                      int chains, int threads, std::int64_t return_cap) {
  chains = std::max(1, chains);
  MuYSample out;
  out.points.resize(static_cast<std::size_t>(count));
  out.phi.resize(static_cast<std::size_t>(count));
  std::vector<std::int64_t> overflow(static_cast<std::size_t>(chains), 0);
  parallel_for(chains, threads, [&](std::int64_t c) {
    const std::int64_t lo = count * c / chains, hi = count * (c + 1) / chains;
    MuYStream st(params, seed, derive_stream(0x3a7, static_cast<std::uint64_t>(c)), burn_in, return_cap);
    for (std::int64_t i = lo; i < hi; ++i) {
      out.points[static_cast<std::size_t>(i)] = st.state().point();
      out.phi[static_cast<std::size_t>(i)] = st.advance();
    }
    overflow[static_cast<std::size_t>(c)] = st.overflows();
  });
  for (auto o : overflow) out.overflows += o;
  return out;
}

std::vector<BirkhoffSample> birkhoff(const Observable& v, std::int64_t n, const std::vector<Point>& starts,
                                     const MapParams& params, std::uint64_t seed, int threads) {
  std::vector<BirkhoffSample> out(starts.size());
  parallel_for(static_cast<std::int64_t>(starts.size()), threads, [&](std::int64_t i) {
    BitSource digits(Philox(seed, derive_stream(0xb1, static_cast<std::uint64_t>(i))));
    const Point p = starts[static_cast<std::size_t>(i)];
    OrbitState s = random_start(p, digits);
    double sum = 0.0;
    for (std::int64_t k = 0; k < n; ++k) {
      sum += v(s.point());
      step(s, params, &digits);
    }
    out[static_cast<std::size_t>(i)] = {n, sum, p};
  });
  return out;
}

ExcursionBatch run_excursions(std::int64_t count, const ZConfig& z, const MapParams& params, std::uint64_t seed,
                              int chains, int threads, std::int64_t burn_in, std::int64_t cap) {
  chains = std::max(1, chains);
  ExcursionBatch out;
  out.records.resize(static_cast<std::size_t>(count));
  std::vector<std::int64_t> exc_of(static_cast<std::size_t>(chains), 0), ret_of(static_cast<std::size_t>(chains), 0);
  parallel_for(chains, threads, [&](std::int64_t c) {
    const std::int64_t lo = count * c / chains, hi = count * (c + 1) / chains;
    MuYStream st(params, seed, derive_stream(0xe7c, static_cast<std::uint64_t>(c)), burn_in, kDefaultReturnCap, true);
    OrbitState s = st.state();
    BitSource& digits = st.digits();
    auto to_Z = [&] {
      while (!z.in_Z(s.point(), params)) {
        if (advance_to_Y(s, params, &digits, kDefaultReturnCap) < 0) {
          ++ret_of[static_cast<std::size_t>(c)];
          s = lebesgue_state(Region::Y, digits.generator(), params, z);
        }
      }
    };
    to_Z();
    for (std::int64_t i = lo; i < hi;) {
      try {
        out.records[static_cast<std::size_t>(i)] = excursion_to_Z(s, z, params, digits, cap);
        ++i;
      } catch (const ExcursionOverflowError&) {
        ++exc_of[static_cast<std::size_t>(c)];
        to_Z();
      } catch (const ReturnOverflowError&) {
        ++ret_of[static_cast<std::size_t>(c)];
        s = lebesgue_state(Region::Y, digits.generator(), params, z);
        to_Z();
      }
    }
  });
  for (auto v : exc_of) out.excursion_overflows += v;
  for (auto v : ret_of) out.return_overflows += v;
  return out;
}

}  // namespace pmmap
