#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <utility>

namespace pmmap {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Substream id for (parent, index); distinct inputs give (practically) distinct ids.
inline constexpr std::uint64_t derive_stream(std::uint64_t parent, std::uint64_t index) {
  return splitmix64(splitmix64(parent) ^ (index * 0xD1342543DE82EF95ull + 0x632BE59BD9B4E019ull));
}

// Philox4x32-10 (Salmon et al. 2011). Key = seed, counter = (block index, stream id).
class Philox {
 public:
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  Philox(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
      const std::uint64_t p0 = std::uint64_t{M0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{M1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += W0;
      key[1] += W1;
    }
    return ctr;
  }

  result_type operator()() {
    if (have_ == 0) refill();
    return buf_[--have_];
  }

  // Uniform double in [0,1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1p-53; }
  // Uniform double in (0,1].
  double uniform_pos() { return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1p-53; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill() {
    const auto out = block({static_cast<std::uint32_t>(index_), static_cast<std::uint32_t>(index_ >> 32),
                            static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                           {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
    ++index_;
    buf_[1] = (std::uint64_t{out[0]} << 32) | out[1];
    buf_[0] = (std::uint64_t{out[2]} << 32) | out[3];
    have_ = 2;
  }

  std::uint64_t seed_, stream_;
  std::uint64_t index_ = 0;
  std::uint64_t buf_[2] = {0, 0};
  int have_ = 0;
};

// MSB-first bit stream over a Philox substream.
class BitSource {
 public:
  explicit BitSource(Philox gen) : gen_(gen) {}

  // k in [0, 64]; earlier bits land in higher positions.
  std::uint64_t take(int k) {
    if (k == 0) return 0;
    if (avail_ >= k) {
      const std::uint64_t out = (k == 64) ? buf_ : (buf_ >> (64 - k));
      buf_ = (k == 64) ? 0 : (buf_ << k);
      avail_ -= k;
      return out;
    }
    const int first = avail_;
    const std::uint64_t hi = first ? (buf_ >> (64 - first)) : 0;
    buf_ = gen_();
    avail_ = 64;
    const int rest = k - first;
    const std::uint64_t lo = take(rest);
    return (first ? (hi << rest) : 0) | lo;
  }

  void skip(std::int64_t k) {
    while (k >= 64) {
      take(64);
      k -= 64;
    }
    take(static_cast<int>(k));
  }

  Philox& generator() { return gen_; }

 private:
  Philox gen_;
  std::uint64_t buf_ = 0;
  int avail_ = 0;
};

// Fixed-point circle coordinate: theta = bits * 2^-64.
struct ThetaWord {
  std::uint64_t bits = 0;

  static ThetaWord from_double(double theta) {
    // theta in [0,1): scaling by 2^64 is exact, the cast truncates below 2^-64.
    return ThetaWord{static_cast<std::uint64_t>(theta * 0x1p64)};
  }
  double value() const {
    const double v = static_cast<double>(bits) * 0x1p-64;
    return v < 1.0 ? v : 0x1.fffffffffffffp-1;
  }

  // Apply theta -> 4^k theta mod 1, new low digits supplied (2k bits, MSB first).
  void shift(std::int64_t k, BitSource* digits) {
    if (k <= 0) return;
    if (k >= 32) {
      if (digits) {
        digits->skip(2 * (k - 32));
        bits = digits->take(64);
      } else {
        bits = 0;
      }
      return;
    }
    const int s = static_cast<int>(2 * k);
    bits = (bits << s) | (digits ? digits->take(s) : 0);
  }
};

// Roberts' R2 additive recurrence in [0,1)^2.
inline std::pair<double, double> r2_point(std::uint64_t k, double shift_a = 0.5, double shift_b = 0.5) {
  constexpr double g = 1.32471795724474602596;
  constexpr double a1 = 1.0 / g, a2 = 1.0 / (g * g);
  double u = shift_a + a1 * static_cast<double>(k);
  double v = shift_b + a2 * static_cast<double>(k);
  u -= static_cast<double>(static_cast<std::int64_t>(u));
  v -= static_cast<double>(static_cast<std::int64_t>(v));
  return {u, v};
}

}  // namespace pmmap
