#include <doctest.h>

#include <set>

#include "pmmap/random.hpp"

using namespace pmmap;

TEST_CASE("Philox4x32-10 known answers") {
  auto a = Philox::block({0, 0, 0, 0}, {0, 0});
  CHECK(a == std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  auto b = Philox::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  CHECK(b == std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  auto c = Philox::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  CHECK(c == std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are reproducible and distinct") {
  Philox g1(7, 1), g2(7, 1), g3(7, 2);
  for (int i = 0; i < 10; ++i) CHECK(g1() == g2());
  CHECK(g1() != g3());
  std::set<std::uint64_t> ids;
  for (std::uint64_t i = 0; i < 1000; ++i) ids.insert(derive_stream(42, i));
  CHECK(ids.size() == 1000);
}

TEST_CASE("uniforms lie in range") {
  Philox g(3, 0);
  double s = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = g.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    s += u;
  }
  CHECK(s / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("bit source concatenates MSB first") {
  Philox g(9, 4);
  const std::uint64_t w = Philox(9, 4)();
  BitSource bits(g);
  const auto hi = bits.take(10);
  const auto mid = bits.take(50);
  const auto lo = bits.take(4);
  CHECK(((hi << 54) | (mid << 4) | lo) == w);
}

TEST_CASE("theta word shift") {
  ThetaWord w = ThetaWord::from_double(0.3);
  w.shift(1, nullptr);
  CHECK(w.value() == doctest::Approx(0.2).epsilon(1e-12));
  ThetaWord z = ThetaWord::from_double(0.5);
  z.shift(1, nullptr);
  CHECK(z.value() == 0.0);
  // 2k fresh bits per k steps
  BitSource a(Philox(1, 1)), b(Philox(1, 1));
  ThetaWord u = ThetaWord::from_double(0.0);
  u.shift(3, &a);
  CHECK(u.bits == b.take(6));
}
