#include <doctest.h>

#include <set>

#include "stdtex/rng.hpp"

using stdtex::CounterStream;
using stdtex::Philox4x32;

// Known-answer vectors published with the Random123 library.
TEST_CASE("philox4x32-10 known answers") {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::generate(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::generate(C{~0u, ~0u, ~0u, ~0u}, K{~0u, ~0u}) ==
        C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::generate(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, K{0xa4093822u, 0x299f31d0u}) ==
        C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("counter streams are reproducible and disjoint") {
  CounterStream a(42, 1, 2, 3), b(42, 1, 2, 3), c(42, 1, 2, 4), d(43, 1, 2, 3);
  std::set<std::uint32_t> seen;
  for (int i = 0; i < 64; ++i) {
    const auto x = a.next_u32();
    CHECK(x == b.next_u32());
    seen.insert(x);
    seen.insert(c.next_u32());
    seen.insert(d.next_u32());
  }
  CHECK(seen.size() == 3 * 64);
}

TEST_CASE("uniform draws stay in the open unit interval with the right mean") {
  CounterStream s(7, 0, 0, 0);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  // Standard error of the mean is 1/sqrt(12 n) ~ 6.5e-4.
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.004));
}

TEST_CASE("run seeds keep run 0 on the base seed and separate later runs") {
  CHECK(stdtex::run_seed(99, 0) == 99);
  std::set<std::uint64_t> s;
  for (std::uint32_t r = 0; r < 100; ++r) s.insert(stdtex::run_seed(99, r));
  CHECK(s.size() == 100);
}
