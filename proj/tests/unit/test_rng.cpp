#include <array>
#include <cmath>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "relsim/rng.hpp"

using relsim::Philox4x32;
using relsim::RandomStream;

// Known-answer vectors for Philox4x32-10 from the Random123 distribution.
TEST_CASE("philox known answers") {
  CHECK(Philox4x32::block({0, 0, 0, 0}, {0, 0}) ==
        Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                          {0xffffffffu, 0xffffffffu}) ==
        Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                          {0xa4093822u, 0x299f31d0u}) ==
        Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("philox block is usable at compile time") {
  constexpr auto b = Philox4x32::block({0, 0, 0, 0}, {0, 0});
  static_assert(b[0] == 0x6627e8d5u);
}

TEST_CASE("streams are reproducible") {
  RandomStream a(42, 7);
  RandomStream b(42, 7);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(a == b);
}

TEST_CASE("substreams do not depend on parent consumption") {
  RandomStream parent(9);
  const auto child_before = parent.substream(3);
  for (int i = 0; i < 17; ++i) parent.next_u64();
  auto child_after = parent.substream(3);
  auto copy = child_before;
  for (int i = 0; i < 100; ++i) CHECK(copy.next_u64() == child_after.next_u64());
}

TEST_CASE("paths address distinct streams") {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t k = 1; k <= 4; ++k) {
    for (std::uint64_t b = 0; b < 64; ++b) {
      auto s = RandomStream::for_path(5, {k, 3, b});
      firsts.insert(s.next_u64());
    }
  }
  CHECK(firsts.size() == 4 * 64);
  // Different seeds, same path.
  CHECK(RandomStream::for_path(1, {2, 3}).next_u64() != RandomStream::for_path(2, {2, 3}).next_u64());
}

TEST_CASE("uniform01 lies in [0, 1) with the right moments") {
  RandomStream s(123);
  const int n = 200'000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sq += u * u;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n) * 1.5);
  CHECK(std::abs(var - 1.0 / 12.0) < 0.05 / 12.0);
}

TEST_CASE("below is unbiased over a small range") {
  RandomStream s(77);
  std::array<int, 7> counts{};
  const int n = 70'000;
  for (int i = 0; i < n; ++i) ++counts[s.below(7)];
  for (int c : counts) {
    // Binomial(n, 1/7): sd ~ 91.
    CHECK(std::abs(c - n / 7) < 5 * 92);
  }
}
