#include <cstring>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "relsim/kernels.hpp"
#include "relsim/rng.hpp"
#include "support/reference.hpp"

namespace k = relsim::kernels;

namespace {

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct IsaGuard {
  ~IsaGuard() { k::force_isa(std::nullopt); }
};

}  // namespace

TEST_CASE("reflect_one matches the bounce-by-bounce reference") {
  relsim::RandomStream rng(1);
  for (int i = 0; i < 100'000; ++i) {
    const double x = rng.uniform(-8.0, 8.0);
    const double d = rng.uniform(-60.0, 60.0);
    CHECK(k::reflect_one(x, d, -8.0, 8.0) == doctest::Approx(reference::reflect(x, d, -8.0, 8.0)).epsilon(1e-12));
  }
  CHECK(k::reflect_one(7.9, 0.3, -8.0, 8.0) == doctest::Approx(7.8).epsilon(1e-15));
  CHECK(k::reflect_one(1.25, 0.0, -8.0, 8.0) == 1.25);
}

TEST_CASE("scalar and AVX2 reflect are bit-identical") {
  if (!k::avx2::compiled() || k::detected_isa() != k::Isa::Avx2) {
    MESSAGE("AVX2 unavailable; equivalence not exercised");
    return;
  }
  relsim::RandomStream rng(2);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 17u, 1024u, 4099u}) {
    std::vector<double> x(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform(-1.0, 1.0);
      // Mix of interior moves, single bounces and multi-bounce folds.
      const double scale = (i % 3 == 0) ? 0.05 : (i % 3 == 1 ? 1.5 : 9.0);
      d[i] = rng.uniform(-scale, scale);
    }
    if (n > 2) {
      x[0] = 1.0;
      d[0] = 0.0;
      x[1] = -1.0;
      d[1] = -2.0;
    }
    auto xs = x;
    auto xv = x;
    k::scalar::reflect(xs.data(), d.data(), n, -1.0, 1.0);
    k::avx2::reflect(xv.data(), d.data(), n, -1.0, 1.0);
    CHECK(bit_equal(xs, xv));
    for (double v : xs) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("scalar and AVX2 squared distances are bit-identical") {
  if (!k::avx2::compiled() || k::detected_isa() != k::Isa::Avx2) {
    MESSAGE("AVX2 unavailable; equivalence not exercised");
    return;
  }
  relsim::RandomStream rng(3);
  for (std::size_t dims : {1u, 2u, 3u, 7u}) {
    for (std::size_t n : {0u, 1u, 4u, 6u, 1001u}) {
      std::vector<double> cols(dims * n), center(dims), a(n), b(n);
      for (double& v : cols) v = rng.uniform(-5.0, 5.0);
      for (double& v : center) v = rng.uniform(-1.0, 1.0);
      k::scalar::squared_distances(cols.data(), center.data(), dims, n, a.data());
      k::avx2::squared_distances(cols.data(), center.data(), dims, n, b.data());
      CHECK(bit_equal(a, b));
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t d = 0; d < dims; ++d) {
          const double t = cols[d * n + i] - center[d];
          s += t * t;
        }
        CHECK(a[i] == doctest::Approx(s).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("dispatch honours forced ISA and validates sizes") {
  IsaGuard guard;
  k::force_isa(k::Isa::Scalar);
  CHECK(k::active_isa() == k::Isa::Scalar);
  std::vector<double> x{0.5, 0.9};
  const std::vector<double> d{0.1, 0.2};
  k::reflect(x, d, -1.0, 1.0);
  CHECK(x[0] == doctest::Approx(0.6));
  CHECK(x[1] == doctest::Approx(0.9));
  k::force_isa(std::nullopt);
  CHECK(k::active_isa() == k::detected_isa());
  std::vector<double> short_delta{0.1};
  CHECK_THROWS_AS(k::reflect(x, short_delta, -1.0, 1.0), std::invalid_argument);
  std::vector<double> out(3);
  const std::vector<double> cols(5), center(2);
  CHECK_THROWS_AS(k::squared_distances(cols, center, out), std::invalid_argument);
}
