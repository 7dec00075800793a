#pragma once

// Data-parallel inner loops with a scalar reference and SIMD variants.
//
// Every variant must produce bit-identical results to the scalar reference
// (the whole project is built with -ffp-contract=off and the SIMD variants
// avoid FMA), so switching ISA never changes a simulation outcome.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace relsim::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;

/// Best ISA supported by the running CPU and compiled into this binary.
Isa detected_isa() noexcept;

/// ISA used by the dispatching entry points below.
Isa active_isa() noexcept;

/// Pin the dispatch to a given ISA (tests, benchmarking). Requests for an ISA
/// the CPU lacks fall back to scalar. std::nullopt restores auto-detection.
void force_isa(std::optional<Isa> isa) noexcept;

/// x[i] <- billiard reflection of x[i] + delta[i] inside [lo, hi].
/// Requires x.size() == delta.size() and lo <= x[i] <= hi.
void reflect(std::span<double> x, std::span<const double> delta, double lo, double hi);

/// out[i] = sum_d (columns[d][i] - center[d])^2 over a column-major batch:
/// columns holds center.size() contiguous columns of out.size() entries each.
void squared_distances(std::span<const double> columns, std::span<const double> center,
                       std::span<double> out);

namespace scalar {
void reflect(double* x, const double* delta, std::size_t n, double lo, double hi);
void squared_distances(const double* columns, const double* center, std::size_t dims,
                       std::size_t n, double* out);
}  // namespace scalar

namespace avx2 {
bool compiled() noexcept;
void reflect(double* x, const double* delta, std::size_t n, double lo, double hi);
void squared_distances(const double* columns, const double* center, std::size_t dims,
                       std::size_t n, double* out);
}  // namespace avx2

/// Single-element reflection shared by the scalar kernel and the scalar
/// statespace path.
inline double reflect_one(double x, double delta, double lo, double hi) {
  const double v = x + delta;
  if (v >= lo && v <= hi) return v;
  const double up = (hi + hi) - v;
  if (v > hi && up >= lo) return up;
  const double down = (lo + lo) - v;
  if (v < lo && down <= hi) return down;
  // Several bounces: fold onto the circle of circumference 2 (hi - lo).
  const double width = hi - lo;
  const double period = width + width;
  const double y = v - lo;
  double m = y - __builtin_floor(y / period) * period;
  if (m > width) m = period - m;
  double r = lo + m;
  if (r < lo) r = lo;
  if (r > hi) r = hi;
  return r;
}

}  // namespace relsim::kernels
