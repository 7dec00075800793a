#include <atomic>
#include <stdexcept>

#include "relsim/kernels.hpp"

namespace relsim::kernels {

namespace {

// -1: auto-detect, otherwise a forced Isa value.
std::atomic<int> g_forced{-1};

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Avx2:
      return "avx2";
    case Isa::Scalar:
      break;
  }
  return "scalar";
}

Isa detected_isa() noexcept {
  static const Isa isa = (avx2::compiled() && cpu_has_avx2()) ? Isa::Avx2 : Isa::Scalar;
  return isa;
}

Isa active_isa() noexcept {
  const int forced = g_forced.load(std::memory_order_relaxed);
  if (forced < 0) return detected_isa();
  const auto isa = static_cast<Isa>(forced);
  if (isa == Isa::Avx2 && detected_isa() != Isa::Avx2) return Isa::Scalar;
  return isa;
}

void force_isa(std::optional<Isa> isa) noexcept {
  g_forced.store(isa ? static_cast<int>(*isa) : -1, std::memory_order_relaxed);
}

void reflect(std::span<double> x, std::span<const double> delta, double lo, double hi) {
  if (x.size() != delta.size()) throw std::invalid_argument("reflect: size mismatch");
  if (active_isa() == Isa::Avx2) {
    avx2::reflect(x.data(), delta.data(), x.size(), lo, hi);
  } else {
    scalar::reflect(x.data(), delta.data(), x.size(), lo, hi);
  }
}

void squared_distances(std::span<const double> columns, std::span<const double> center,
                       std::span<double> out) {
  if (columns.size() != center.size() * out.size()) {
    throw std::invalid_argument("squared_distances: batch shape mismatch");
  }
  if (active_isa() == Isa::Avx2) {
    avx2::squared_distances(columns.data(), center.data(), center.size(), out.size(), out.data());
  } else {
    scalar::squared_distances(columns.data(), center.data(), center.size(), out.size(),
                              out.data());
  }
}

}  // namespace relsim::kernels
