#pragma once

// Convergence diagnostics for the conditional RWM chains: random pilot
// functions are averaged over an honest sample and over the chain output, and
// the chain mean must land inside the honest CLT interval. Passing is a
// diagnostic, not a proof of convergence.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "relsim/rng.hpp"
#include "relsim/statespace.hpp"
#include "relsim/stats.hpp"

namespace relsim {

enum class PilotBasis { Trig, Polynomial };

std::string_view to_string(PilotBasis basis) noexcept;
PilotBasis parse_pilot_basis(std::string_view text);

/// Linear combination over coordinates. Trig: sum_d c_d * (sin|cos)(x_d).
/// Polynomial: sum_d (c_d x_d + e_d x_d^2). Coefficients in (-10, 10).
class PilotFunction {
 public:
  PilotFunction(PilotBasis basis, std::vector<double> coefficients,
                std::vector<double> secondary = {}, std::vector<std::uint8_t> use_sin = {});

  double operator()(std::span<const double> x) const;
  double operator()(const StatePoint& x) const { return (*this)(x.coords()); }

  PilotBasis basis() const noexcept { return basis_; }
  const std::vector<double>& coefficients() const noexcept { return coefficients_; }

 private:
  PilotBasis basis_;
  std::vector<double> coefficients_;
  std::vector<double> secondary_;
  std::vector<std::uint8_t> use_sin_;
};

/// L random pilots over the space's coordinates (sphere coordinates are fed
/// coordinate-wise).
std::vector<PilotFunction> make_pilots(const StateSpace& space, std::size_t count, RandomStream& rng,
                                       PilotBasis basis = PilotBasis::Trig);

/// Per-pilot sample means. Throws std::invalid_argument on an empty sample.
std::vector<double> pilot_means(std::span<const PilotFunction> pilots,
                                std::span<const StatePoint> sample);

/// Streaming per-pilot mean/variance.
class PilotAccumulator {
 public:
  explicit PilotAccumulator(std::span<const PilotFunction> pilots);
  void add(const StatePoint& x);
  void merge(const PilotAccumulator& other);
  const std::vector<WelfordAccumulator>& moments() const noexcept { return moments_; }
  std::vector<double> means() const;
  std::uint64_t count() const noexcept { return moments_.empty() ? 0 : moments_.front().count; }

 private:
  std::span<const PilotFunction> pilots_;
  std::vector<WelfordAccumulator> moments_;
};

struct PilotVerdict {
  double honest_mean = 0.0;
  ConfidenceInterval honest_interval;
  double rwm_mean = 0.0;
  bool pass = false;
};

struct DiagnosticsResult {
  std::vector<PilotVerdict> pilots;
  std::uint64_t honest_count = 0;
  std::uint64_t rwm_count = 0;
  double confidence = 0.0;
  bool pass = false;
  /// Fixed wording: a pass is necessary, not sufficient, for convergence.
  static constexpr std::string_view kLabel =
      "diagnostic: agreement with honest samples is necessary but not sufficient for convergence";
};

/// RWM mean of pilot l must fall in honest_mean_l +- z sd_l / sqrt(H).
/// Throws std::invalid_argument if fewer than 30 honest samples are given.
DiagnosticsResult compare(std::span<const WelfordAccumulator> honest,
                          std::span<const double> rwm_means, std::uint64_t rwm_count,
                          double confidence);

}  // namespace relsim
