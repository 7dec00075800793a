#pragma once

#include <cstdint>
#include <span>

namespace relsim {

/// Running mean and sum of squared deviations (Welford). merge() combines two
/// accumulators (Chan et al.) so chunked runs reduce deterministically.
struct WelfordAccumulator {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) noexcept {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  void merge(const WelfordAccumulator& other) noexcept {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double n_a = static_cast<double>(count);
    const double n_b = static_cast<double>(other.count);
    const double n = n_a + n_b;
    const double delta = other.mean - mean;
    mean += delta * (n_b / n);
    m2 += other.m2 + delta * delta * (n_a * n_b / n);
    count += other.count;
  }

  /// m2 / (n - 1); 0 for fewer than two samples.
  double sample_variance() const noexcept {
    return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
  }
  /// m2 / n, the maximum-likelihood variance.
  double population_variance() const noexcept {
    return count > 0 ? m2 / static_cast<double>(count) : 0.0;
  }
};

inline WelfordAccumulator welford_update(WelfordAccumulator acc, double x) noexcept {
  acc.add(x);
  return acc;
}

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const ConfidenceInterval&, const ConfidenceInterval&) = default;
};

/// Quantile of N(0, 1).
double normal_quantile(double p);

/// Quantile of Student's t with `dof` degrees of freedom.
double student_t_quantile(double p, double dof);

/// Two-sided level `confidence` interval mean +- z sqrt(variance / n), clipped to [0, 1].
ConfidenceInterval normal_interval(double mean, double variance, std::uint64_t n, double confidence);

/// Exact binomial interval for `successes` out of `n` at level `confidence`.
ConfidenceInterval clopper_pearson_interval(std::uint64_t successes, std::uint64_t n,
                                            double confidence);

/// z +- t_{M-1}^{confidence + (1 - confidence)/2} sqrt(v / M), clipped to [0, 1].
/// Throws std::invalid_argument when M < 2.
ConfidenceInterval student_t_interval(double mean, double batch_variance, std::size_t batches,
                                      double confidence);
ConfidenceInterval student_t_interval(std::span<const double> batch_means, double confidence);

/// Mean and 1/(M-1) variance of batch means, summed in index order.
struct BatchMoments {
  double mean = 0.0;
  double variance = 0.0;
};
BatchMoments batch_moments(std::span<const double> batch_means);

}  // namespace relsim
