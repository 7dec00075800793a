#include "relsim/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <stdexcept>

namespace relsim {

namespace {

double upper_percentile(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument("confidence must lie in (0, 1)");
  }
  return confidence + (1.0 - confidence) / 2.0;
}

ConfidenceInterval clipped(double lo, double hi) {
  return {std::clamp(lo, 0.0, 1.0), std::clamp(hi, 0.0, 1.0)};
}

}  // namespace

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

double student_t_quantile(double p, double dof) {
  return boost::math::quantile(boost::math::students_t_distribution<double>(dof), p);
}

ConfidenceInterval normal_interval(double mean, double variance, std::uint64_t n, double confidence) {
  if (n == 0) throw std::invalid_argument("normal_interval: no samples");
  const double half = normal_quantile(upper_percentile(confidence)) *
                      std::sqrt(variance / static_cast<double>(n));
  return clipped(mean - half, mean + half);
}

ConfidenceInterval clopper_pearson_interval(std::uint64_t successes, std::uint64_t n,
                                            double confidence) {
  if (n == 0 || successes > n) throw std::invalid_argument("clopper_pearson: bad counts");
  const double tail = (1.0 - upper_percentile(confidence));
  const auto s = static_cast<double>(successes);
  const auto f = static_cast<double>(n - successes);
  const double lo =
      successes == 0 ? 0.0
                     : boost::math::quantile(boost::math::beta_distribution<double>(s, f + 1.0), tail);
  const double hi =
      successes == n
          ? 1.0
          : boost::math::quantile(boost::math::beta_distribution<double>(s + 1.0, f), 1.0 - tail);
  return {lo, hi};
}

ConfidenceInterval student_t_interval(double mean, double batch_variance, std::size_t batches,
                                      double confidence) {
  if (batches < 2) throw std::invalid_argument("student_t_interval: need at least two batches");
  const double t = student_t_quantile(upper_percentile(confidence), static_cast<double>(batches - 1));
  const double half = t * std::sqrt(batch_variance / static_cast<double>(batches));
  return clipped(mean - half, mean + half);
}

ConfidenceInterval student_t_interval(std::span<const double> batch_means, double confidence) {
  const auto m = batch_moments(batch_means);
  return student_t_interval(m.mean, m.variance, batch_means.size(), confidence);
}

BatchMoments batch_moments(std::span<const double> batch_means) {
  BatchMoments out;
  if (batch_means.empty()) return out;
  double sum = 0.0;
  for (double z : batch_means) sum += z;
  out.mean = sum / static_cast<double>(batch_means.size());
  if (batch_means.size() > 1) {
    double ss = 0.0;
    for (double z : batch_means) ss += (z - out.mean) * (z - out.mean);
    out.variance = ss / static_cast<double>(batch_means.size() - 1);
  }
  return out;
}

}  // namespace relsim
