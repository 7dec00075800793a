#include "relsim/diagnostics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "relsim/errors.hpp"

namespace relsim {

std::string_view to_string(PilotBasis basis) noexcept {
  return basis == PilotBasis::Trig ? "trig" : "polynomial";
}

PilotBasis parse_pilot_basis(std::string_view text) {
  if (text == "trig") return PilotBasis::Trig;
  if (text == "polynomial") return PilotBasis::Polynomial;
  throw ConfigError("unknown pilot basis '" + std::string(text) + "'");
}

PilotFunction::PilotFunction(PilotBasis basis, std::vector<double> coefficients,
                             std::vector<double> secondary, std::vector<std::uint8_t> use_sin)
    : basis_(basis),
      coefficients_(std::move(coefficients)),
      secondary_(std::move(secondary)),
      use_sin_(std::move(use_sin)) {
  if (basis_ == PilotBasis::Trig && use_sin_.empty()) use_sin_.assign(coefficients_.size(), 0);
  if (basis_ == PilotBasis::Polynomial && secondary_.empty()) secondary_.assign(coefficients_.size(), 0.0);
  if (use_sin_.size() != coefficients_.size() && basis_ == PilotBasis::Trig) {
    throw std::invalid_argument("PilotFunction: selector size mismatch");
  }
  if (secondary_.size() != coefficients_.size() && basis_ == PilotBasis::Polynomial) {
    throw std::invalid_argument("PilotFunction: coefficient size mismatch");
  }
}

double PilotFunction::operator()(std::span<const double> x) const {
  if (x.size() != coefficients_.size()) throw std::invalid_argument("PilotFunction: dimension mismatch");
  double s = 0.0;
  if (basis_ == PilotBasis::Trig) {
    for (std::size_t d = 0; d < x.size(); ++d) {
      s += coefficients_[d] * (use_sin_[d] ? std::sin(x[d]) : std::cos(x[d]));
    }
  } else {
    for (std::size_t d = 0; d < x.size(); ++d) {
      s += coefficients_[d] * x[d] + secondary_[d] * x[d] * x[d];
    }
  }
  return s;
}

std::vector<PilotFunction> make_pilots(const StateSpace& space, std::size_t count, RandomStream& rng,
                                       PilotBasis basis) {
  if (count == 0) throw std::invalid_argument("make_pilots: need at least one pilot");
  const std::size_t dim = space.dim();
  auto coefficient = [&rng] {
    // Open interval (-10, 10).
    for (;;) {
      const double c = rng.uniform(-10.0, 10.0);
      if (c > -10.0 && c < 10.0) return c;
    }
  };
  std::vector<PilotFunction> out;
  out.reserve(count);
  for (std::size_t l = 0; l < count; ++l) {
    std::vector<double> coeffs(dim);
    if (basis == PilotBasis::Trig) {
      std::vector<std::uint8_t> use_sin(dim);
      for (std::size_t d = 0; d < dim; ++d) {
        coeffs[d] = coefficient();
        use_sin[d] = static_cast<std::uint8_t>(rng.below(2));
      }
      out.emplace_back(basis, std::move(coeffs), std::vector<double>{}, std::move(use_sin));
    } else {
      std::vector<double> quad(dim);
      for (std::size_t d = 0; d < dim; ++d) {
        coeffs[d] = coefficient();
        quad[d] = coefficient();
      }
      out.emplace_back(basis, std::move(coeffs), std::move(quad));
    }
  }
  return out;
}

std::vector<double> pilot_means(std::span<const PilotFunction> pilots,
                                std::span<const StatePoint> sample) {
  if (sample.empty()) throw std::invalid_argument("pilot_means: empty sample");
  std::vector<double> out;
  out.reserve(pilots.size());
  for (const auto& p : pilots) {
    double s = 0.0;
    for (const auto& x : sample) s += p(x);
    out.push_back(s / static_cast<double>(sample.size()));
  }
  return out;
}

PilotAccumulator::PilotAccumulator(std::span<const PilotFunction> pilots)
    : pilots_(pilots), moments_(pilots.size()) {}

void PilotAccumulator::add(const StatePoint& x) {
  for (std::size_t l = 0; l < pilots_.size(); ++l) moments_[l].add(pilots_[l](x));
}

void PilotAccumulator::merge(const PilotAccumulator& other) {
  for (std::size_t l = 0; l < moments_.size(); ++l) moments_[l].merge(other.moments_[l]);
}

std::vector<double> PilotAccumulator::means() const {
  std::vector<double> out;
  out.reserve(moments_.size());
  for (const auto& m : moments_) out.push_back(m.mean);
  return out;
}

DiagnosticsResult compare(std::span<const WelfordAccumulator> honest,
                          std::span<const double> rwm_means, std::uint64_t rwm_count,
                          double confidence) {
  if (honest.size() != rwm_means.size()) throw std::invalid_argument("compare: pilot count mismatch");
  DiagnosticsResult out;
  out.confidence = confidence;
  out.rwm_count = rwm_count;
  out.honest_count = honest.empty() ? 0 : honest.front().count;
  if (out.honest_count < 30) {
    throw std::invalid_argument("compare: need at least 30 honest samples, got " +
                                std::to_string(out.honest_count));
  }
  const double z = normal_quantile(confidence + (1.0 - confidence) / 2.0);
  out.pass = true;
  for (std::size_t l = 0; l < honest.size(); ++l) {
    PilotVerdict v;
    v.honest_mean = honest[l].mean;
    const double half =
        z * std::sqrt(honest[l].sample_variance() / static_cast<double>(honest[l].count));
    v.honest_interval = {v.honest_mean - half, v.honest_mean + half};
    v.rwm_mean = rwm_means[l];
    v.pass = v.rwm_mean >= v.honest_interval.lo && v.rwm_mean <= v.honest_interval.hi;
    out.pass = out.pass && v.pass;
    out.pilots.push_back(v);
  }
  return out;
}

}  // namespace relsim
