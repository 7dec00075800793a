#include "relsim/examples/integrate.hpp"

#include <cmath>
#include <stdexcept>

namespace relsim {

namespace {

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::vector<double> axpy(std::span<const double> x, double a, const std::vector<double>& k) {
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += a * k[i];
  return out;
}

}  // namespace

std::vector<double> rk4_step(const Dynamics& f, std::span<const double> x, std::span<const double> u,
                             double h) {
  if (!(h > 0.0)) throw std::domain_error("rk4_step: step must be positive");
  if (!all_finite(x)) throw std::domain_error("rk4_step: non-finite state");
  const auto k1 = f(x, u);
  const auto k2 = f(axpy(x, 0.5 * h, k1), u);
  const auto k3 = f(axpy(x, 0.5 * h, k2), u);
  const auto k4 = f(axpy(x, h, k3), u);
  if (k1.size() != x.size() || k2.size() != x.size() || k3.size() != x.size() || k4.size() != x.size()) {
    throw std::invalid_argument("rk4_step: dynamics returned the wrong dimension");
  }
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  if (!all_finite(out)) throw std::domain_error("rk4_step: non-finite state");
  return out;
}

}  // namespace relsim
