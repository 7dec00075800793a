#pragma once

#include <functional>
#include <span>
#include <vector>

namespace relsim {

/// Right-hand side x' = f(x, u).
using Dynamics = std::function<std::vector<double>(std::span<const double>, std::span<const double>)>;

/// One classical Runge-Kutta step of length h with u held constant.
/// Throws std::domain_error for h <= 0 or a non-finite input or result.
std::vector<double> rk4_step(const Dynamics& f, std::span<const double> x, std::span<const double> u,
                             double h);

}  // namespace relsim
