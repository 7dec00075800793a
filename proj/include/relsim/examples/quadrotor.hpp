#pragma once

// Quadrotor rigid-body model with four propellers. The state is
// (p, v, q, Omega, omega) in R^3 x R^3 x S^3 x R^3 x R^4, seventeen numbers,
// and the input is the propeller acceleration omega_r in R^4:
//
//   p'     = v
//   q'     = 1/2 E(q)^T Omega
//   v'     = R(q) F / m - g e_z,      F = sum_k 1/2 rho A C_l omega_k^2 e_z
//   Omega' = J^{-1} (T + Omega x J Omega)
//   omega' = omega_r
//
// with T = A C_l L rho / 2 * (w2^2 - w4^2, w1^2 - w3^2, w1^2 - w2^2 + w3^2 - w4^2).
// q = (w, x, y, z) is a unit quaternion (scalar first), R(q) the matching
// body-to-world rotation matrix and
//
//   E(q) = [ -x  w  z -y ]
//          [ -y -z  w  x ]
//          [ -z  y -x  w ]
//
// so that 1/2 E^T Omega is the quaternion product 1/2 q * (0, Omega).
//
// The drag coefficient C_d is carried for completeness; no term uses it.

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "relsim/oracle.hpp"
#include "relsim/statespace.hpp"

namespace relsim {

struct QuadParams {
  double rho = 1.23;
  double area = 0.1;
  double lift = 0.25;
  double drag = 0.75;
  double mass = 10.0;
  double gravity = 9.81;
  std::array<double, 3> inertia{0.25, 0.25, 1.0};
  /// Arm length in the torque terms. No value is given for it; 1.0 is a
  /// placeholder and it is configurable.
  double arm = 1.0;
};

inline constexpr std::size_t kQuadStateDim = 17;
inline constexpr std::size_t kQuadInputDim = 4;

namespace quad_layout {
inline constexpr std::size_t p = 0;
inline constexpr std::size_t v = 3;
inline constexpr std::size_t q = 6;
inline constexpr std::size_t omega_body = 10;
inline constexpr std::size_t omega_prop = 13;
}  // namespace quad_layout

/// Rotation matrix of a unit quaternion (w, x, y, z), row-major.
std::array<double, 9> quat_rotation(std::span<const double, 4> q);

/// Right-hand side. Throws std::invalid_argument when the state or input has
/// the wrong size or |q| deviates from 1 by more than 1e-9.
std::vector<double> quad_dynamics(const QuadParams& params, std::span<const double> state,
                                  std::span<const double> omega_r);

/// One RK4 step; the quaternion is checked on entry only (intermediate stages
/// are not unit length).
std::vector<double> quad_rk4_step(const QuadParams& params, std::span<const double> state,
                                  std::span<const double> omega_r, double h);

/// Propeller speed at which the four rotors exactly carry the weight:
/// 4 * 1/2 rho A C_l w^2 = m g.
double quad_hover_speed(const QuadParams& params);

/// Hover state at position p: v = Omega = 0, q = (1, 0, 0, 0), omega = hover speed.
std::vector<double> quad_hover_state(const QuadParams& params, std::array<double, 3> p = {0.0, 0.0, 0.0});

/// [-50,50]^3 x [-50,50]^3 x S^3 x [-5,5]^3 with components p, v, q, Omega.
StateSpace quad_statespace();

struct QuadChainDefaults {
  PerturbationRadii r_p;
  PerturbationRadii r_rwm;
};

/// r_p = (0.1, 0.1, 0.1, 0.1), r_RWM = (7.0, 7.0, 0.5, 1.0).
QuadChainDefaults quad_chain_defaults();

/// Synthetic stand-in for a quadrotor controller: F = 0 exactly on the ball
/// |(p, v) - center| <= rho in the six position and velocity coordinates.
IslandsOracle quad_synthetic_oracle(const StateSpace& space, double rho,
                                    std::vector<double> center = std::vector<double>(6, 0.0));

}  // namespace relsim
