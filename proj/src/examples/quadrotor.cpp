#include "relsim/examples/quadrotor.hpp"

#include <cmath>
#include <stdexcept>

namespace relsim {

namespace ql = quad_layout;

std::array<double, 9> quat_rotation(std::span<const double, 4> q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
          2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
          2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
}

namespace {

std::vector<double> rhs(const QuadParams& P, std::span<const double> s, std::span<const double> omega_r) {
  std::vector<double> ds(kQuadStateDim, 0.0);
  const double* v = &s[ql::v];
  const double* q = &s[ql::q];
  const double* W = &s[ql::omega_body];
  const double* w = &s[ql::omega_prop];

  for (int i = 0; i < 3; ++i) ds[ql::p + i] = v[i];

  ds[ql::q + 0] = 0.5 * (-q[1] * W[0] - q[2] * W[1] - q[3] * W[2]);
  ds[ql::q + 1] = 0.5 * (q[0] * W[0] - q[3] * W[1] + q[2] * W[2]);
  ds[ql::q + 2] = 0.5 * (q[3] * W[0] + q[0] * W[1] - q[1] * W[2]);
  ds[ql::q + 3] = 0.5 * (-q[2] * W[0] + q[1] * W[1] + q[0] * W[2]);

  const double k = 0.5 * P.rho * P.area * P.lift;
  const double w1 = w[0] * w[0], w2 = w[1] * w[1], w3 = w[2] * w[2], w4 = w[3] * w[3];
  const double thrust = k * (w1 + w2 + w3 + w4);
  // The rotation uses the stage quaternion as is; RK4 stages are not unit
  // length and normalizing them would break the order of the method.
  const auto R = quat_rotation(std::span<const double, 4>(q, 4));
  for (int i = 0; i < 3; ++i) ds[ql::v + i] = R[3 * i + 2] * thrust / P.mass;
  ds[ql::v + 2] -= P.gravity;

  const double c = k * P.arm;
  const double T[3] = {c * (w2 - w4), c * (w1 - w3), c * (w1 - w2 + w3 - w4)};
  const auto& J = P.inertia;
  const double JW[3] = {J[0] * W[0], J[1] * W[1], J[2] * W[2]};
  const double cross[3] = {W[1] * JW[2] - W[2] * JW[1], W[2] * JW[0] - W[0] * JW[2], W[0] * JW[1] - W[1] * JW[0]};
  for (int i = 0; i < 3; ++i) ds[ql::omega_body + i] = (T[i] + cross[i]) / J[i];

  for (int i = 0; i < 4; ++i) ds[ql::omega_prop + i] = omega_r[i];
  return ds;
}

void check_shape(std::span<const double> state, std::span<const double> omega_r) {
  if (state.size() != kQuadStateDim) throw std::invalid_argument("quadrotor state must have 17 entries");
  if (omega_r.size() != kQuadInputDim) throw std::invalid_argument("quadrotor input must have 4 entries");
  const double* q = &state[ql::q];
  const double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  if (!(std::abs(n - 1.0) <= 1e-9)) throw std::invalid_argument("quadrotor quaternion is not unit length");
}

}  // namespace

std::vector<double> quad_dynamics(const QuadParams& params, std::span<const double> state,
                                  std::span<const double> omega_r) {
  check_shape(state, omega_r);
  return rhs(params, state, omega_r);
}

std::vector<double> quad_rk4_step(const QuadParams& params, std::span<const double> state,
                                  std::span<const double> omega_r, double h) {
  check_shape(state, omega_r);
  if (!(h > 0.0)) throw std::domain_error("quad_rk4_step: step must be positive");
  auto shifted = [&](const std::vector<double>& k, double a) {
    std::vector<double> z(state.begin(), state.end());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += a * k[i];
    return z;
  };
  const auto k1 = rhs(params, state, omega_r);
  const auto k2 = rhs(params, shifted(k1, 0.5 * h), omega_r);
  const auto k3 = rhs(params, shifted(k2, 0.5 * h), omega_r);
  const auto k4 = rhs(params, shifted(k3, h), omega_r);
  std::vector<double> out(state.begin(), state.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  for (double x : out) {
    if (!std::isfinite(x)) throw std::domain_error("quad_rk4_step: non-finite state");
  }
  return out;
}

double quad_hover_speed(const QuadParams& params) {
  return std::sqrt(params.mass * params.gravity / (2.0 * params.rho * params.area * params.lift));
}

std::vector<double> quad_hover_state(const QuadParams& params, std::array<double, 3> p) {
  std::vector<double> s(kQuadStateDim, 0.0);
  for (int i = 0; i < 3; ++i) s[ql::p + i] = p[i];
  s[ql::q] = 1.0;
  const double wh = quad_hover_speed(params);
  for (int i = 0; i < 4; ++i) s[ql::omega_prop + i] = wh;
  return s;
}

StateSpace quad_statespace() {
  IntervalBlock p{{{-50, 50}, {-50, 50}, {-50, 50}}};
  IntervalBlock v{{{-50, 50}, {-50, 50}, {-50, 50}}};
  IntervalBlock omega{{{-5, 5}, {-5, 5}, {-5, 5}}};
  return StateSpace({{"p", p}, {"v", v}, {"q", SphereBlock{3}}, {"Omega", omega}});
}

QuadChainDefaults quad_chain_defaults() {
  return {PerturbationRadii{{0.1, 0.1, 0.1, 0.1}}, PerturbationRadii{{7.0, 7.0, 0.5, 1.0}}};
}

IslandsOracle quad_synthetic_oracle(const StateSpace& space, double rho, std::vector<double> center) {
  return ball_oracle(space, std::move(center), rho, {0, 1, 2, 3, 4, 5});
}

}  // namespace relsim
