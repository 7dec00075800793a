#pragma once

// Van der Pol NMPC benchmark: x1' = x2, x2' = u (1 - x1^2) x2 - x1, steered to
// the origin over ten shooting stages with stage cost 1e-5 u^2 + x1^2 + x2^2.
//
// The in-repo solver is an SQP method on the multiple-shooting NLP with
// decision vector w = (u_0, x_1, u_1, x_2, ..., u_9, x_10). Each stage is one
// RK4 step of length h and bounds apply to the controls only. The QP
// subproblem is condensed onto the controls, its Hessian is the exact
// Lagrangian Hessian with the reduced matrix made positive definite, and the
// box QP is solved by a primal active-set method. Steps are globalized by an
// l-infinity trust region with an l1 merit function and a second-order
// correction. exitflag 1 means the KKT residual (see vdp_kkt) fell below tol
// within max_iterations; anything else, including non-finite iterates, is
// exitflag 0.

#include <array>
#include <cstddef>
#include <memory>
#include <vector>

#include "relsim/controllers.hpp"
#include "relsim/statespace.hpp"

namespace relsim {

struct VdpProblem {
  static constexpr std::size_t kStages = 10;
  static constexpr std::size_t kVars = 3 * kStages;
  static constexpr std::size_t kCons = 2 * kStages;
  static constexpr double kControlWeight = 1e-5;
  static constexpr double kStateWeight = 1.0;

  double h = 0.1;
  double u_max = 10.0;
  /// Sampling box [-box, box]^2.
  double box = 8.0;
  double tol = 1e-6;
  std::size_t max_iterations = 300;

  /// Throws ConfigError on non-positive h, u_max, box, tol or iteration cap.
  void validate() const;
};

using Vdp2 = std::array<double, 2>;

Vdp2 vdp_dynamics(const Vdp2& x, double u);
/// One RK4 step of the dynamics with u held over [0, h].
Vdp2 vdp_step(const Vdp2& x, double u, double h);

struct VdpSolution {
  int exitflag = 0;
  /// u_0 .. u_{S-1}.
  std::vector<double> u;
  /// x_0 .. x_S; x_0 is the initial state.
  std::vector<Vdp2> x;
  /// Multipliers of the shooting constraints x_{k+1} - phi(x_k, u_k) = 0.
  std::vector<double> lambda;
  std::size_t iterations = 0;
  double kkt_residual = 0.0;
  double cost = 0.0;
};

/// Sum over stages of 1e-5 u_k^2 + |x_{k+1}|^2.
double vdp_cost(const std::vector<double>& u, const std::vector<Vdp2>& x);

/// Cost of the rollout with u = 0 from x0.
double vdp_zero_control_cost(const VdpProblem& problem, const Vdp2& x0);

struct VdpKkt {
  /// Natural residual |w - clamp(w - grad L)| over controls and |grad L| over states.
  double stationarity = 0.0;
  /// max_k |x_{k+1} - phi(x_k, u_k)|.
  double defect = 0.0;
  double bound_violation = 0.0;
  double residual() const;
};

VdpKkt vdp_kkt(const VdpProblem& problem, const VdpSolution& solution);

/// Solves the NMPC problem at state x, warm-started from (0, y, 0, y, ..., 0, y).
/// Never throws for finite inputs; failures are reported through exitflag.
VdpSolution vdp_solve(const VdpProblem& problem, const Vdp2& x, const Vdp2& y);

/// [-box, box] x [-box, box] as two one-dimensional components x1 and x2, so
/// perturbation radii are given per state coordinate.
StateSpace vdp_statespace(const VdpProblem& problem);

class VdpController final : public TwoArgController {
 public:
  explicit VdpController(VdpProblem problem);
  ControlResult solve(const StatePoint& x, const StatePoint& warm_start) override;
  using TwoArgController::solve;
  OracleConcurrency concurrency() const override { return OracleConcurrency::ConcurrentSafe; }
  std::unique_ptr<TwoArgController> replicate() const override;
  std::string name() const override { return "vdp"; }
  const VdpProblem& problem() const noexcept { return problem_; }

 private:
  VdpProblem problem_;
};

std::unique_ptr<TwoArgController> vdp_controller2(const VdpProblem& problem);
/// F(x) = 1 iff vdp_solve(x, x) ends with exitflag 1.
std::unique_ptr<ReliabilityOracle> vdp_oracle(const VdpProblem& problem);

}  // namespace relsim
