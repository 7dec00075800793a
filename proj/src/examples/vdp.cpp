#include "relsim/examples/vdp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "relsim/errors.hpp"

namespace relsim {

void VdpProblem::validate() const {
  if (!(h > 0.0) || !(u_max > 0.0) || !(box > 0.0) || !(tol > 0.0) || max_iterations == 0) {
    throw ConfigError("vdp problem: h, u_max, box, tol and max_iterations must be positive");
  }
}

Vdp2 vdp_dynamics(const Vdp2& x, double u) { return {x[1], u * (1.0 - x[0] * x[0]) * x[1] - x[0]}; }

Vdp2 vdp_step(const Vdp2& x, double u, double h) {
  const auto k1 = vdp_dynamics(x, u);
  const auto k2 = vdp_dynamics({x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1]}, u);
  const auto k3 = vdp_dynamics({x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1]}, u);
  const auto k4 = vdp_dynamics({x[0] + h * k3[0], x[1] + h * k3[1]}, u);
  return {x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
          x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
}

double vdp_cost(const std::vector<double>& u, const std::vector<Vdp2>& x) {
  double c = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    c += VdpProblem::kControlWeight * u[k] * u[k] +
         VdpProblem::kStateWeight * (x[k + 1][0] * x[k + 1][0] + x[k + 1][1] * x[k + 1][1]);
  }
  return c;
}

double vdp_zero_control_cost(const VdpProblem& problem, const Vdp2& x0) {
  std::vector<double> u(VdpProblem::kStages, 0.0);
  std::vector<Vdp2> x{x0};
  for (std::size_t k = 0; k < VdpProblem::kStages; ++k) x.push_back(vdp_step(x.back(), 0.0, problem.h));
  return vdp_cost(u, x);
}

double VdpKkt::residual() const { return std::max({stationarity, defect, bound_violation}); }

namespace {

constexpr std::size_t S = VdpProblem::kStages;
constexpr int NS = static_cast<int>(S);
constexpr double kR = VdpProblem::kControlWeight;
constexpr double kQ = VdpProblem::kStateWeight;

using V2 = Eigen::Vector2d;
using M2 = Eigen::Matrix2d;
using M3 = Eigen::Matrix3d;
using Ctrl = Eigen::Matrix<double, NS, 1>;
using CtrlMat = Eigen::Matrix<double, NS, NS>;
using Sens = Eigen::Matrix<double, 2, NS>;

// Primal point: controls u_0..u_{S-1} and states x_0..x_S (x_0 fixed).
struct Point {
  Ctrl u = Ctrl::Zero();
  std::array<V2, S + 1> x{};
};

Point axpy(const Point& p, double a, const Point& d) {
  Point out = p;
  out.u += a * d.u;
  for (std::size_t k = 1; k <= S; ++k) out.x[k] += a * d.x[k];
  return out;
}

// Stage map phi(x, u), one RK4 step, with its Jacobians differentiated
// through the RK4 stages.
struct Step {
  V2 next;
  M2 dx;
  V2 du;
};

Step step(const V2& x, double u, double h) {
  auto f = [u](const V2& z) { return V2(z[1], u * (1.0 - z[0] * z[0]) * z[1] - z[0]); };
  auto fx = [u](const V2& z) {
    M2 j;
    j << 0.0, 1.0, -2.0 * u * z[0] * z[1] - 1.0, u * (1.0 - z[0] * z[0]);
    return j;
  };
  auto fu = [](const V2& z) { return V2(0.0, (1.0 - z[0] * z[0]) * z[1]); };

  const V2 k1 = f(x);
  const M2 a1 = fx(x);
  const V2 b1 = fu(x);

  const V2 z2 = x + 0.5 * h * k1;
  const V2 k2 = f(z2);
  const M2 a2 = fx(z2) * (M2::Identity() + 0.5 * h * a1);
  const V2 b2 = fx(z2) * (0.5 * h * b1) + fu(z2);

  const V2 z3 = x + 0.5 * h * k2;
  const V2 k3 = f(z3);
  const M2 a3 = fx(z3) * (M2::Identity() + 0.5 * h * a2);
  const V2 b3 = fx(z3) * (0.5 * h * b2) + fu(z3);

  const V2 z4 = x + h * k3;
  const V2 k4 = f(z4);
  const M2 a4 = fx(z4) * (M2::Identity() + h * a3);
  const V2 b4 = fx(z4) * (h * b3) + fu(z4);

  return {x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), M2::Identity() + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
          h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)};
}

// Hessian of lambda' phi in (x, u), central differences of the exact Jacobians.
M3 step_curvature(const V2& x, double u, double h, const V2& lambda) {
  M3 out;
  for (int j = 0; j < 3; ++j) {
    const double z = j < 2 ? x[j] : u;
    const double eps = 1e-5 * (1.0 + std::abs(z));
    V2 xp = x, xm = x;
    double up = u, um = u;
    if (j < 2) {
      xp[j] += eps;
      xm[j] -= eps;
    } else {
      up += eps;
      um -= eps;
    }
    const Step sp = step(xp, up, h);
    const Step sm = step(xm, um, h);
    Eigen::Matrix<double, 2, 3> dp, dm;
    dp << sp.dx, sp.du;
    dm << sm.dx, sm.du;
    out.col(j) = ((dp - dm) / (2.0 * eps)).transpose() * lambda;
  }
  return 0.5 * (out + out.transpose());
}

struct Model {
  double f = 0.0;
  /// c_k = x_{k+1} - phi(x_k, u_k).
  std::array<V2, S> c{};
  std::array<M2, S> a{};
  std::array<V2, S> b{};
  bool finite = true;

  double infeasibility() const {
    double s = 0.0;
    for (const auto& ck : c) s += ck.cwiseAbs().sum();
    return s;
  }
};

Model evaluate(const Point& p, double h, bool derivatives) {
  Model m;
  for (std::size_t k = 0; k < S; ++k) {
    m.f += kR * p.u[k] * p.u[k] + kQ * p.x[k + 1].squaredNorm();
    if (derivatives) {
      const Step s = step(p.x[k], p.u[k], h);
      m.c[k] = p.x[k + 1] - s.next;
      m.a[k] = s.dx;
      m.b[k] = s.du;
      m.finite = m.finite && s.dx.allFinite() && s.du.allFinite();
    } else {
      m.c[k] = p.x[k + 1] - step(p.x[k], p.u[k], h).next;
    }
    m.finite = m.finite && m.c[k].allFinite();
  }
  m.finite = m.finite && std::isfinite(m.f);
  return m;
}

V2 grad_x(const Point& p, std::size_t k) { return 2.0 * kQ * p.x[k]; }

// Shooting multipliers from stationarity in the states:
// r_k + lambda_{k-1} - A_k' lambda_k = 0 for k = 1..S (lambda_S absent).
std::array<V2, S> state_multipliers(const Model& m, const std::array<V2, S + 1>& r) {
  std::array<V2, S> lambda{};
  lambda[S - 1] = -r[S];
  for (std::size_t k = S - 1; k >= 1; --k) lambda[k - 1] = -r[k] + m.a[k].transpose() * lambda[k];
  return lambda;
}

std::array<V2, S> multipliers_at(const Model& m, const Point& p) {
  std::array<V2, S + 1> r{};
  for (std::size_t k = 1; k <= S; ++k) r[k] = grad_x(p, k);
  return state_multipliers(m, r);
}

VdpKkt kkt_at(const Model& m, const Point& p, const std::array<V2, S>& lambda, double u_max) {
  VdpKkt r;
  for (std::size_t k = 0; k < S; ++k) {
    const double gu = 2.0 * kR * p.u[k] - m.b[k].dot(lambda[k]);
    const double projected = std::clamp(p.u[k] - gu, -u_max, u_max);
    r.stationarity = std::max(r.stationarity, std::abs(p.u[k] - projected));
    r.bound_violation = std::max(r.bound_violation, std::abs(p.u[k]) - u_max);
    r.defect = std::max(r.defect, m.c[k].cwiseAbs().maxCoeff());
  }
  for (std::size_t k = 1; k <= S; ++k) {
    V2 gx = grad_x(p, k) + lambda[k - 1];
    if (k < S) gx -= m.a[k].transpose() * lambda[k];
    r.stationarity = std::max(r.stationarity, gx.cwiseAbs().maxCoeff());
  }
  r.bound_violation = std::max(r.bound_violation, 0.0);
  if (!std::isfinite(r.stationarity) || !std::isfinite(r.defect)) {
    r.stationarity = r.defect = std::numeric_limits<double>::infinity();
  }
  return r;
}

// Box-constrained convex QP min 1/2 v'Hv + g'v, lo <= v <= hi, lo <= 0 <= hi,
// by a primal active-set method started at v = 0.
bool box_qp(const CtrlMat& H, const Ctrl& g, const Ctrl& lo, const Ctrl& hi, Ctrl& v) {
  enum : signed char { Free = 0, Lower = -1, Upper = 1 };
  std::array<signed char, S> active{};
  v.setZero();
  for (int i = 0; i < NS; ++i) {
    if (lo[i] >= 0.0) active[i] = Lower;
    if (hi[i] <= 0.0) active[i] = Upper;
  }
  for (int iter = 0; iter < 8 * NS; ++iter) {
    std::vector<int> free_idx;
    Ctrl fixed = Ctrl::Zero();
    for (int i = 0; i < NS; ++i) {
      if (active[i] == Free) {
        free_idx.push_back(i);
      } else {
        fixed[i] = active[i] == Lower ? lo[i] : hi[i];
      }
    }
    Ctrl target = fixed;
    const Ctrl rhs = -(g + H * fixed);
    const int nf = static_cast<int>(free_idx.size());
    if (nf > 0) {
      Eigen::MatrixXd hf(nf, nf);
      Eigen::VectorXd rf(nf);
      for (int i = 0; i < nf; ++i) {
        rf[i] = rhs[free_idx[i]];
        for (int j = 0; j < nf; ++j) hf(i, j) = H(free_idx[i], free_idx[j]);
      }
      const Eigen::LLT<Eigen::MatrixXd> llt(hf);
      if (llt.info() != Eigen::Success) return false;
      const Eigen::VectorXd sol = llt.solve(rf);
      for (int i = 0; i < nf; ++i) target[free_idx[i]] = sol[i];
    }
    if (!target.allFinite()) return false;

    const Ctrl p = target - v;
    if (p.cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + v.cwiseAbs().maxCoeff())) {
      const Ctrl gamma = H * target + g;
      int worst = -1;
      double worst_violation = 0.0;
      for (int i = 0; i < NS; ++i) {
        const double viol = active[i] == Lower ? -gamma[i] : active[i] == Upper ? gamma[i] : 0.0;
        if (viol > worst_violation) {
          worst_violation = viol;
          worst = i;
        }
      }
      v = target;
      if (worst < 0) return true;
      active[worst] = Free;
      continue;
    }
    double tau = 1.0;
    int blocking = -1;
    for (int i = 0; i < NS; ++i) {
      if (active[i] != Free || p[i] == 0.0) continue;
      const double t = p[i] > 0.0 ? (hi[i] - v[i]) / p[i] : (lo[i] - v[i]) / p[i];
      if (t < tau) {
        tau = std::max(t, 0.0);
        blocking = i;
      }
    }
    v += tau * p;
    if (blocking >= 0) {
      active[blocking] = p[blocking] > 0.0 ? Upper : Lower;
      v[blocking] = p[blocking] > 0.0 ? hi[blocking] : lo[blocking];
    }
  }
  return false;
}

struct Direction {
  Point d;
  std::array<V2, S> lambda{};
  /// Model terms beyond the cost gradient: 1/2 du' H du under the modified
  /// reduced Hessian plus the coupling of du with the defect correction.
  double curvature = 0.0;
  /// Fraction of the shooting defects the linearized step removes.
  double theta = 1.0;
  bool ok = false;
};

// SQP subproblem, condensed onto the controls: the states follow the
// linearized shooting recursion dx_{k+1} = A_k dx_k + B_k du_k - c_k. The
// reduced Hessian is made positive definite by reflecting and flooring its
// eigenvalues, and the control step is confined to an l-infinity trust region.
Direction sqp_direction(const Model& m, const Point& p, const std::array<V2, S>& lambda, double h, double u_max,
                        double radius) {
  std::array<M3, S> hk{};
  for (std::size_t k = 0; k < S; ++k) {
    hk[k] = -step_curvature(p.x[k], p.u[k], h, lambda[k]);
    hk[k](0, 0) += 2.0 * kQ;
    hk[k](1, 1) += 2.0 * kQ;
    hk[k](2, 2) += 2.0 * kR;
  }

  std::array<V2, S + 1> dp{};
  std::array<Sens, S + 1> z{};
  dp[0].setZero();
  z[0].setZero();
  for (std::size_t k = 0; k < S; ++k) {
    dp[k + 1] = m.a[k] * dp[k] - m.c[k];
    z[k + 1] = m.a[k] * z[k];
    z[k + 1].col(static_cast<int>(k)) += m.b[k];
  }
  // The reduced gradient is g_base + theta * g_defect, where theta is the
  // corrected fraction of the defects.
  CtrlMat hr = CtrlMat::Zero();
  Ctrl g_base = 2.0 * kR * p.u;
  Ctrl g_defect = Ctrl::Zero();
  for (std::size_t k = 0; k < S; ++k) {
    Eigen::Matrix<double, 3, NS> gk = Eigen::Matrix<double, 3, NS>::Zero();
    Eigen::Vector3d pk = Eigen::Vector3d::Zero();
    if (k > 0) {
      gk.topRows<2>() = z[k];
      pk.head<2>() = dp[k];
      g_base += z[k].transpose() * grad_x(p, k);
    } else {
      // x_0 is fixed; only the control part of the block enters.
      hk[0].row(0).setZero();
      hk[0].row(1).setZero();
      hk[0].col(0).setZero();
      hk[0].col(1).setZero();
    }
    gk(2, static_cast<int>(k)) = 1.0;
    hr += gk.transpose() * hk[k] * gk;
    g_defect += gk.transpose() * (hk[k] * pk);
  }
  hr += z[S].transpose() * (2.0 * kQ) * z[S];
  g_base += z[S].transpose() * grad_x(p, S);
  g_defect += z[S].transpose() * (2.0 * kQ * dp[S]);
  hr = 0.5 * (hr + hr.transpose());

  Direction out;
  const Eigen::SelfAdjointEigenSolver<CtrlMat> eig(hr);
  if (eig.info() != Eigen::Success) return out;
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    const double floor = 1e-8 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    const Ctrl ev = eig.eigenvalues().cwiseAbs().cwiseMax(floor);
    hr = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
  }

  Ctrl lo, hi;
  for (int i = 0; i < NS; ++i) {
    lo[i] = std::min(0.0, std::max(-radius, -u_max - p.u[i]));
    hi[i] = std::max(0.0, std::min(radius, u_max - p.u[i]));
  }
  // Only the fraction theta of the defects is corrected when the full
  // correction alone would move the states beyond the trust radius.
  double defect_step = 0.0;
  for (const auto& v : dp) defect_step = std::max(defect_step, v.cwiseAbs().maxCoeff());
  const double theta = defect_step > radius ? radius / defect_step : 1.0;
  Ctrl du;
  if (!box_qp(hr, g_base + theta * g_defect, lo, hi, du)) return out;

  out.d.u = du;
  out.theta = theta;
  out.curvature = 0.5 * du.dot(hr * du) + theta * g_defect.dot(du);
  out.d.x[0].setZero();
  for (std::size_t k = 1; k <= S; ++k) out.d.x[k] = theta * dp[k] + z[k] * du;

  // QP multipliers from stationarity of the QP in the states.
  std::array<V2, S + 1> r{};
  for (std::size_t k = 1; k < S; ++k) {
    Eigen::Vector3d dk;
    dk << out.d.x[k], du[static_cast<int>(k)];
    r[k] = (hk[k] * dk).head<2>() + grad_x(p, k);
  }
  r[S] = 2.0 * kQ * out.d.x[S] + grad_x(p, S);
  out.lambda = state_multipliers(m, r);
  out.ok = out.d.u.allFinite();
  for (const auto& xk : out.d.x) out.ok = out.ok && xk.allFinite();
  return out;
}

double directional_cost(const Point& p, const Point& d) {
  double s = 2.0 * kR * p.u.dot(d.u);
  for (std::size_t k = 1; k <= S; ++k) s += grad_x(p, k).dot(d.x[k]);
  return s;
}

VdpSolution package(const Point& p, const std::array<V2, S>& lambda, const VdpKkt& kkt, std::size_t iterations,
                    int exitflag) {
  VdpSolution s;
  s.exitflag = exitflag;
  s.iterations = iterations;
  s.kkt_residual = kkt.residual();
  s.u.assign(p.u.data(), p.u.data() + NS);
  for (const auto& xk : p.x) s.x.push_back({xk[0], xk[1]});
  for (const auto& l : lambda) {
    s.lambda.push_back(l[0]);
    s.lambda.push_back(l[1]);
  }
  s.cost = vdp_cost(s.u, s.x);
  return s;
}

}  // namespace

VdpKkt vdp_kkt(const VdpProblem& problem, const VdpSolution& solution) {
  if (solution.u.size() != S || solution.x.size() != S + 1 || solution.lambda.size() != 2 * S) {
    throw std::invalid_argument("vdp_kkt: solution has the wrong shape");
  }
  Point p;
  std::array<V2, S> lambda{};
  for (std::size_t k = 0; k < S; ++k) {
    p.u[static_cast<int>(k)] = solution.u[k];
    lambda[k] = V2(solution.lambda[2 * k], solution.lambda[2 * k + 1]);
  }
  for (std::size_t k = 0; k <= S; ++k) p.x[k] = V2(solution.x[k][0], solution.x[k][1]);
  return kkt_at(evaluate(p, problem.h, true), p, lambda, problem.u_max);
}

VdpSolution vdp_solve(const VdpProblem& problem, const Vdp2& x, const Vdp2& y) {
  constexpr double kInitialRadius = 0.1;
  constexpr double kShrinkBelow = 0.1;
  constexpr double kGrowAbove = 0.5;
  constexpr double kAcceptAbove = 1e-4;

  Point p;
  p.x[0] = V2(x[0], x[1]);
  for (std::size_t k = 1; k <= S; ++k) p.x[k] = V2(y[0], y[1]);

  double penalty = 1.0;
  double radius = kInitialRadius;
  Model m = evaluate(p, problem.h, true);
  auto lambda = multipliers_at(m, p);
  const auto ratio_of = [](double actual, double predicted) {
    return predicted > 0.0 ? actual / predicted : (actual >= 0.0 ? 1.0 : -1.0);
  };
  for (std::size_t it = 0;; ++it) {
    if (!m.finite) {
      const double inf = std::numeric_limits<double>::infinity();
      return package(p, lambda, VdpKkt{inf, inf, 0.0}, it, 0);
    }
    const VdpKkt kkt = kkt_at(m, p, lambda, problem.u_max);
    if (kkt.residual() < problem.tol) return package(p, lambda, kkt, it, 1);
    if (it == problem.max_iterations) return package(p, lambda, kkt, it, 0);

    const Direction dir = sqp_direction(m, p, lambda, problem.h, problem.u_max, radius);
    if (!dir.ok) return package(p, lambda, kkt, it, 0);

    // l1 merit f + penalty |c|_1. The penalty stays above the QP multipliers
    // and above what the step needs to be a descent direction.
    const double removed = dir.theta * m.infeasibility();
    const double model_cost = directional_cost(p, dir.d) + dir.curvature;
    if (removed > 0.0) {
      double needed = model_cost / (0.9 * removed) + 1.0;
      for (const auto& l : dir.lambda) needed = std::max(needed, 1.1 * l.cwiseAbs().maxCoeff());
      penalty = std::max(penalty, needed);
    }
    const double merit = m.f + penalty * m.infeasibility();
    const double predicted = -model_cost + penalty * removed;

    Point next = axpy(p, 1.0, dir.d);
    Model next_model = evaluate(next, problem.h, true);
    double ratio = next_model.finite
                       ? ratio_of(merit - (next_model.f + penalty * next_model.infeasibility()), predicted)
                       : -1.0;
    if (ratio < kShrinkBelow && next_model.finite) {
      // Second-order correction: keep the trial controls and shift the states
      // by the linearized response to the defects left at the trial point.
      Point corrected = next;
      V2 dx = V2::Zero();
      for (std::size_t k = 0; k < S; ++k) {
        dx = m.a[k] * dx - next_model.c[k];
        corrected.x[k + 1] += dx;
      }
      const Model mc = evaluate(corrected, problem.h, true);
      if (mc.finite) {
        const double ratio_c = ratio_of(merit - (mc.f + penalty * mc.infeasibility()), predicted);
        if (ratio_c > ratio) {
          ratio = ratio_c;
          next = corrected;
          next_model = mc;
        }
      }
    }

    const double du_max = dir.d.u.cwiseAbs().maxCoeff();
    if (ratio < kShrinkBelow) {
      radius = 0.25 * std::max(du_max, 1e-3 * radius);
    } else if (ratio > kGrowAbove && (du_max >= 0.99 * radius || dir.theta < 1.0)) {
      radius = std::min(2.0 * radius, 2.0 * problem.u_max);
    }
    if (ratio > kAcceptAbove) {
      p = next;
      m = next_model;
      lambda = multipliers_at(m, p);
    }
    if (radius < 1e-12) return package(p, lambda, kkt_at(m, p, lambda, problem.u_max), it + 1, 0);
  }
}

StateSpace vdp_statespace(const VdpProblem& problem) {
  problem.validate();
  return StateSpace({{"x1", IntervalBlock{{{-problem.box, problem.box}}}},
                     {"x2", IntervalBlock{{{-problem.box, problem.box}}}}});
}

VdpController::VdpController(VdpProblem problem) : problem_(problem) { problem_.validate(); }

ControlResult VdpController::solve(const StatePoint& x, const StatePoint& warm_start) {
  if (x.size() != 2 || warm_start.size() != 2) throw std::invalid_argument("vdp controller expects 2-d states");
  const auto s = vdp_solve(problem_, {x[0], x[1]}, {warm_start[0], warm_start[1]});
  return ControlResult{s.u, s.exitflag == 1};
}

std::unique_ptr<TwoArgController> VdpController::replicate() const {
  return std::make_unique<VdpController>(problem_);
}

std::unique_ptr<TwoArgController> vdp_controller2(const VdpProblem& problem) {
  return std::make_unique<VdpController>(problem);
}

std::unique_ptr<ReliabilityOracle> vdp_oracle(const VdpProblem& problem) {
  return std::make_unique<ControllerOracle>(vdp_controller2(problem));
}

}  // namespace relsim
