// Riemannian gradient descent with Barzilai-Borwein step sizes and the
// nonmonotone line search of Zhang-Hager, plus a projected Adagrad variant.
#pragma once

#include "riemopt/core.hpp"
#include "riemopt/manifolds.hpp"

namespace riemopt {

// Moving-average reference value of the nonmonotone line search:
//   Q_{k+1} = w Q_k + 1,   C_{k+1} = (w Q_k C_k + f_{k+1}) / Q_{k+1},
// started at C_0 = f(x_0), Q_0 = 1.  C_k is a convex combination of all f
// values seen so far, decreases strictly along accepted steps, and stays
// above f(x_k); Q_k < 1/(1 - w).
struct NonmonotoneState {
  double C = 0.0;
  double Q = 1.0;
  double weight = 0.85;

  static NonmonotoneState start(double f0, double weight);
  void push(double f_next);
};

// Differences feeding the BB step: s = x_k - x_{k-1}, v = g_k - g_{k-1}
// (ambient differences; the metric is the restricted Euclidean one).
struct BbMemory {
  DenseMat s;
  DenseMat v;
  bool has_pair = false;
  bool use_long = true;     // <s,s>/|<s,v>| when true, |<s,v>|/<v,v> otherwise
  double fallback = 1e-2;   // returned (clamped) when <s,v> degenerates
};

// Safeguarded BB step, clamped to [bb_min, bb_max].
double bb_step(const BbMemory& mem, double bb_min, double bb_max);

struct LineSearchResult {
  double step = 0.0;
  DenseMat x_next;
  double f_next = kNaN;
  int backtracks = 0;
  bool success = false;
};

// Backtracking search for f(R_x(t eta)) <= C_ref + rho t <g, eta>, starting
// at t = t0 and shrinking by delta.  g_dot_eta = <grad f(x), eta> must be
// negative (ContractViolation otherwise).
LineSearchResult nonmonotone_armijo(const Manifold& m, const Objective& obj, const DenseMat& x,
                                    const DenseMat& eta, double g_dot_eta, double t0, double C_ref,
                                    double rho, double delta, int max_backtracks);

SolverReport solve_gbb(const Manifold& m, const Objective& obj, const DenseMat& x0,
                       const SolverOptions& opts);

// Projected diagonal-scaling variant: accumulates G += g .* g and steps
//   x <- P_M(x - lr * g ./ sqrt(G + eps_div)).
SolverReport solve_adagrad(const Manifold& m, const Objective& obj, const DenseMat& x0,
                           double lr, double eps_div, const SolverOptions& opts);

}  // namespace riemopt
