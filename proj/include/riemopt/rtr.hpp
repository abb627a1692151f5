// Riemannian trust-region solver with a Steihaug-Toint truncated CG
// subproblem solver.  Serves as the second-order comparator: same warm start
// and stopping rules as the regularized Newton solver, classic radius logic.
#pragma once

#include "riemopt/arnt.hpp"
#include "riemopt/core.hpp"
#include "riemopt/manifolds.hpp"

namespace riemopt {

struct TcgResult {
  DenseMat xi;
  int iters = 0;              // Hessian products spent
  bool hit_boundary = false;
  bool negative_curvature = false;
  double model_value = 0.0;   // <g, xi> + 1/2 <xi, H xi>, nonpositive
};

// Minimizes the quadratic <g, xi> + 1/2 <xi, hess_vec(xi)> over the ball
// ||xi|| <= radius.  ms must carry sigma = 0 so hess_vec is the plain
// Riemannian Hessian.  Interior termination once
//   ||r|| <= max(||r0|| * min(||r0||^theta, kappa), min(0.1, 0.1 ||r0||));
// negative curvature or leaving the ball moves the step to the boundary.
TcgResult truncated_cg(const ModelState& ms, double radius, double kappa, double theta,
                       int itercap);

SolverReport solve_rtr(const Manifold& m, const Objective& obj, const DenseMat& x0,
                       const SolverOptions& opts);

}  // namespace riemopt
