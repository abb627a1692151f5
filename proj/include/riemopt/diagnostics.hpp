// Finite-difference verification of objective oracles and the descent-angle
// certificate for inner Newton directions.
#pragma once

#include <cstdint>
#include <functional>

#include "riemopt/core.hpp"
#include "riemopt/manifolds.hpp"

namespace riemopt {

struct DerivativeCheck {
  double max_rel_err = 0.0;
  int probes = 0;
  bool pass = false;
};

// Compares <grad f(x), u> against central differences of f along random
// ambient unit directions.  Errors are measured relative to
// max(1, |analytic|, |numeric|).
DerivativeCheck check_gradient(const Objective& obj, const DenseMat& x, double h = 1e-6,
                               int probes = 10, double tol = 1e-5, std::uint64_t seed = 0);

// Compares euclid_hess_vec against central differences of the gradient.
DerivativeCheck check_hess_vec(const Objective& obj, const DenseMat& x, double h = 1e-5,
                               int probes = 10, double tol = 1e-4, std::uint64_t seed = 0);

// Compares the projected Hessian (plus curvature correction) against central
// differences of the Riemannian gradient along retraction curves:
//   Hess f(x)[xi]  vs  P_x[(grad f(R_x(h xi)) - grad f(R_x(-h xi))) / 2h].
// Directions are random unit tangent vectors.
DerivativeCheck check_riemannian_hess_vec(const Objective& obj, const Manifold& m,
                                          const DenseMat& x, double h = 1e-6, int probes = 10,
                                          double tol = 1e-5, std::uint64_t seed = 0);

struct DescentCertificate {
  double cos_angle = 0.0;     // <g, xi> / (||g|| ||xi||)
  double kappa_hat = 0.0;     // power-iteration estimate of ||Hess||
  double angle_bound = 0.0;   // min(eps/2, 1) / (n (kappa_hat + 1))
  bool pass = false;
};

// Certifies that xi is a uniformly safe descent direction for a model with
// gradient g and Hessian operator hess: cos_angle <= -0.9 * angle_bound.
// kappa_hat comes from 50 rounds of power iteration (tolerance 1e-6) on hess.
DescentCertificate certify_descent_angle(const DenseMat& g, const DenseMat& xi,
                                         const std::function<DenseMat(const DenseMat&)>& hess,
                                         double eps, std::uint64_t seed = 0);

}  // namespace riemopt
