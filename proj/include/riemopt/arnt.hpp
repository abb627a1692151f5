// Adaptive regularized Newton solver.  Outer iterations minimize the
// quadratic-plus-proximal model
//   m_k(z) = <grad f(x_k), z - x_k> + 1/2 <H_k (z - x_k), z - x_k>
//            + sigma_k/2 ||z - x_k||^2
// over the manifold, accept or reject the trial point by the trust-region
// style ratio (f(z) - f(x_k)) / m_k(z_k), and adapt sigma_k = sigma_hat_k *
// ||grad f(x_k)||.  The subproblem is solved either by a modified CG on the
// tangent space followed by a model line search, or (quasi-Newton variant) by
// running the nonmonotone gradient solver on the model itself.
#pragma once

#include <functional>
#include <optional>

#include "riemopt/core.hpp"
#include "riemopt/manifolds.hpp"

namespace riemopt {

// Frozen model data at an anchor point.  The Riemannian model Hessian at the
// anchor is  P_x(H_k xi) + sigma xi + W_x(xi, normal part of grad f(x_k)),
// which is exactly the Riemannian Hessian of m_k at x_k.
class ModelState {
 public:
  ModelState(const Manifold& m, const Objective& obj, DenseMat x, DenseMat egrad, double sigma);

  const Manifold& manifold() const { return m_; }
  const DenseMat& anchor() const { return x_; }
  const DenseMat& euclid_grad() const { return egrad_; }
  const DenseMat& rgrad() const { return rgrad_; }
  double grad_norm() const { return grad_norm_; }
  double sigma() const { return sigma_; }

  // Riemannian Hessian of the model at the anchor, applied to a tangent xi.
  DenseMat hess_vec(const DenseMat& xi) const;

  // Euclidean Hessian of the objective at the anchor (no projection, no sigma).
  DenseMat obj_hess(const DenseMat& v) const;

  // Ambient model value m_k(z); m_k(anchor) = 0.
  double eval(const DenseMat& z) const;

  // Tangent-space quadratic <g, xi> + 1/2 <xi, hess_vec(xi)>; the second-order
  // Taylor expansion of eval along retraction curves (equal to eval(x + xi)
  // only in flat space, where the curvature term vanishes).
  double quadratic(const DenseMat& xi) const;

 private:
  const Manifold& m_;
  const Objective& obj_;
  DenseMat x_;
  DenseMat egrad_;
  DenseMat rgrad_;
  DenseMat normal_;  // egrad - rgrad, feeds the curvature term
  double sigma_;
  double grad_norm_;
};

// Ambient extension of the model, so the gradient solver can run on it.
class ModelObjective final : public Objective {
 public:
  explicit ModelObjective(const ModelState& ms) : ms_(ms) {}
  double eval(const DenseMat& z) const override { return ms_.eval(z); }
  DenseMat euclid_grad(const DenseMat& z) const override;
  DenseMat euclid_hess_vec(const DenseMat& z, const DenseMat& v) const override;

 private:
  const ModelState& ms_;
};

// ---------------------------------------------------------------------------
// Modified CG on the tangent space for  hess_vec(xi) = -rgrad.

enum class CgStop { Residual, SmallCurvature, NegativeCurvature, IterCap };

const char* to_string(CgStop s);

// Per-iteration CG history, recorded on request for the algebra tests.
struct CgTrace {
  std::vector<DenseMat> p;    // search directions p_0, ..., p_l
  std::vector<DenseMat> r;    // residuals r_0, ..., r_{l+1} as produced
  std::vector<DenseMat> eta;  // partial solutions eta_0 = 0, eta_1, ...
  std::vector<double> curvature;  // pi_i = <p_i, H p_i>
  std::vector<double> alpha;      // executed step sizes
};

struct CgOutcome {
  DenseMat s;                     // Newton-like component
  DenseMat d;                     // negative-curvature direction (empty if none)
  bool has_d = false;
  double d_curvature = kNaN;      // <d, H d>, negative when has_d
  std::optional<double> sigma_est;  // |<d, H d>| / <d, d> when has_d
  int iters = 0;                  // Hessian products spent in the loop
  CgStop stop = CgStop::Residual;
};

// Runs the CG recurrences with three exits:
//  * curvature <p, Hp>/<p, p> <= eps: returns the current partial solution
//    (steepest descent -rgrad when this happens immediately); if the
//    curvature is <= -eps at a later iteration the offending direction is
//    exported together with its curvature magnitude;
//  * residual ||r|| <= min(||r0||^theta, T) * ||r0||;
//  * iteration cap (min of itercap and the ambient dimension).
CgOutcome modified_cg(const ModelState& ms, double eps, double theta, double T, int itercap,
                      CgTrace* trace = nullptr);

// xi = s + tau d with tau = <d, rgrad> / <d, hess_vec(d)> (= s when no d).
// The combined direction always satisfies <rgrad, xi> < 0.
DenseMat combine_direction(const CgOutcome& out, const ModelState& ms);

struct ModelLineSearch {
  double alpha = 0.0;
  DenseMat z;        // retracted trial point
  double m_z = kNaN; // model value at z, negative on success
  int backtracks = 0;
  bool success = false;
};

// Backtracks alpha0 * delta^h until m(R_x(alpha xi)) <= rho * alpha * <g, xi>.
ModelLineSearch model_armijo(const ModelState& ms, const DenseMat& xi, double alpha0, double rho,
                             double delta, int max_backtracks);

// ---------------------------------------------------------------------------
// Outer solvers.

// Called after each inner CG solve with the model, the CG outcome and the
// combined direction (before the line search).
struct InnerSolveInfo {
  int outer_k;
  const ModelState& model;
  const CgOutcome& outcome;
  const DenseMat& xi;
};
using InnerObserver = std::function<void(const InnerSolveInfo&)>;

SolverReport solve_arnt(const Manifold& m, const Objective& obj, const DenseMat& x0,
                        const SolverOptions& opts, const InnerObserver& observer = {});

// Quasi-Newton variant: the subproblem is solved by the nonmonotone gradient
// method on m_k (tolerance min(0.1 ||grad f(x_k)||, 1e-4 ||grad f(x_0)||)).
SolverReport solve_trqh(const Manifold& m, const Objective& obj, const DenseMat& x0,
                        const SolverOptions& opts);

// CG iteration cap for a given gradient norm (see SolverOptions::cg_cap_*).
int cg_iteration_cap(const SolverOptions& opts, double grad_norm, int ambient_dim);

}  // namespace riemopt
