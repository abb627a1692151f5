#include "riemopt/arnt.hpp"

#include <chrono>

#include "riemopt/gbb.hpp"

namespace riemopt {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

// ---------------------------------------------------------------------------
// ModelState

ModelState::ModelState(const Manifold& m, const Objective& obj, DenseMat x, DenseMat egrad,
                       double sigma)
    : m_(m), obj_(obj), x_(std::move(x)), egrad_(std::move(egrad)), sigma_(sigma) {
  rgrad_ = m_.project_tangent(x_, egrad_);
  normal_ = egrad_ - rgrad_;
  grad_norm_ = rgrad_.norm();
  if (!(sigma_ >= 0.0)) throw ContractViolation("ModelState: sigma must be nonnegative");
}

DenseMat ModelState::hess_vec(const DenseMat& xi) const {
  DenseMat h = m_.project_tangent(x_, obj_.euclid_hess_vec(x_, xi));
  if (sigma_ != 0.0) h += sigma_ * xi;
  h += m_.weingarten(x_, xi, normal_);
  return h;
}

DenseMat ModelState::obj_hess(const DenseMat& v) const { return obj_.euclid_hess_vec(x_, v); }

double ModelState::eval(const DenseMat& z) const {
  DenseMat dlt = z - x_;
  double v = frobenius_inner(egrad_, dlt) +
             0.5 * frobenius_inner(obj_.euclid_hess_vec(x_, dlt), dlt);
  if (sigma_ != 0.0) v += 0.5 * sigma_ * frobenius_inner(dlt, dlt);
  return v;
}

double ModelState::quadratic(const DenseMat& xi) const {
  return frobenius_inner(rgrad_, xi) + 0.5 * frobenius_inner(hess_vec(xi), xi);
}

DenseMat ModelObjective::euclid_grad(const DenseMat& z) const {
  DenseMat dlt = z - ms_.anchor();
  DenseMat g = ms_.euclid_grad() + ms_.obj_hess(dlt);
  if (ms_.sigma() != 0.0) g += ms_.sigma() * dlt;
  return g;
}

DenseMat ModelObjective::euclid_hess_vec(const DenseMat&, const DenseMat& v) const {
  DenseMat h = ms_.obj_hess(v);
  if (ms_.sigma() != 0.0) h += ms_.sigma() * v;
  return h;
}

// ---------------------------------------------------------------------------
// Modified CG

const char* to_string(CgStop s) {
  switch (s) {
    case CgStop::Residual: return "Residual";
    case CgStop::SmallCurvature: return "SmallCurvature";
    case CgStop::NegativeCurvature: return "NegativeCurvature";
    case CgStop::IterCap: return "IterCap";
  }
  return "Unknown";
}

CgOutcome modified_cg(const ModelState& ms, double eps, double theta, double T, int itercap,
                      CgTrace* trace) {
  if (!(eps >= 0.0) || !(theta > 0.0) || !(T > 0.0))
    throw std::invalid_argument("modified_cg: need eps >= 0, theta > 0, T > 0");

  CgOutcome out;
  const DenseMat& g = ms.rgrad();
  const double r0_norm = g.norm();
  if (r0_norm == 0.0) {
    out.s = DenseMat::Zero(g.rows(), g.cols());
    out.stop = CgStop::Residual;
    return out;
  }

  DenseMat eta = DenseMat::Zero(g.rows(), g.cols());
  DenseMat r = g;
  DenseMat p = -r;
  double rr = r0_norm * r0_norm;
  const double threshold = std::min(std::pow(r0_norm, theta), T) * r0_norm;
  const int cap = std::min(itercap, ms.manifold().ambient_dim());

  if (trace) {
    trace->eta.push_back(eta);
    trace->r.push_back(r);
  }

  for (int i = 0; i < cap; ++i) {
    DenseMat hp = ms.hess_vec(p);
    const double pi = frobenius_inner(p, hp);
    const double pp = frobenius_inner(p, p);
    out.iters = i + 1;
    if (trace) {
      trace->p.push_back(p);
      trace->curvature.push_back(pi);
    }

    const double curv = pi / pp;
    if (curv <= eps) {
      // The quadratic stops being usefully convex along p.  Fall back to the
      // best iterate so far (steepest descent when this is immediate) and
      // export the offending direction if the curvature is truly negative.
      out.s = i == 0 ? DenseMat(-g) : eta;
      if (curv <= -eps && i > 0) {
        out.d = p;
        out.has_d = true;
        out.d_curvature = pi;
        out.sigma_est = std::abs(pi) / pp;
      }
      out.stop = curv <= -eps ? CgStop::NegativeCurvature : CgStop::SmallCurvature;
      return out;
    }

    const double alpha = rr / pi;
    eta += alpha * p;
    r += alpha * hp;
    // Re-project the residual: rounding leaks a normal component into r that
    // the recurrence never damps, and on manifolds with a large ambient
    // gradient the Weingarten term amplifies that leak into fake curvature.
    r = ms.manifold().project_tangent(ms.anchor(), r);
    const double rr_next = frobenius_inner(r, r);
    if (trace) {
      trace->alpha.push_back(alpha);
      trace->eta.push_back(eta);
      trace->r.push_back(r);
    }

    if (std::sqrt(rr_next) <= threshold) {
      out.s = eta;
      out.stop = CgStop::Residual;
      return out;
    }

    const double beta = rr_next / rr;
    p = -r + beta * p;
    rr = rr_next;
  }

  out.s = eta;
  out.stop = CgStop::IterCap;
  return out;
}

DenseMat combine_direction(const CgOutcome& out, const ModelState& ms) {
  if (!out.has_d) return out.s;
  if (!(out.d_curvature < 0.0))
    throw ContractViolation("combine_direction: exported direction has nonnegative curvature");
  const double tau = frobenius_inner(out.d, ms.rgrad()) / out.d_curvature;
  return out.s + tau * out.d;
}

ModelLineSearch model_armijo(const ModelState& ms, const DenseMat& xi, double alpha0, double rho,
                             double delta, int max_backtracks) {
  const double g_dot_xi = frobenius_inner(ms.rgrad(), xi);
  if (!(g_dot_xi < 0.0))
    throw ContractViolation("model_armijo: direction is not a model descent direction");

  // The model is an exact quadratic along xi, so the backtracking condition
  // reduces to a scalar inequality in alpha.  Evaluating that closed form
  // instead of re-projecting a trial point per backtrack keeps the test
  // meaningful even when the ambient gradient dwarfs the model decrease:
  // re-projection of the anchor itself injects noise of order
  // eps*|egrad|*|x| into the trial value, which drowns the right-hand side
  // long before the gradient tolerance is reached on stiff problems.
  const double curvature = frobenius_inner(xi, ms.hess_vec(xi));

  ModelLineSearch res;
  double alpha = alpha0;
  for (int h = 0; h < max_backtracks; ++h) {
    const double m_z = alpha * g_dot_xi + 0.5 * alpha * alpha * curvature;
    if (m_z <= rho * alpha * g_dot_xi) {
      res.alpha = alpha;
      res.z = ms.manifold().retract(ms.anchor(), alpha * xi);
      res.m_z = m_z;
      res.backtracks = h;
      res.success = true;
      return res;
    }
    alpha *= delta;
  }
  res.backtracks = max_backtracks;
  return res;
}

int cg_iteration_cap(const SolverOptions& opts, double grad_norm, int ambient_dim) {
  const double digits = -std::log10(std::max(grad_norm, 1e-12));
  const int wanted = static_cast<int>(std::ceil(opts.cg_cap_slope * std::max(digits, 0.0)));
  const int capped = std::min(std::max(wanted, opts.cg_cap_min), opts.cg_cap_max);
  return std::min(capped, ambient_dim);
}

// ---------------------------------------------------------------------------
// Outer loop shared by the Newton and quasi-Newton variants.

namespace {

enum class InnerKind { ModifiedCg, GradientModel };

SolverReport solve_regularized(const Manifold& m, const Objective& obj, const DenseMat& x0,
                               const SolverOptions& opts, InnerKind kind,
                               const InnerObserver& observer) {
  opts.validate();
  if (!m.is_feasible(x0, 1e-8))
    throw FeasibilityError("regularized Newton: starting point is not on the manifold");

  const auto t_start = Clock::now();
  SolverReport rep;

  DenseMat x = x0;
  if (opts.warm_start) {
    SolverOptions wopts = opts;
    wopts.grad_tol = opts.warm_start_tol;
    wopts.max_outer = opts.warm_start_cap;
    wopts.warm_start = false;
    SolverReport warm = solve_gbb(m, obj, x, wopts);
    x = std::move(warm.x);
    rep.warm_start_iters = warm.outer_iters;
  }
  rep.start_hash = matrix_hash(x);

  double f = obj.eval(x);
  DenseMat egrad = obj.euclid_grad(x);
  DenseMat rgrad = m.riemannian_grad(x, egrad);
  double gnorm = rgrad.norm();

  rep.initial_f = f;
  rep.initial_grad_norm = gnorm;
  const double g0_ref = gnorm;

  double sigma_hat = opts.sigma_hat0;
  long total_inner = 0;

  int k = 0;
  for (; k < opts.max_outer; ++k) {
    if (gnorm <= opts.grad_tol) {
      rep.status = SolveStatus::Converged;
      break;
    }

    const double sigma = sigma_hat * gnorm;
    ModelState ms(m, obj, x, egrad, sigma);

    TraceRecord rec;
    rec.k = k;
    rec.sigma_hat = sigma_hat;
    rec.sigma = sigma;

    DenseMat z;
    double m_z = kNaN;
    bool have_trial = false;

    if (kind == InnerKind::ModifiedCg) {
      const int cap = cg_iteration_cap(opts, gnorm, m.ambient_dim());
      CgOutcome cg = modified_cg(ms, opts.cg_eps, opts.cg_theta, opts.cg_T, cap);
      total_inner += cg.iters;
      rec.inner_iters = cg.iters;
      rec.negative_curvature = cg.stop == CgStop::NegativeCurvature;
      if (cg.sigma_est) rec.sigma_est = *cg.sigma_est;

      DenseMat xi = combine_direction(cg, ms);
      if (observer) observer(InnerSolveInfo{k, ms, cg, xi});

      // Roundoff can flip the descent sign of the combined direction once the
      // gradient is near the noise floor; treat that like an exhausted line
      // search rather than violating the model_armijo contract.
      if (frobenius_inner(ms.rgrad(), xi) < 0.0) {
        ModelLineSearch ls = model_armijo(ms, xi, opts.model_alpha0, opts.ls_rho, opts.ls_delta,
                                          opts.ls_max_backtracks);
        if (ls.success) {
          rec.step = ls.alpha;
          z = std::move(ls.z);
          m_z = ls.m_z;
          have_trial = true;
          if (!(m_z < 0.0))
            throw NumericalError("regularized Newton: model value " + std::to_string(m_z) +
                                 " is not negative at the accepted line-search point");
        }
      }
      // An exhausted or unusable model search falls through to the rejection
      // path so the sigma escalation convexifies the next model.
    } else {
      SolverOptions iopts = SolverOptions::gradient_defaults();
      iopts.grad_tol = std::min(0.1 * gnorm, 1e-4 * g0_ref);
      iopts.max_outer = opts.inner_gbb_cap;
      iopts.nm_weight = opts.nm_weight;
      iopts.ls_rho = opts.ls_rho;
      iopts.ls_delta = opts.ls_delta;
      iopts.bb_alternation = opts.bb_alternation;
      ModelObjective model(ms);
      SolverReport inner = solve_gbb(m, model, x, iopts);
      total_inner += inner.outer_iters;
      rec.inner_iters = inner.outer_iters;
      if (inner.outer_iters > 0) {
        z = std::move(inner.x);
        m_z = inner.final_f;
        have_trial = true;
      }
      // No progress on the model at all: fall through to the rejection path.
    }

    bool accepted = false;
    if (have_trial && m_z < 0.0) {
      const double f_z = obj.eval(z);
      if (std::isfinite(f_z)) {
        const double rho = (f_z - f) / m_z;
        rec.rho = rho;
        accepted = rho >= opts.eta1;
        if (rho >= opts.eta2)
          sigma_hat *= opts.gamma0;
        else if (rho >= opts.eta1)
          sigma_hat *= opts.gamma1;
        else
          sigma_hat *= opts.gamma2;
        if (accepted) {
          x = std::move(z);
          f = f_z;
          egrad = obj.euclid_grad(x);
          rgrad = m.riemannian_grad(x, egrad);
          gnorm = rgrad.norm();
        }
      } else {
        // Objective blew up at the trial point: treat as a failed step.
        sigma_hat *= opts.gamma2;
      }
    } else {
      sigma_hat *= opts.gamma2;
    }

    // A detected negative-curvature magnitude lifts the regularization onto
    // the scale that convexifies the model.
    if (!std::isnan(rec.sigma_est))
      sigma_hat = std::max(sigma_hat,
                           (rec.sigma_est + opts.curvature_margin) / std::max(gnorm, 1e-300));

    rec.f = f;
    rec.grad_norm = gnorm;
    rec.accepted = accepted;
    rep.trace.push_back(rec);
  }
  if (rep.status == SolveStatus::MaxIters && gnorm <= opts.grad_tol)
    rep.status = SolveStatus::Converged;

  rep.x = std::move(x);
  rep.outer_iters = static_cast<int>(rep.trace.size());
  rep.mean_inner_iters =
      rep.outer_iters > 0 ? static_cast<double>(total_inner) / rep.outer_iters : 0.0;
  rep.final_f = f;
  rep.final_grad_norm = gnorm;
  rep.wall_time_s = seconds_since(t_start);
  return rep;
}

}  // namespace

SolverReport solve_arnt(const Manifold& m, const Objective& obj, const DenseMat& x0,
                        const SolverOptions& opts, const InnerObserver& observer) {
  return solve_regularized(m, obj, x0, opts, InnerKind::ModifiedCg, observer);
}

SolverReport solve_trqh(const Manifold& m, const Objective& obj, const DenseMat& x0,
                        const SolverOptions& opts) {
  return solve_regularized(m, obj, x0, opts, InnerKind::GradientModel, {});
}

}  // namespace riemopt
