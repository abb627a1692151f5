#include "riemopt/rtr.hpp"

#include <chrono>

#include "riemopt/gbb.hpp"

namespace riemopt {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Positive root of ||z + tau d||^2 = radius^2.
double boundary_tau(const DenseMat& z, const DenseMat& d, double radius) {
  const double dd = frobenius_inner(d, d);
  const double zd = frobenius_inner(z, d);
  const double zz = frobenius_inner(z, z);
  const double disc = zd * zd + dd * (radius * radius - zz);
  return (-zd + std::sqrt(std::max(disc, 0.0))) / dd;
}

}  // namespace

TcgResult truncated_cg(const ModelState& ms, double radius, double kappa, double theta,
                       int itercap) {
  if (!(radius > 0.0)) throw std::invalid_argument("truncated_cg: radius must be positive");
  if (ms.sigma() != 0.0)
    throw ContractViolation("truncated_cg: model must carry sigma = 0");

  TcgResult res;
  const DenseMat& g = ms.rgrad();
  const double r0_norm = g.norm();
  res.xi = DenseMat::Zero(g.rows(), g.cols());
  if (r0_norm == 0.0) return res;

  const double threshold = std::max(r0_norm * std::min(std::pow(r0_norm, theta), kappa),
                                    std::min(0.1, 0.1 * r0_norm));
  const int cap = std::min(itercap, ms.manifold().ambient_dim());

  DenseMat z = res.xi;
  DenseMat r = g;
  DenseMat d = -r;
  double rr = r0_norm * r0_norm;

  for (int j = 0; j < cap; ++j) {
    DenseMat hd = ms.hess_vec(d);
    const double dhd = frobenius_inner(d, hd);
    res.iters = j + 1;

    if (dhd <= 0.0) {
      res.xi = z + boundary_tau(z, d, radius) * d;
      res.hit_boundary = true;
      res.negative_curvature = true;
      break;
    }

    const double alpha = rr / dhd;
    if ((z + alpha * d).norm() >= radius) {
      res.xi = z + boundary_tau(z, d, radius) * d;
      res.hit_boundary = true;
      break;
    }

    z += alpha * d;
    r += alpha * hd;
    // Same residual hygiene as the regularized-Newton CG: without the
    // re-projection, rounding accumulates a normal component that the
    // Weingarten term turns into fake curvature on stiff problems.
    r = ms.manifold().project_tangent(ms.anchor(), r);
    const double rr_next = frobenius_inner(r, r);
    if (std::sqrt(rr_next) <= threshold) {
      res.xi = z;
      break;
    }
    d = -r + (rr_next / rr) * d;
    rr = rr_next;
    res.xi = z;
  }

  res.model_value = ms.quadratic(res.xi);
  return res;
}

SolverReport solve_rtr(const Manifold& m, const Objective& obj, const DenseMat& x0,
                       const SolverOptions& opts) {
  opts.validate();
  if (!m.is_feasible(x0, 1e-8))
    throw FeasibilityError("solve_rtr: starting point is not on the manifold");

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

  double radius = opts.tr_radius0;
  long total_inner = 0;

  for (int k = 0; k < opts.max_outer; ++k) {
    if (gnorm <= opts.grad_tol) {
      rep.status = SolveStatus::Converged;
      break;
    }

    ModelState ms(m, obj, x, egrad, 0.0);
    const int cap = cg_iteration_cap(opts, gnorm, m.ambient_dim());
    TcgResult tcg = truncated_cg(ms, radius, opts.tcg_kappa, opts.tcg_theta, cap);
    total_inner += tcg.iters;

    TraceRecord rec;
    rec.k = k;
    rec.inner_iters = tcg.iters;
    rec.negative_curvature = tcg.negative_curvature;
    rec.step = tcg.xi.norm();

    if (!(tcg.model_value < 0.0)) {
      // Only reachable once a rejection spiral has shrunk the radius to the
      // scale where the model decrease underflows; no step can improve f at
      // this floating-point resolution, so stop like an exhausted search.
      rep.status = SolveStatus::LineSearchFailure;
      break;
    }

    DenseMat z = m.retract(x, tcg.xi);
    const double f_z = obj.eval(z);

    bool accepted = false;
    if (std::isfinite(f_z)) {
      const double rho = (f_z - f) / tcg.model_value;
      rec.rho = rho;
      accepted = rho >= opts.eta1;
      if (!accepted)
        radius *= opts.tr_shrink;
      else if (rho >= opts.eta2 && tcg.hit_boundary)
        radius = std::min(opts.tr_grow * radius, opts.tr_radius_max);
      if (accepted) {
        x = std::move(z);
        f = f_z;
        egrad = obj.euclid_grad(x);
        rgrad = m.riemannian_grad(x, egrad);
        gnorm = rgrad.norm();
      }
    } else {
      radius *= opts.tr_shrink;
    }

    rec.f = f;
    rec.grad_norm = gnorm;
    rec.accepted = accepted;
    rec.radius = radius;
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

}  // namespace riemopt
