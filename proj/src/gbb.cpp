#include "riemopt/gbb.hpp"

#include <chrono>

namespace riemopt {

namespace {

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

NonmonotoneState NonmonotoneState::start(double f0, double weight) {
  NonmonotoneState s;
  s.C = f0;
  s.Q = 1.0;
  s.weight = weight;
  return s;
}

void NonmonotoneState::push(double f_next) {
  const double q_next = weight * Q + 1.0;
  C = (weight * Q * C + f_next) / q_next;
  Q = q_next;
}

double bb_step(const BbMemory& mem, double bb_min, double bb_max) {
  if (!mem.has_pair) return clamp(mem.fallback, bb_min, bb_max);
  const double sv = std::abs(frobenius_inner(mem.s, mem.v));
  if (sv == 0.0) return clamp(mem.fallback, bb_min, bb_max);
  const double step = mem.use_long ? frobenius_inner(mem.s, mem.s) / sv
                                   : sv / frobenius_inner(mem.v, mem.v);
  if (!std::isfinite(step)) return clamp(mem.fallback, bb_min, bb_max);
  return clamp(step, bb_min, bb_max);
}

LineSearchResult nonmonotone_armijo(const Manifold& m, const Objective& obj, const DenseMat& x,
                                    const DenseMat& eta, double g_dot_eta, double t0, double C_ref,
                                    double rho, double delta, int max_backtracks) {
  if (!(g_dot_eta < 0.0))
    throw ContractViolation("nonmonotone_armijo: <g, eta> = " + std::to_string(g_dot_eta) +
                            " is not a descent inner product");
  LineSearchResult res;
  double t = t0;
  for (int h = 0; h < max_backtracks; ++h) {
    DenseMat xt = m.retract(x, t * eta);
    const double ft = obj.eval(xt);
    // A trial that rounds back onto x cannot make progress; treat it as a
    // failed trial instead of accepting a zero-length step.
    if (std::isfinite(ft) && ft <= C_ref + rho * t * g_dot_eta && !(xt - x).isZero(0.0)) {
      res.step = t;
      res.x_next = std::move(xt);
      res.f_next = ft;
      res.backtracks = h;
      res.success = true;
      return res;
    }
    t *= delta;
  }
  res.backtracks = max_backtracks;
  return res;
}

SolverReport solve_gbb(const Manifold& m, const Objective& obj, const DenseMat& x0,
                       const SolverOptions& opts) {
  opts.validate();
  if (!m.is_feasible(x0, 1e-8))
    throw FeasibilityError("solve_gbb: starting point is not on the manifold");

  const auto t_start = Clock::now();
  SolverReport rep;

  DenseMat x = x0;
  DenseMat g = m.riemannian_grad(x, obj.euclid_grad(x));
  double f = obj.eval(x);
  double gnorm = g.norm();

  rep.initial_f = f;
  rep.initial_grad_norm = gnorm;
  rep.start_hash = matrix_hash(x);

  NonmonotoneState nm = NonmonotoneState::start(f, opts.nm_weight);
  BbMemory mem;

  int k = 0;
  for (; k < opts.max_outer; ++k) {
    if (gnorm <= opts.grad_tol) {
      rep.status = SolveStatus::Converged;
      break;
    }

    DenseMat eta = -g;
    const double g_dot_eta = -gnorm * gnorm;

    mem.use_long = opts.bb_alternation == BbAlternation::kLong ||
                   (opts.bb_alternation == BbAlternation::kAlternate && k % 2 == 0);
    mem.fallback = 1.0 / std::max(gnorm, 1e-300);
    double t0 = k == 0 ? clamp(1e-2 / gnorm, opts.bb_min, opts.bb_max)
                       : bb_step(mem, opts.bb_min, opts.bb_max);

    LineSearchResult ls = nonmonotone_armijo(m, obj, x, eta, g_dot_eta, t0, nm.C, opts.ls_rho,
                                             opts.ls_delta, opts.ls_max_backtracks);
    if (!ls.success) {
      rep.status = SolveStatus::LineSearchFailure;
      break;
    }

    DenseMat g_next = m.riemannian_grad(ls.x_next, obj.euclid_grad(ls.x_next));
    mem.s = ls.x_next - x;
    mem.v = g_next - g;
    mem.has_pair = true;

    x = std::move(ls.x_next);
    g = std::move(g_next);
    f = ls.f_next;
    gnorm = g.norm();
    nm.push(f);

    TraceRecord rec;
    rec.k = k;
    rec.f = f;
    rec.grad_norm = gnorm;
    rec.step = ls.step;
    rec.nm_C = nm.C;
    rec.nm_Q = nm.Q;
    rep.trace.push_back(rec);
  }
  if (rep.status == SolveStatus::MaxIters && gnorm <= opts.grad_tol)
    rep.status = SolveStatus::Converged;

  rep.x = std::move(x);
  rep.outer_iters = static_cast<int>(rep.trace.size());
  rep.final_f = f;
  rep.final_grad_norm = gnorm;
  rep.wall_time_s = seconds_since(t_start);
  return rep;
}

SolverReport solve_adagrad(const Manifold& m, const Objective& obj, const DenseMat& x0, double lr,
                           double eps_div, const SolverOptions& opts) {
  opts.validate();
  if (!(lr > 0.0)) throw std::invalid_argument("solve_adagrad: lr must be positive");
  if (!(eps_div > 0.0)) throw std::invalid_argument("solve_adagrad: eps_div must be positive");
  if (!m.is_feasible(x0, 1e-8))
    throw FeasibilityError("solve_adagrad: starting point is not on the manifold");

  const auto t_start = Clock::now();
  SolverReport rep;

  DenseMat x = x0;
  DenseMat g = m.riemannian_grad(x, obj.euclid_grad(x));
  double gnorm = g.norm();
  double f = obj.eval(x);

  rep.initial_f = f;
  rep.initial_grad_norm = gnorm;
  rep.start_hash = matrix_hash(x);

  DenseMat accum = DenseMat::Zero(x.rows(), x.cols());

  int k = 0;
  for (; k < opts.max_outer; ++k) {
    if (gnorm <= opts.grad_tol) {
      rep.status = SolveStatus::Converged;
      break;
    }
    accum += g.cwiseProduct(g);
    DenseMat scaled = g.cwiseQuotient((accum.array() + eps_div).sqrt().matrix());
    x = m.project_to_manifold(x - lr * scaled);
    g = m.riemannian_grad(x, obj.euclid_grad(x));
    f = obj.eval(x);
    gnorm = g.norm();

    TraceRecord rec;
    rec.k = k;
    rec.f = f;
    rec.grad_norm = gnorm;
    rec.step = lr;
    rep.trace.push_back(rec);
  }
  if (rep.status == SolveStatus::MaxIters && gnorm <= opts.grad_tol)
    rep.status = SolveStatus::Converged;

  rep.x = std::move(x);
  rep.outer_iters = static_cast<int>(rep.trace.size());
  rep.final_f = f;
  rep.final_grad_norm = gnorm;
  rep.wall_time_s = seconds_since(t_start);
  return rep;
}

}  // namespace riemopt
