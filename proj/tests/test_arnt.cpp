#include <doctest.h>

#include <memory>
#include <random>

#include "riemopt/arnt.hpp"
#include "riemopt/gbb.hpp"
#include "riemopt/problems.hpp"

using namespace riemopt;

namespace {

DenseMat vec2(double a, double b) {
  DenseMat v(2, 1);
  v << a, b;
  return v;
}

// f(x) = g0^T x + 1/2 x^T H x, anchored at the origin.
struct QuadObjective final : Objective {
  DenseMat h, g0;
  QuadObjective(DenseMat h_, DenseMat g0_) : h(std::move(h_)), g0(std::move(g0_)) {}
  double eval(const DenseMat& x) const override {
    return frobenius_inner(g0, x) + 0.5 * frobenius_inner(x, h * x);
  }
  DenseMat euclid_grad(const DenseMat& x) const override { return g0 + h * x; }
  DenseMat euclid_hess_vec(const DenseMat&, const DenseMat& v) const override { return h * v; }
};

// f(x) = 1/2 (x - c)^T H (x - c); minimizer c.
struct ShiftedQuad final : Objective {
  DenseMat h, c;
  ShiftedQuad(DenseMat h_, DenseMat c_) : h(std::move(h_)), c(std::move(c_)) {}
  double eval(const DenseMat& x) const override {
    return 0.5 * frobenius_inner(x - c, h * (x - c));
  }
  DenseMat euclid_grad(const DenseMat& x) const override { return h * (x - c); }
  DenseMat euclid_hess_vec(const DenseMat&, const DenseMat& v) const override { return h * v; }
};

ModelState euclid_model(const Manifold& m, const Objective& obj, const DenseMat& x, double sigma) {
  return ModelState(m, obj, x, obj.euclid_grad(x), sigma);
}

DenseMat random_spd(int n, std::uint64_t seed, double shift) {
  DenseMat a = random_gaussian(n, n, seed);
  return DenseMat(a * a.transpose()) + shift * DenseMat::Identity(n, n);
}

// Re-derives the sigma_hat trajectory from the recorded rho/sigma_est values
// and checks it against the recorded one.
void replay_sigma(const SolverReport& rep, const SolverOptions& opts) {
  double sigma_hat = opts.sigma_hat0;
  double gprev = rep.initial_grad_norm;
  double fprev = rep.initial_f;
  for (size_t k = 0; k < rep.trace.size(); ++k) {
    const TraceRecord& t = rep.trace[k];
    CHECK(t.sigma_hat == doctest::Approx(sigma_hat).epsilon(1e-12));
    CHECK(t.sigma == doctest::Approx(sigma_hat * gprev).epsilon(1e-12));

    if (std::isnan(t.rho)) {
      sigma_hat *= opts.gamma2;  // no usable trial point
    } else if (t.rho >= opts.eta2) {
      sigma_hat *= opts.gamma0;
    } else if (t.rho >= opts.eta1) {
      sigma_hat *= opts.gamma1;
    } else {
      sigma_hat *= opts.gamma2;
    }
    if (!std::isnan(t.sigma_est))
      sigma_hat = std::max(sigma_hat, (t.sigma_est + opts.curvature_margin) /
                                          std::max(t.grad_norm, 1e-300));

    if (t.accepted) {
      CHECK(t.f < fprev);  // accepted steps strictly decrease f
    } else {
      CHECK(t.f == fprev);  // rejected steps leave the iterate alone
      CHECK(t.grad_norm == gprev);
    }
    gprev = t.grad_norm;
    fprev = t.f;
  }
}

}  // namespace

TEST_CASE("modified cg hand example with negative curvature") {
  EuclideanSpace e(2, 1);
  DenseMat h(2, 2);
  h << 1, 0, 0, -1;
  QuadObjective obj(h, vec2(1.0, 0.5));
  ModelState ms = euclid_model(e, obj, DenseMat::Zero(2, 1), 0.0);

  CgTrace trace;
  CgOutcome out = modified_cg(ms, 1e-10, 1.0, 0.1, 50, &trace);

  REQUIRE(out.stop == CgStop::NegativeCurvature);
  REQUIRE(out.has_d);
  CHECK(out.iters == 2);
  CHECK(fro_norm(out.s - vec2(-5.0 / 3.0, -5.0 / 6.0)) <= 1e-12);
  CHECK(fro_norm(out.d - vec2(-10.0 / 9.0, -20.0 / 9.0)) <= 1e-12);
  CHECK(out.d_curvature == doctest::Approx(-100.0 / 27.0).epsilon(1e-12));
  REQUIRE(out.sigma_est.has_value());
  CHECK(*out.sigma_est == doctest::Approx(0.6).epsilon(1e-12));

  DenseMat xi = combine_direction(out, ms);
  CHECK(fro_norm(xi - vec2(-7.0 / 3.0, -13.0 / 6.0)) <= 1e-12);
  CHECK(frobenius_inner(ms.rgrad(), xi) == doctest::Approx(-41.0 / 12.0).epsilon(1e-12));

  // The blending weight equals the magnitude of the CG step that the exit
  // direction would have taken: tau = ||r_l||^2 / |pi_l|.
  const double tau = frobenius_inner(out.d, ms.rgrad()) / out.d_curvature;
  const double rl2 = trace.r.back().squaredNorm();
  CHECK(tau == doctest::Approx(rl2 / std::abs(out.d_curvature)).epsilon(1e-12));
}

TEST_CASE("modified cg falls back to steepest descent on immediate negative curvature") {
  EuclideanSpace e(2, 1);
  DenseMat h(2, 2);
  h << -2, 0, 0, 1;
  QuadObjective obj(h, vec2(1.0, 0.0));
  ModelState ms = euclid_model(e, obj, DenseMat::Zero(2, 1), 0.0);

  CgOutcome out = modified_cg(ms, 1e-10, 1.0, 0.1, 50);
  CHECK(out.stop == CgStop::NegativeCurvature);
  CHECK(out.iters == 1);
  CHECK_FALSE(out.has_d);
  CHECK_FALSE(out.sigma_est.has_value());
  CHECK(fro_norm(out.s - vec2(-1.0, 0.0)) == 0.0);  // s = -g

  DenseMat xi = combine_direction(out, ms);
  CHECK(frobenius_inner(ms.rgrad(), xi) < 0.0);
}

TEST_CASE("modified cg solves an identity system in one product") {
  EuclideanSpace e(4, 1);
  QuadObjective obj(DenseMat::Identity(4, 4), random_gaussian(4, 1, 3));
  ModelState ms = euclid_model(e, obj, DenseMat::Zero(4, 1), 0.0);

  CgOutcome out = modified_cg(ms, 1e-10, 1.0, 0.1, 50);
  CHECK(out.stop == CgStop::Residual);
  CHECK(out.iters == 1);
  CHECK(fro_norm(out.s + ms.rgrad()) <= 1e-14);
}

TEST_CASE("modified cg recurrence algebra on a positive definite system") {
  const int n = 12;
  EuclideanSpace e(n, 1);
  DenseMat h = random_spd(n, 17, 1.0);
  QuadObjective obj(h, random_gaussian(n, 1, 18));
  ModelState ms = euclid_model(e, obj, DenseMat::Zero(n, 1), 0.0);

  CgTrace trace;
  CgOutcome out = modified_cg(ms, 1e-10, 1.0, 1e-8, 500, &trace);
  REQUIRE(out.stop == CgStop::Residual);
  REQUIRE(trace.p.size() >= 3);

  const double gscale = ms.grad_norm();
  for (size_t i = 0; i < trace.p.size(); ++i)
    for (size_t j = i + 1; j < trace.p.size(); ++j) {
      CHECK(std::abs(frobenius_inner(trace.p[i], ms.hess_vec(trace.p[j]))) <=
            1e-8 * gscale * gscale);
      CHECK(std::abs(frobenius_inner(trace.r[i], trace.r[j])) <= 1e-8 * gscale * gscale);
    }

  // Partial solutions grow in norm while the model value falls.
  for (size_t i = 1; i < trace.eta.size(); ++i) {
    CHECK(trace.eta[i].norm() > trace.eta[i - 1].norm());
    CHECK(ms.quadratic(trace.eta[i]) < ms.quadratic(trace.eta[i - 1]) + 1e-15);
  }

  // Final iterate agrees with the dense solve.
  DenseMat exact = h.ldlt().solve(-ms.rgrad());
  CHECK(fro_norm(out.s - exact) <= 1e-7 * fro_norm(exact));
}

TEST_CASE("combined direction descends on random indefinite models") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 7);
    EuclideanSpace e(n, 1);
    DenseMat a = random_gaussian(n, n, rng());
    DenseMat h = 0.5 * (a + a.transpose());  // indefinite in general
    DenseMat g = random_gaussian(n, 1, rng());
    if (g.norm() < 1e-8) continue;
    QuadObjective obj(h, g);
    ModelState ms = euclid_model(e, obj, DenseMat::Zero(n, 1), 0.0);

    CgOutcome out = modified_cg(ms, 1e-10, 1.0, 0.1, 100);
    DenseMat xi = combine_direction(out, ms);
    CHECK(frobenius_inner(ms.rgrad(), xi) < 0.0);
  }
}

TEST_CASE("model line search accepts the Newton step of a convex model") {
  const int n = 6;
  EuclideanSpace e(n, 1);
  QuadObjective obj(DenseMat::Identity(n, n), random_gaussian(n, 1, 7));
  ModelState ms = euclid_model(e, obj, DenseMat::Zero(n, 1), 0.0);

  DenseMat xi = -ms.rgrad();  // Newton step for H = I
  ModelLineSearch ls = model_armijo(ms, xi, 1.0, 1e-4, 0.2, 50);
  REQUIRE(ls.success);
  CHECK(ls.alpha == 1.0);
  CHECK(ls.backtracks == 0);
  CHECK(ls.m_z == doctest::Approx(-0.5 * ms.grad_norm() * ms.grad_norm()).epsilon(1e-12));

  CHECK_THROWS_AS(model_armijo(ms, DenseMat(ms.rgrad()), 1.0, 1e-4, 0.2, 10),
                  ContractViolation);
}

TEST_CASE("inner iteration budget scales with gradient digits") {
  SolverOptions o;
  CHECK(cg_iteration_cap(o, 1.0, 100000) == 30);
  CHECK(cg_iteration_cap(o, 1e-2, 100000) == 30);
  CHECK(cg_iteration_cap(o, 1e-5, 100000) == 50);
  CHECK(cg_iteration_cap(o, 1e-9, 100000) == 90);
  CHECK(cg_iteration_cap(o, 1e-15, 100000) == 120);  // gradient floor at 1e-12
  CHECK(cg_iteration_cap(o, 1e-5, 20) == 20);        // never above the dimension
  o.cg_cap_max = 40;
  CHECK(cg_iteration_cap(o, 1e-9, 100000) == 40);
}

TEST_CASE("model state guards") {
  EuclideanSpace e(2, 1);
  QuadObjective obj(DenseMat::Identity(2, 2), vec2(1, 0));
  CHECK_THROWS_AS(euclid_model(e, obj, DenseMat::Zero(2, 1), -1.0), ContractViolation);
  ModelState ms = euclid_model(e, obj, DenseMat::Zero(2, 1), 0.0);
  CHECK_THROWS_AS(modified_cg(ms, -1.0, 1.0, 0.1, 10), std::invalid_argument);
  CHECK_THROWS_AS(modified_cg(ms, 1e-10, 0.0, 0.1, 10), std::invalid_argument);
}

TEST_CASE("model eval and quadratic agree along retraction curves") {
  Sphere sph(6);
  RayleighProblem prob(std::make_shared<TridiagLaplacian>(6), 1);
  DenseMat x = random_sphere_point(6, 21);
  ModelState ms(sph, prob, x, prob.euclid_grad(x), 0.4);
  DenseMat xi = sph.project_tangent(x, random_gaussian(6, 1, 22));
  xi /= fro_norm(xi);
  CHECK(ms.eval(x) == 0.0);

  // quadratic(t xi) is the second-order Taylor expansion of eval(R_x(t xi)):
  // the gap shrinks like t^3.
  const double e1 = std::abs(ms.eval(sph.retract(x, 1e-2 * xi)) - ms.quadratic(1e-2 * xi));
  const double e2 = std::abs(ms.eval(sph.retract(x, 1e-3 * xi)) - ms.quadratic(1e-3 * xi));
  CHECK(std::log10(e1 / e2) >= 2.5);

  // In flat space the ambient line and the retraction coincide, so the two
  // forms agree exactly.
  EuclideanSpace e(6, 1);
  QuadObjective quad(random_spd(6, 23, 1.0), random_gaussian(6, 1, 24));
  DenseMat y = random_gaussian(6, 1, 25);
  ModelState mse(e, quad, y, quad.euclid_grad(y), 0.4);
  DenseMat v = random_gaussian(6, 1, 26);
  CHECK(mse.eval(y + v) == doctest::Approx(mse.quadratic(v)).epsilon(1e-12));
}

TEST_CASE("regularized Newton equals a damped Newton run in flat space") {
  const int n = 30;
  EuclideanSpace e(n, 1);
  DenseMat h = random_spd(n, 31, 0.5);
  DenseMat c = random_gaussian(n, 1, 32);
  ShiftedQuad obj(h, c);

  SolverOptions opts = SolverOptions::newton_defaults();
  opts.warm_start = false;
  SolverReport rep = solve_arnt(e, obj, DenseMat::Zero(n, 1), opts);

  REQUIRE(rep.status == SolveStatus::Converged);
  CHECK(rep.final_grad_norm <= opts.grad_tol);
  CHECK(fro_norm(rep.x - c) <= 1e-6);
  CHECK(rep.outer_iters <= 10);
  replay_sigma(rep, opts);
}

TEST_CASE("regularized Newton on the sphere") {
  const int n = 50;
  DenseMat a = DenseMat::Zero(n, n);
  for (int i = 0; i < n; ++i) a(i, i) = i + 1.0;
  RayleighProblem prob(std::make_shared<DenseSymOperator>(a), 1);
  Sphere sph(n);
  DenseMat x0 = random_sphere_point(n, 44);

  SolverOptions opts = SolverOptions::newton_defaults();
  int observed = 0;
  SolverReport rep = solve_arnt(sph, prob, x0, opts, [&](const InnerSolveInfo& info) {
    ++observed;
    CHECK(info.model.manifold().tangency_residual(info.model.anchor(), info.xi) <= 1e-8);
    CHECK(info.outcome.iters >= 1);
  });

  REQUIRE(rep.status == SolveStatus::Converged);
  CHECK(rep.final_f == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(rep.final_grad_norm <= opts.grad_tol);
  CHECK(sph.is_feasible(rep.x, 1e-10));
  CHECK(observed == rep.outer_iters);
  CHECK(rep.warm_start_iters > 0);  // warm start on by default
  replay_sigma(rep, opts);

  // The main loop starts from the gradient warm start point; reproduce it.
  SolverOptions wopts = opts;
  wopts.grad_tol = opts.warm_start_tol;
  wopts.max_outer = opts.warm_start_cap;
  SolverReport warm = solve_gbb(sph, prob, x0, wopts);
  CHECK(rep.start_hash == matrix_hash(warm.x));
}

TEST_CASE("quasi-Newton variant solves the sphere problem") {
  const int n = 40;
  RayleighProblem prob(std::make_shared<TridiagLaplacian>(n), 1);
  Sphere sph(n);
  DenseMat x0 = random_sphere_point(n, 55);

  SolverOptions opts = SolverOptions::newton_defaults();
  SolverReport rep = solve_trqh(sph, prob, x0, opts);

  REQUIRE(rep.status == SolveStatus::Converged);
  CHECK(rep.final_grad_norm <= opts.grad_tol);
  CHECK(rep.mean_inner_iters > 0.0);
  replay_sigma(rep, opts);
}

TEST_CASE("newton solvers reject infeasible starts") {
  Sphere sph(5);
  RayleighProblem prob(std::make_shared<TridiagLaplacian>(5), 1);
  DenseMat bad = 3.0 * random_sphere_point(5, 2);
  CHECK_THROWS_AS(solve_arnt(sph, prob, bad, SolverOptions::newton_defaults()),
                  FeasibilityError);
  CHECK_THROWS_AS(solve_trqh(sph, prob, bad, SolverOptions::newton_defaults()),
                  FeasibilityError);
}
