#include "riemopt/diagnostics.hpp"

#include "riemopt/problems.hpp"

namespace riemopt {

namespace {

double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

double rel_err(const DenseMat& analytic, const DenseMat& numeric) {
  return (analytic - numeric).norm() /
         std::max({1.0, analytic.norm(), numeric.norm()});
}

}  // namespace

DerivativeCheck check_gradient(const Objective& obj, const DenseMat& x, double h, int probes,
                               double tol, std::uint64_t seed) {
  DerivativeCheck out;
  out.probes = probes;
  DenseMat g = obj.euclid_grad(x);
  for (int k = 0; k < probes; ++k) {
    DenseMat u = random_gaussian(static_cast<int>(x.rows()), static_cast<int>(x.cols()),
                                 seed + 7919 * static_cast<std::uint64_t>(k + 1));
    u /= u.norm();
    const double fd = (obj.eval(x + h * u) - obj.eval(x - h * u)) / (2.0 * h);
    out.max_rel_err = std::max(out.max_rel_err, rel_err(frobenius_inner(g, u), fd));
  }
  out.pass = out.max_rel_err <= tol;
  return out;
}

DerivativeCheck check_hess_vec(const Objective& obj, const DenseMat& x, double h, int probes,
                               double tol, std::uint64_t seed) {
  DerivativeCheck out;
  out.probes = probes;
  for (int k = 0; k < probes; ++k) {
    DenseMat v = random_gaussian(static_cast<int>(x.rows()), static_cast<int>(x.cols()),
                                 seed + 104729 * static_cast<std::uint64_t>(k + 1));
    v /= v.norm();
    DenseMat fd = (obj.euclid_grad(x + h * v) - obj.euclid_grad(x - h * v)) / (2.0 * h);
    out.max_rel_err = std::max(out.max_rel_err, rel_err(obj.euclid_hess_vec(x, v), fd));
  }
  out.pass = out.max_rel_err <= tol;
  return out;
}

DerivativeCheck check_riemannian_hess_vec(const Objective& obj, const Manifold& m,
                                          const DenseMat& x, double h, int probes, double tol,
                                          std::uint64_t seed) {
  DerivativeCheck out;
  out.probes = probes;
  DenseMat egrad = obj.euclid_grad(x);
  auto ehess = [&](const DenseMat& v) { return obj.euclid_hess_vec(x, v); };
  for (int k = 0; k < probes; ++k) {
    DenseMat xi = m.project_tangent(
        x, random_gaussian(m.rows(), m.cols(), seed + 15485863 * static_cast<std::uint64_t>(k + 1)));
    const double nrm = xi.norm();
    if (nrm == 0.0) continue;
    xi /= nrm;
    DenseMat hess = m.riemannian_hess_vec(x, ehess, egrad, xi, 0.0);
    // Riemannian gradients at the displaced points, compared in T_x.
    DenseMat yp = m.retract(x, h * xi);
    DenseMat ym = m.retract(x, -h * xi);
    DenseMat fd = (m.riemannian_grad(yp, obj.euclid_grad(yp)) -
                   m.riemannian_grad(ym, obj.euclid_grad(ym))) /
                  (2.0 * h);
    out.max_rel_err = std::max(out.max_rel_err, rel_err(hess, m.project_tangent(x, fd)));
  }
  out.pass = out.max_rel_err <= tol;
  return out;
}

DescentCertificate certify_descent_angle(const DenseMat& g, const DenseMat& xi,
                                         const std::function<DenseMat(const DenseMat&)>& hess,
                                         double eps, std::uint64_t seed) {
  DescentCertificate cert;
  const double gn = g.norm();
  const double xin = xi.norm();
  if (gn == 0.0 || xin == 0.0)
    throw ContractViolation("certify_descent_angle: zero gradient or direction");
  cert.cos_angle = frobenius_inner(g, xi) / (gn * xin);

  // Power iteration for the spectral norm of the (symmetric) Hessian operator.
  DenseMat v = random_gaussian(static_cast<int>(g.rows()), static_cast<int>(g.cols()),
                               seed + 2654435761u);
  v /= v.norm();
  double est = 0.0;
  for (int it = 0; it < 50; ++it) {
    DenseMat hv = hess(v);
    const double next = hv.norm();
    if (next == 0.0) break;
    v = hv / next;
    if (std::abs(next - est) <= 1e-6 * std::max(1.0, est)) {
      est = next;
      break;
    }
    est = next;
  }
  cert.kappa_hat = est;

  const double n = static_cast<double>(g.rows() * g.cols());
  cert.angle_bound = std::min(eps / 2.0, 1.0) / (n * (cert.kappa_hat + 1.0));
  cert.pass = cert.cos_angle <= -0.9 * cert.angle_bound;
  return cert;
}

}  // namespace riemopt
