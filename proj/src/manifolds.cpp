#include "riemopt/manifolds.hpp"

#include <Eigen/SVD>

namespace riemopt {

namespace {

void check_shape(const Manifold& m, const DenseMat& a, const char* what) {
  if (a.rows() != m.rows() || a.cols() != m.cols())
    throw DimensionError(std::string(m.name()) + ": " + what + " has shape " +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         ", expected " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
}

inline DenseMat sym(const DenseMat& a) { return 0.5 * (a + a.transpose()); }

// Shared normality guard for the Weingarten maps.
void check_normal(const Manifold& m, const DenseMat& x, const DenseMat& v) {
  const double scale = fro_norm(v);
  if (scale == 0.0) return;
  DenseMat tang = m.project_tangent(x, v);
  if (fro_norm(tang) > 1e-8 * scale)
    throw ContractViolation(std::string(m.name()) +
                            ": weingarten expects a normal vector, tangent part has norm " +
                            std::to_string(fro_norm(tang)));
}

}  // namespace

DenseMat Manifold::riemannian_hess_vec(const DenseMat& x,
                                       const std::function<DenseMat(const DenseMat&)>& ehess_vec,
                                       const DenseMat& egrad, const DenseMat& xi,
                                       double sigma) const {
  DenseMat h = project_tangent(x, ehess_vec(xi));
  if (sigma != 0.0) h += sigma * xi;
  DenseMat normal = egrad - project_tangent(x, egrad);
  h += weingarten(x, xi, normal);
  return h;
}

// ---------------------------------------------------------------------------
// Sphere

Sphere::Sphere(int n) : n_(n) {
  if (n < 1) throw DimensionError("Sphere: dimension must be positive");
}

bool Sphere::is_feasible(const DenseMat& x, double tol) const {
  check_shape(*this, x, "point");
  return std::abs(x.norm() - 1.0) <= tol;
}

DenseMat Sphere::project_tangent(const DenseMat& x, const DenseMat& u) const {
  check_shape(*this, x, "point");
  check_shape(*this, u, "vector");
  return u - (x.col(0).dot(u.col(0))) * x;
}

DenseMat Sphere::retract(const DenseMat& x, const DenseMat& xi) const {
  check_shape(*this, xi, "direction");
  if (xi.isZero(0.0)) return x;  // R_x(0) = x exactly
  DenseMat d = xi;
  if (tangency_residual(x, d) > kTangencySlack) d = project_tangent(x, d);
  return project_to_manifold(x + d);
}

DenseMat Sphere::project_to_manifold(const DenseMat& a) const {
  check_shape(*this, a, "point");
  const double nrm = a.norm();
  if (nrm == 0.0) throw FeasibilityError("sphere: cannot retract/project the zero vector");
  return a / nrm;
}

DenseMat Sphere::weingarten(const DenseMat& x, const DenseMat& xi, const DenseMat& v) const {
  check_shape(*this, xi, "tangent");
  check_shape(*this, v, "normal");
  check_normal(*this, x, v);
  return -(x.col(0).dot(v.col(0))) * xi;
}

double Sphere::tangency_residual(const DenseMat& x, const DenseMat& xi) const {
  return std::abs(x.col(0).dot(xi.col(0)));
}

// ---------------------------------------------------------------------------
// Oblique

Oblique::Oblique(int p, int n) : p_(p), n_(n) {
  if (p < 1 || n < 1) throw DimensionError("Oblique: dimensions must be positive");
}

bool Oblique::is_feasible(const DenseMat& x, double tol) const {
  check_shape(*this, x, "point");
  for (int j = 0; j < n_; ++j)
    if (std::abs(x.col(j).norm() - 1.0) > tol) return false;
  return true;
}

DenseMat Oblique::project_tangent(const DenseMat& x, const DenseMat& u) const {
  check_shape(*this, x, "point");
  check_shape(*this, u, "vector");
  DenseMat xi = u;
  for (int j = 0; j < n_; ++j) xi.col(j) -= x.col(j).dot(u.col(j)) * x.col(j);
  return xi;
}

DenseMat Oblique::retract(const DenseMat& x, const DenseMat& xi) const {
  check_shape(*this, xi, "direction");
  if (xi.isZero(0.0)) return x;  // R_x(0) = x exactly
  DenseMat d = xi;
  if (tangency_residual(x, d) > kTangencySlack) d = project_tangent(x, d);
  return project_to_manifold(x + d);
}

DenseMat Oblique::project_to_manifold(const DenseMat& a) const {
  check_shape(*this, a, "point");
  DenseMat y = a;
  for (int j = 0; j < n_; ++j) {
    const double nrm = y.col(j).norm();
    if (nrm == 0.0)
      throw FeasibilityError("oblique: column " + std::to_string(j) +
                             " is zero, retraction undefined");
    y.col(j) /= nrm;
  }
  return y;
}

DenseMat Oblique::weingarten(const DenseMat& x, const DenseMat& xi, const DenseMat& v) const {
  check_shape(*this, xi, "tangent");
  check_shape(*this, v, "normal");
  check_normal(*this, x, v);
  DenseMat w = xi;
  for (int j = 0; j < n_; ++j) w.col(j) *= -(x.col(j).dot(v.col(j)));
  return w;
}

double Oblique::tangency_residual(const DenseMat& x, const DenseMat& xi) const {
  double r = 0.0;
  for (int j = 0; j < n_; ++j) r = std::max(r, std::abs(x.col(j).dot(xi.col(j))));
  return r;
}

// ---------------------------------------------------------------------------
// Stiefel

Stiefel::Stiefel(int n, int p) : n_(n), p_(p) {
  if (p < 1 || n < p) throw DimensionError("Stiefel: need n >= p >= 1");
}

bool Stiefel::is_feasible(const DenseMat& x, double tol) const {
  check_shape(*this, x, "point");
  DenseMat gram = x.transpose() * x;
  gram.diagonal().array() -= 1.0;
  return gram.norm() <= tol;
}

DenseMat Stiefel::project_tangent(const DenseMat& x, const DenseMat& u) const {
  check_shape(*this, x, "point");
  check_shape(*this, u, "vector");
  return u - x * sym(x.transpose() * u);
}

DenseMat Stiefel::retract(const DenseMat& x, const DenseMat& xi) const {
  check_shape(*this, xi, "direction");
  if (xi.isZero(0.0)) return x;  // R_x(0) = x exactly
  DenseMat d = xi;
  if (tangency_residual(x, d) > kTangencySlack) d = project_tangent(x, d);
  DenseMat y = project_to_manifold(x + d);
  // Polar factors are orthonormal to round-off; re-project only on real drift.
  DenseMat gram = y.transpose() * y;
  gram.diagonal().array() -= 1.0;
  if (gram.norm() > kDriftTol) y = project_to_manifold(y);
  return y;
}

DenseMat Stiefel::project_to_manifold(const DenseMat& a) const {
  check_shape(*this, a, "point");
  Eigen::JacobiSVD<DenseMat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues()(p_ - 1) <= 0.0)
    throw FeasibilityError("stiefel: rank-deficient input, polar factor undefined");
  return svd.matrixU() * svd.matrixV().transpose();
}

DenseMat Stiefel::weingarten(const DenseMat& x, const DenseMat& xi, const DenseMat& v) const {
  check_shape(*this, xi, "tangent");
  check_shape(*this, v, "normal");
  check_normal(*this, x, v);
  // Differentiate P_X(u) = u - X sym(X^T u) in the direction xi and project;
  // the X sym(xi^T v) term is normal and drops out under the projection.
  return project_tangent(x, -xi * sym(x.transpose() * v) - x * sym(xi.transpose() * v));
}

double Stiefel::tangency_residual(const DenseMat& x, const DenseMat& xi) const {
  return sym(x.transpose() * xi).norm();
}

// ---------------------------------------------------------------------------
// EuclideanSpace

EuclideanSpace::EuclideanSpace(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) throw DimensionError("EuclideanSpace: dimensions must be positive");
}

bool EuclideanSpace::is_feasible(const DenseMat& x, double) const {
  check_shape(*this, x, "point");
  return true;
}

DenseMat EuclideanSpace::project_tangent(const DenseMat& x, const DenseMat& u) const {
  check_shape(*this, x, "point");
  check_shape(*this, u, "vector");
  return u;
}

DenseMat EuclideanSpace::retract(const DenseMat& x, const DenseMat& xi) const {
  check_shape(*this, x, "point");
  check_shape(*this, xi, "direction");
  return x + xi;
}

DenseMat EuclideanSpace::project_to_manifold(const DenseMat& a) const {
  check_shape(*this, a, "point");
  return a;
}

DenseMat EuclideanSpace::weingarten(const DenseMat& x, const DenseMat& xi, const DenseMat&) const {
  check_shape(*this, x, "point");
  check_shape(*this, xi, "tangent");
  return DenseMat::Zero(rows_, cols_);
}

double EuclideanSpace::tangency_residual(const DenseMat&, const DenseMat&) const { return 0.0; }

}  // namespace riemopt
