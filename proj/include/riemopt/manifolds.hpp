// Embedded matrix submanifolds with the metric inherited from the Frobenius
// inner product: unit sphere, oblique manifold (unit columns), Stiefel
// manifold (orthonormal columns) and flat Euclidean space.
//
// Conventions:
//  * points and tangent vectors are stored as dense rows-by-cols matrices with
//    the same shape as the points;
//  * retractions are metric projections (normalization resp. polar factor),
//    so they are defined on a neighbourhood of the manifold and first-order
//    rigid: R_x(0) = x, dR_x(0) = identity on the tangent space.
#pragma once

#include <functional>
#include <memory>

#include "riemopt/core.hpp"

namespace riemopt {

class Manifold {
 public:
  virtual ~Manifold() = default;

  virtual const char* name() const = 0;
  virtual int rows() const = 0;
  virtual int cols() const = 0;
  int ambient_dim() const { return rows() * cols(); }

  virtual bool is_feasible(const DenseMat& x, double tol) const = 0;

  // Orthogonal projection of an ambient vector onto T_x M.  Linear and
  // idempotent; x must be feasible.
  virtual DenseMat project_tangent(const DenseMat& x, const DenseMat& u) const = 0;

  // R_x(xi).  xi is expected to be tangent at x; inputs with tangency residual
  // above kTangencySlack are projected first.  Throws FeasibilityError when
  // the input degenerates (zero column / rank-deficient X + xi).
  virtual DenseMat retract(const DenseMat& x, const DenseMat& xi) const = 0;

  // Metric projection of an arbitrary ambient point onto the manifold.
  virtual DenseMat project_to_manifold(const DenseMat& a) const = 0;

  // Weingarten map W_x(xi, v) for tangent xi and *normal* v.  Throws
  // ContractViolation if v has a tangent component above tolerance
  // (flat manifolds return zero for any input).
  virtual DenseMat weingarten(const DenseMat& x, const DenseMat& xi, const DenseMat& v) const = 0;

  // max-norm style residual measuring how far xi is from T_x M; zero for
  // tangent vectors.  Used by tests and by the retraction slack check.
  virtual double tangency_residual(const DenseMat& x, const DenseMat& xi) const = 0;

  // grad f(x) = P_x(euclidean gradient).
  DenseMat riemannian_grad(const DenseMat& x, const DenseMat& egrad) const {
    return project_tangent(x, egrad);
  }

  // Riemannian Hessian-vector product of f + (sigma/2) * dist^2 style models:
  //   P_x(ehess(xi)) + sigma * xi + W_x(xi, egrad - P_x(egrad)).
  // With sigma = 0 this is the Riemannian Hessian of the objective itself.
  DenseMat riemannian_hess_vec(const DenseMat& x,
                               const std::function<DenseMat(const DenseMat&)>& ehess_vec,
                               const DenseMat& egrad, const DenseMat& xi, double sigma) const;

  static constexpr double kTangencySlack = 1e-8;
};

// S^{n-1} embedded in R^n; points are n-by-1.
class Sphere final : public Manifold {
 public:
  explicit Sphere(int n);

  const char* name() const override { return "sphere"; }
  int rows() const override { return n_; }
  int cols() const override { return 1; }

  bool is_feasible(const DenseMat& x, double tol) const override;
  DenseMat project_tangent(const DenseMat& x, const DenseMat& u) const override;
  DenseMat retract(const DenseMat& x, const DenseMat& xi) const override;
  DenseMat project_to_manifold(const DenseMat& a) const override;
  DenseMat weingarten(const DenseMat& x, const DenseMat& xi, const DenseMat& v) const override;
  double tangency_residual(const DenseMat& x, const DenseMat& xi) const override;

 private:
  int n_;
};

// Matrices in R^{p x n} with unit-norm columns (a product of n spheres).
class Oblique final : public Manifold {
 public:
  Oblique(int p, int n);

  const char* name() const override { return "oblique"; }
  int rows() const override { return p_; }
  int cols() const override { return n_; }

  bool is_feasible(const DenseMat& x, double tol) const override;
  DenseMat project_tangent(const DenseMat& x, const DenseMat& u) const override;
  DenseMat retract(const DenseMat& x, const DenseMat& xi) const override;
  DenseMat project_to_manifold(const DenseMat& a) const override;
  DenseMat weingarten(const DenseMat& x, const DenseMat& xi, const DenseMat& v) const override;
  double tangency_residual(const DenseMat& x, const DenseMat& xi) const override;

 private:
  int p_, n_;
};

// St(n, p): n-by-p matrices with orthonormal columns.  The retraction is the
// polar retraction, i.e. the metric projection of X + xi.
class Stiefel final : public Manifold {
 public:
  Stiefel(int n, int p);

  const char* name() const override { return "stiefel"; }
  int rows() const override { return n_; }
  int cols() const override { return p_; }

  bool is_feasible(const DenseMat& x, double tol) const override;
  DenseMat project_tangent(const DenseMat& x, const DenseMat& u) const override;
  DenseMat retract(const DenseMat& x, const DenseMat& xi) const override;
  DenseMat project_to_manifold(const DenseMat& a) const override;
  DenseMat weingarten(const DenseMat& x, const DenseMat& xi, const DenseMat& v) const override;
  double tangency_residual(const DenseMat& x, const DenseMat& xi) const override;

  // Columns drift back to orthonormality only through retraction round-off;
  // re-orthonormalize once the Gram residual exceeds this.
  static constexpr double kDriftTol = 1e-8;

 private:
  int n_, p_;
};

// R^{rows x cols} with no constraint; retraction is plain addition.
class EuclideanSpace final : public Manifold {
 public:
  EuclideanSpace(int rows, int cols);

  const char* name() const override { return "euclidean"; }
  int rows() const override { return rows_; }
  int cols() const override { return cols_; }

  bool is_feasible(const DenseMat& x, double tol) const override;
  DenseMat project_tangent(const DenseMat& x, const DenseMat& u) const override;
  DenseMat retract(const DenseMat& x, const DenseMat& xi) const override;
  DenseMat project_to_manifold(const DenseMat& a) const override;
  DenseMat weingarten(const DenseMat& x, const DenseMat& xi, const DenseMat& v) const override;
  double tangency_residual(const DenseMat& x, const DenseMat& xi) const override;

 private:
  int rows_, cols_;
};

}  // namespace riemopt
