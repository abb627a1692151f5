// Benchmark objectives.  Each class implements the smooth ambient oracles
// (value, gradient, Hessian-vector product); the manifold constraint is
// applied by the solvers.
#pragma once

#include <cstdint>
#include <memory>

#include "riemopt/core.hpp"

namespace riemopt {

// Symmetric linear operator on R^n, applied columnwise to n-by-p matrices.
class SymOperator {
 public:
  virtual ~SymOperator() = default;
  virtual int dim() const = 0;
  virtual DenseMat apply(const DenseMat& x) const = 0;
};

class DenseSymOperator final : public SymOperator {
 public:
  explicit DenseSymOperator(DenseMat a);
  int dim() const override { return static_cast<int>(a_.rows()); }
  DenseMat apply(const DenseMat& x) const override { return a_ * x; }
  const DenseMat& matrix() const { return a_; }

 private:
  DenseMat a_;
};

// The 1-D Dirichlet Laplacian stencil tridiag(-1, 2, -1).  Positive definite,
// so it also supports solves (LDL^T with the closed-form pivots d_i = (i+1)/i).
class TridiagLaplacian final : public SymOperator {
 public:
  explicit TridiagLaplacian(int n);
  int dim() const override { return n_; }
  DenseMat apply(const DenseMat& x) const override;
  DenseMat solve(const DenseMat& b) const;

  // lambda_i = 2 - 2 cos(i pi / (n+1)), i = 1..n.
  static double eigenvalue(int n, int i);

 private:
  int n_;
};

// ---------------------------------------------------------------------------
// Quadratic trace objective f(X) = 1/2 tr(X^T A X) on the sphere (p = 1) or
// Stiefel manifold; minimizers span the bottom eigenspace of A.
class RayleighProblem final : public Objective {
 public:
  RayleighProblem(std::shared_ptr<const SymOperator> a, int p);

  double eval(const DenseMat& x) const override;
  DenseMat euclid_grad(const DenseMat& x) const override;
  DenseMat euclid_hess_vec(const DenseMat& x, const DenseMat& v) const override;

  int n() const { return a_->dim(); }
  int p() const { return p_; }
  const SymOperator& op() const { return *a_; }

 private:
  std::shared_ptr<const SymOperator> a_;
  int p_;
};

// ---------------------------------------------------------------------------
// Weighted nearest-correlation objective on the oblique manifold.  V is p-by-n
// with unit columns and f(V) = 1/2 || H .* (V^T V - C) ||_F^2.
class NearestCorrelationProblem final : public Objective {
 public:
  // H must be elementwise nonnegative; both C and H must be n-by-n.
  NearestCorrelationProblem(DenseMat c, DenseMat h, int p);

  double eval(const DenseMat& v) const override;
  DenseMat euclid_grad(const DenseMat& v) const override;
  DenseMat euclid_hess_vec(const DenseMat& v, const DenseMat& xi) const override;

  int n() const { return static_cast<int>(c_.rows()); }
  int p() const { return p_; }

  // C_ij = 0.5 + exp(-0.05 |i - j|) (1-based indices make no difference here).
  static DenseMat example_c(int n);
  // Symmetrized random weights: uniform in [0.1, 10] with 200 entries bumped
  // into [0.01, 100], then (H + H^T)/2.
  static DenseMat random_weights(int n, std::uint64_t seed);

 private:
  DenseMat residual(const DenseMat& v) const;  // V^T V - C

  DenseMat c_;
  DenseMat w_;  // H .* H
  int p_;
};

// ---------------------------------------------------------------------------
// Nonlinear eigenvalue objective on St(n, p):
//   f(X) = 1/2 tr(X^T L X) + alpha/4 * rho(X)^T L^{-1} rho(X),
// with rho(X) = diag(X X^T) and L the 1-D Dirichlet Laplacian.
class NonlinearEigenProblem final : public Objective {
 public:
  NonlinearEigenProblem(int n, int p, double alpha);

  double eval(const DenseMat& x) const override;
  DenseMat euclid_grad(const DenseMat& x) const override;
  DenseMat euclid_hess_vec(const DenseMat& x, const DenseMat& xi) const override;

  int n() const { return l_.dim(); }
  int p() const { return p_; }
  double alpha() const { return alpha_; }
  const TridiagLaplacian& laplacian() const { return l_; }

 private:
  TridiagLaplacian l_;
  int p_;
  double alpha_;
};

// ---------------------------------------------------------------------------
// Discretized Bose-Einstein condensate energy on the unit sphere of R^{m^2}:
//   f(x) = 1/2 x^T A x + beta/2 * sum_j x_j^4,  A = -1/2 Lap_h + diag(V).
// The state lives on an m-by-m grid over [-16, 16]^2 (spacing h = 32/(m-1))
// with homogeneous Dirichlet data just outside the grid.
class BecProblem final : public Objective {
 public:
  enum class Potential { Harmonic, DoubleWell };

  BecProblem(int mesh, double beta, Potential pot);

  double eval(const DenseMat& x) const override;
  DenseMat euclid_grad(const DenseMat& x) const override;
  DenseMat euclid_hess_vec(const DenseMat& x, const DenseMat& v) const override;

  int mesh() const { return m_; }
  int dim() const { return m_ * m_; }
  double beta() const { return beta_; }
  double spacing() const { return h_; }

  DenseMat apply_hamiltonian(const DenseMat& x) const;  // A x

  // Trap potentials sampled on the grid (flattened column-major, index
  // i + m*j for grid node (x_i, y_j)).
  static DenseMat potential_grid(Potential pot, int mesh);
  // Ground state of the harmonic trap at beta = 0, sampled and normalized;
  // the standard starting point.
  static DenseMat gaussian_initial(int mesh);
  // Bilinear interpolation of a coarse state onto a finer mesh, normalized.
  static DenseMat interpolate(const DenseMat& coarse, int mesh_coarse, int mesh_fine);

 private:
  int m_;
  double beta_;
  double h_;
  DenseMat v_;  // potential values, m^2-by-1
};

// ---------------------------------------------------------------------------
// Seeded starting points.

DenseMat random_sphere_point(int n, std::uint64_t seed);
DenseMat random_oblique_point(int p, int n, std::uint64_t seed);
DenseMat random_stiefel_point(int n, int p, std::uint64_t seed);
// Standard normal entries; shared building block of the helpers above.
DenseMat random_gaussian(int rows, int cols, std::uint64_t seed);

}  // namespace riemopt
