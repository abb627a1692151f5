#include "riemopt/problems.hpp"

#include <Eigen/QR>

#include <random>

namespace riemopt {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw DimensionError(msg);
}

}  // namespace

// ---------------------------------------------------------------------------
// Operators

DenseSymOperator::DenseSymOperator(DenseMat a) : a_(std::move(a)) {
  require(a_.rows() == a_.cols(), "DenseSymOperator: matrix must be square");
  if ((a_ - a_.transpose()).norm() > 1e-12 * std::max(1.0, a_.norm()))
    throw ContractViolation("DenseSymOperator: matrix is not symmetric");
}

TridiagLaplacian::TridiagLaplacian(int n) : n_(n) {
  require(n >= 1, "TridiagLaplacian: dimension must be positive");
}

DenseMat TridiagLaplacian::apply(const DenseMat& x) const {
  require(x.rows() == n_, "TridiagLaplacian: row mismatch");
  DenseMat y = 2.0 * x;
  if (n_ > 1) {
    y.topRows(n_ - 1) -= x.bottomRows(n_ - 1);
    y.bottomRows(n_ - 1) -= x.topRows(n_ - 1);
  }
  return y;
}

DenseMat TridiagLaplacian::solve(const DenseMat& b) const {
  require(b.rows() == n_, "TridiagLaplacian: row mismatch");
  // LDL^T with pivots d_i = (i+1)/i and unit off-diagonals -i/(i+1).
  DenseMat y = b;
  for (int i = 1; i < n_; ++i)
    y.row(i) += (static_cast<double>(i) / (i + 1)) * y.row(i - 1);
  for (int i = 0; i < n_; ++i)
    y.row(i) *= static_cast<double>(i + 1) / (i + 2);
  for (int i = n_ - 2; i >= 0; --i)
    y.row(i) += (static_cast<double>(i + 1) / (i + 2)) * y.row(i + 1);
  return y;
}

double TridiagLaplacian::eigenvalue(int n, int i) {
  return 2.0 - 2.0 * std::cos(i * M_PI / (n + 1));
}

// ---------------------------------------------------------------------------
// Rayleigh

RayleighProblem::RayleighProblem(std::shared_ptr<const SymOperator> a, int p)
    : a_(std::move(a)), p_(p) {
  require(a_ != nullptr, "RayleighProblem: operator is null");
  require(p >= 1, "RayleighProblem: p must be positive");
}

double RayleighProblem::eval(const DenseMat& x) const {
  return 0.5 * frobenius_inner(x, a_->apply(x));
}

DenseMat RayleighProblem::euclid_grad(const DenseMat& x) const { return a_->apply(x); }

DenseMat RayleighProblem::euclid_hess_vec(const DenseMat&, const DenseMat& v) const {
  return a_->apply(v);
}

// ---------------------------------------------------------------------------
// Nearest correlation

NearestCorrelationProblem::NearestCorrelationProblem(DenseMat c, DenseMat h, int p)
    : c_(std::move(c)), p_(p) {
  require(c_.rows() == c_.cols(), "NearestCorrelationProblem: C must be square");
  require(h.rows() == c_.rows() && h.cols() == c_.cols(),
          "NearestCorrelationProblem: H must match C");
  require(p >= 1, "NearestCorrelationProblem: p must be positive");
  if ((h.array() < 0.0).any())
    throw ContractViolation("NearestCorrelationProblem: weights must be nonnegative");
  w_ = h.cwiseProduct(h);
}

DenseMat NearestCorrelationProblem::residual(const DenseMat& v) const {
  require(v.rows() == p_ && v.cols() == c_.rows(), "NearestCorrelationProblem: V shape");
  return v.transpose() * v - c_;
}

double NearestCorrelationProblem::eval(const DenseMat& v) const {
  DenseMat r = residual(v);
  return 0.5 * r.cwiseProduct(r).cwiseProduct(w_).sum();
}

DenseMat NearestCorrelationProblem::euclid_grad(const DenseMat& v) const {
  return 2.0 * v * w_.cwiseProduct(residual(v));
}

DenseMat NearestCorrelationProblem::euclid_hess_vec(const DenseMat& v, const DenseMat& xi) const {
  require(xi.rows() == p_ && xi.cols() == c_.rows(), "NearestCorrelationProblem: xi shape");
  DenseMat s = w_.cwiseProduct(residual(v));
  DenseMat cross = xi.transpose() * v;
  cross += cross.transpose().eval();
  return 2.0 * xi * s + 2.0 * v * w_.cwiseProduct(cross);
}

DenseMat NearestCorrelationProblem::example_c(int n) {
  DenseMat c(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) c(i, j) = 0.5 + std::exp(-0.05 * std::abs(i - j));
  return c;
}

DenseMat NearestCorrelationProblem::random_weights(int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> base(0.1, 10.0);
  std::uniform_real_distribution<double> wide(0.01, 100.0);
  DenseMat h(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) h(i, j) = base(gen);
  std::uniform_int_distribution<int> idx(0, n - 1);
  for (int k = 0; k < 200; ++k) h(idx(gen), idx(gen)) = wide(gen);
  return 0.5 * (h + h.transpose()).eval();
}

// ---------------------------------------------------------------------------
// Nonlinear eigenvalue

NonlinearEigenProblem::NonlinearEigenProblem(int n, int p, double alpha)
    : l_(n), p_(p), alpha_(alpha) {
  require(p >= 1 && p <= n, "NonlinearEigenProblem: need 1 <= p <= n");
  require(alpha >= 0.0, "NonlinearEigenProblem: alpha must be nonnegative");
}

double NonlinearEigenProblem::eval(const DenseMat& x) const {
  double f = 0.5 * frobenius_inner(x, l_.apply(x));
  if (alpha_ != 0.0) {
    DenseMat rho = x.cwiseProduct(x).rowwise().sum();
    f += 0.25 * alpha_ * frobenius_inner(rho, l_.solve(rho));
  }
  return f;
}

DenseMat NonlinearEigenProblem::euclid_grad(const DenseMat& x) const {
  DenseMat g = l_.apply(x);
  if (alpha_ != 0.0) {
    DenseMat rho = x.cwiseProduct(x).rowwise().sum();
    DenseMat q = l_.solve(rho);
    g += alpha_ * q.col(0).asDiagonal() * x;
  }
  return g;
}

DenseMat NonlinearEigenProblem::euclid_hess_vec(const DenseMat& x, const DenseMat& xi) const {
  DenseMat h = l_.apply(xi);
  if (alpha_ != 0.0) {
    DenseMat rho = x.cwiseProduct(x).rowwise().sum();
    DenseMat q = l_.solve(rho);
    h += alpha_ * q.col(0).asDiagonal() * xi;
    DenseMat e = x.cwiseProduct(xi).rowwise().sum();  // 1/2 d rho
    DenseMat qe = l_.solve(e);
    h += 2.0 * alpha_ * qe.col(0).asDiagonal() * x;
  }
  return h;
}

// ---------------------------------------------------------------------------
// BEC

BecProblem::BecProblem(int mesh, double beta, Potential pot)
    : m_(mesh), beta_(beta), h_(32.0 / (mesh - 1)), v_(potential_grid(pot, mesh)) {
  require(mesh >= 2, "BecProblem: mesh must be at least 2");
  require(beta >= 0.0, "BecProblem: beta must be nonnegative");
}

DenseMat BecProblem::potential_grid(Potential pot, int mesh) {
  const double h = 32.0 / (mesh - 1);
  DenseMat v(mesh * mesh, 1);
  for (int j = 0; j < mesh; ++j) {
    const double y = -16.0 + j * h;
    for (int i = 0; i < mesh; ++i) {
      const double x = -16.0 + i * h;
      const double r2 = x * x + y * y;
      v(i + mesh * j, 0) = pot == Potential::Harmonic
                               ? 0.5 * r2
                               : -0.1 * r2 + 0.3 * (0.5 * r2) * (0.5 * r2);
    }
  }
  return v;
}

DenseMat BecProblem::apply_hamiltonian(const DenseMat& x) const {
  require(x.rows() == m_ * m_ && x.cols() == 1, "BecProblem: state shape");
  DenseMat y(m_ * m_, 1);
  const double c = 0.5 / (h_ * h_);
  for (int j = 0; j < m_; ++j) {
    for (int i = 0; i < m_; ++i) {
      const int k = i + m_ * j;
      double lap = 4.0 * x(k, 0);
      if (i > 0) lap -= x(k - 1, 0);
      if (i + 1 < m_) lap -= x(k + 1, 0);
      if (j > 0) lap -= x(k - m_, 0);
      if (j + 1 < m_) lap -= x(k + m_, 0);
      y(k, 0) = c * lap + v_(k, 0) * x(k, 0);
    }
  }
  return y;
}

double BecProblem::eval(const DenseMat& x) const {
  return 0.5 * frobenius_inner(x, apply_hamiltonian(x)) +
         0.5 * beta_ * x.array().pow(4).sum();
}

DenseMat BecProblem::euclid_grad(const DenseMat& x) const {
  return apply_hamiltonian(x) + 2.0 * beta_ * x.array().cube().matrix();
}

DenseMat BecProblem::euclid_hess_vec(const DenseMat& x, const DenseMat& v) const {
  require(v.rows() == m_ * m_ && v.cols() == 1, "BecProblem: direction shape");
  return apply_hamiltonian(v) +
         (6.0 * beta_ * x.array().square() * v.array()).matrix();
}

DenseMat BecProblem::gaussian_initial(int mesh) {
  const double h = 32.0 / (mesh - 1);
  DenseMat x0(mesh * mesh, 1);
  const double c = 1.0 / std::sqrt(M_PI);
  for (int j = 0; j < mesh; ++j) {
    const double y = -16.0 + j * h;
    for (int i = 0; i < mesh; ++i) {
      const double xg = -16.0 + i * h;
      x0(i + mesh * j, 0) = c * std::exp(-0.5 * (xg * xg + y * y));
    }
  }
  return x0 / x0.norm();
}

DenseMat BecProblem::interpolate(const DenseMat& coarse, int mesh_coarse, int mesh_fine) {
  require(coarse.rows() == mesh_coarse * mesh_coarse && coarse.cols() == 1,
          "BecProblem: coarse state shape");
  require(mesh_fine >= 2 && mesh_coarse >= 2, "BecProblem: meshes must be at least 2");
  const double hc = 32.0 / (mesh_coarse - 1);
  const double hf = 32.0 / (mesh_fine - 1);
  DenseMat fine(mesh_fine * mesh_fine, 1);
  auto at = [&](int i, int j) { return coarse(i + mesh_coarse * j, 0); };
  for (int j = 0; j < mesh_fine; ++j) {
    const double y = (-16.0 + j * hf + 16.0) / hc;  // coarse-grid coordinate
    int j0 = std::min(static_cast<int>(std::floor(y)), mesh_coarse - 2);
    const double ty = y - j0;
    for (int i = 0; i < mesh_fine; ++i) {
      const double x = (-16.0 + i * hf + 16.0) / hc;
      int i0 = std::min(static_cast<int>(std::floor(x)), mesh_coarse - 2);
      const double tx = x - i0;
      fine(i + mesh_fine * j, 0) =
          (1 - tx) * (1 - ty) * at(i0, j0) + tx * (1 - ty) * at(i0 + 1, j0) +
          (1 - tx) * ty * at(i0, j0 + 1) + tx * ty * at(i0 + 1, j0 + 1);
    }
  }
  const double nrm = fine.norm();
  if (nrm == 0.0) throw NumericalError("BecProblem: interpolated state vanished");
  return fine / nrm;
}

// ---------------------------------------------------------------------------
// Random starting points

DenseMat random_gaussian(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseMat a(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) a(i, j) = normal(gen);
  return a;
}

DenseMat random_sphere_point(int n, std::uint64_t seed) {
  DenseMat a = random_gaussian(n, 1, seed);
  return a / a.norm();
}

DenseMat random_oblique_point(int p, int n, std::uint64_t seed) {
  DenseMat a = random_gaussian(p, n, seed);
  for (int j = 0; j < n; ++j) a.col(j) /= a.col(j).norm();
  return a;
}

DenseMat random_stiefel_point(int n, int p, std::uint64_t seed) {
  DenseMat a = random_gaussian(n, p, seed);
  Eigen::HouseholderQR<DenseMat> qr(a);
  DenseMat q = qr.householderQ() * DenseMat::Identity(n, p);
  // Fix the sign ambiguity so the point is a deterministic function of a.
  DenseMat r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  for (int j = 0; j < p; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace riemopt
