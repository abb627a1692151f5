// Basic types shared by the solvers: matrix storage, objective interface,
// solver options and reports.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace riemopt {

// All iterates, gradients and tangent vectors are dense real matrices.
// Vector-shaped quantities (sphere points, BEC states) are n-by-1.
using DenseMat = Eigen::MatrixXd;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Errors

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct FeasibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition (non-tangent direction where a
// tangent one is required, non-normal vector passed to the Weingarten map, ...).
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// NaN/Inf showed up where the algorithm cannot continue.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Metric helpers.  The manifolds all carry the metric induced by the ambient
// Frobenius inner product, so these are the only inner products in the code.

inline double frobenius_inner(const DenseMat& a, const DenseMat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("frobenius_inner: shape mismatch (" +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
  return a.cwiseProduct(b).sum();
}

inline double fro_norm(const DenseMat& a) { return a.norm(); }

// Deterministic content hash of a matrix (bit pattern of the doubles, FNV-1a).
// Used to assert that solvers sharing a warm start really saw the same point.
std::uint64_t matrix_hash(const DenseMat& a);

// ---------------------------------------------------------------------------
// Objective oracles.  Implementations provide smooth extensions to the ambient
// space; all differentiation against the manifold is done by the callers.

class Objective {
 public:
  virtual ~Objective() = default;

  virtual double eval(const DenseMat& x) const = 0;
  virtual DenseMat euclid_grad(const DenseMat& x) const = 0;
  // Hessian is exposed matrix-free only; v is an ambient direction.
  virtual DenseMat euclid_hess_vec(const DenseMat& x, const DenseMat& v) const = 0;
};

// ---------------------------------------------------------------------------
// Options

enum class BbAlternation {
  kAlternate,  // long step on even iterations, short step on odd ones
  kLong,       // always <s,s>/|<s,v>|
  kShort,      // always |<s,v>|/<v,v>
};

struct SolverOptions {
  // Outer stopping.
  double grad_tol = 1e-6;
  int max_outer = 500;

  // Backtracking line search (shared by the gradient solver and the model
  // line search of the regularized Newton solver).
  double ls_rho = 1e-4;    // sufficient-decrease factor
  double ls_delta = 0.2;   // backtracking shrink factor
  int ls_max_backtracks = 50;

  // Nonmonotone reference weight for the gradient solver.
  double nm_weight = 0.85;

  // Barzilai-Borwein safeguards.
  double bb_min = 1e-10;
  double bb_max = 1e10;
  BbAlternation bb_alternation = BbAlternation::kAlternate;

  // Trust-region-style acceptance thresholds and regularization factors.
  // Requires 0 < eta1 <= eta2 < 1 and 0 < gamma0 < 1 <= gamma1 <= gamma2.
  double eta1 = 0.01;
  double eta2 = 0.9;
  double gamma0 = 0.2;
  double gamma1 = 1.0;
  double gamma2 = 10.0;

  // Regularization scaling: sigma_k = sigma_hat_k * ||grad f(x_k)||.
  double sigma_hat0 = 10.0;
  // Margin added to a detected negative-curvature magnitude when it is used
  // to push the regularization up.
  double curvature_margin = 1e-2;

  // Inner CG controls.
  double cg_eps = 1e-10;  // curvature tolerance (per unit norm of p)
  double cg_theta = 1.0;  // residual forcing exponent
  double cg_T = 0.1;      // residual forcing cap
  // Iteration cap grows as the gradient shrinks:
  // clamp(ceil(10 * -log10(||g||)), cap_min, cap_max), never above the
  // tangent-space dimension.
  int cg_cap_min = 30;
  int cg_cap_max = 500;
  double cg_cap_slope = 10.0;

  // Model line search starting step.
  double model_alpha0 = 1.0;

  // Trust-region solver controls.
  double tr_radius0 = 1.0;
  double tr_radius_max = 1e3;
  double tr_shrink = 0.25;
  double tr_grow = 2.0;
  // Truncated-CG residual rules: classic ||r|| <= ||r0||*min(||r0||^theta, kappa)
  // plus the flat rule ||r|| <= min(0.1, 0.1*||r0||).
  double tcg_kappa = 0.1;
  double tcg_theta = 1.0;

  // Inner gradient solve of the quasi-Newton variant.
  int inner_gbb_cap = 100;

  // Gradient warm start for the second-order solvers.
  bool warm_start = true;
  double warm_start_tol = 1e-3;
  int warm_start_cap = 2000;

  // Throws std::invalid_argument when a constraint is violated.
  void validate() const;

  // Defaults tuned per solver family.
  static SolverOptions gradient_defaults();  // max_outer = 10000
  static SolverOptions newton_defaults();    // max_outer = 500
};

// ---------------------------------------------------------------------------
// Reports

enum class SolveStatus { Converged, MaxIters, LineSearchFailure };

const char* to_string(SolveStatus s);

// One record per outer iteration.  Values are those at the *end* of the
// iteration; fields that do not apply to a given solver stay NaN/false.
struct TraceRecord {
  int k = 0;
  double f = kNaN;          // f(x_{k+1})
  double grad_norm = kNaN;  // ||grad f(x_{k+1})||

  double step = kNaN;       // line-search step (gradient/model line search)

  // Regularized Newton bookkeeping.
  double sigma_hat = kNaN;  // scale-free regularization used at iteration k
  double sigma = kNaN;      // sigma_hat * ||grad f(x_k)||
  double rho = kNaN;        // acceptance ratio (NaN if f(z) was not finite)
  bool accepted = true;
  int inner_iters = 0;
  bool negative_curvature = false;
  double sigma_est = kNaN;  // curvature magnitude reported by the inner CG

  // Nonmonotone reference bookkeeping of the gradient solver.
  double nm_C = kNaN;
  double nm_Q = kNaN;

  // Trust-region radius after the update.
  double radius = kNaN;
};

struct SolverReport {
  SolveStatus status = SolveStatus::MaxIters;
  DenseMat x;  // final iterate
  int outer_iters = 0;
  double mean_inner_iters = 0.0;

  double initial_f = kNaN;
  double initial_grad_norm = kNaN;
  double final_f = kNaN;
  double final_grad_norm = kNaN;
  double wall_time_s = 0.0;

  // Iterations spent in the gradient warm start (not counted in outer_iters).
  int warm_start_iters = 0;
  // Hash of the iterate the main loop actually started from (after any warm
  // start); lets callers assert that solvers shared a warm start.
  std::uint64_t start_hash = 0;

  std::vector<TraceRecord> trace;
};

}  // namespace riemopt
