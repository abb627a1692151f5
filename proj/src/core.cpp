#include "riemopt/core.hpp"

#include <cstring>

namespace riemopt {

std::uint64_t matrix_hash(const DenseMat& a) {
  std::uint64_t h = 1469598103934665603ull;  // FNV offset basis
  auto mix = [&h](std::uint64_t word) {
    for (int b = 0; b < 8; ++b) {
      h ^= (word >> (8 * b)) & 0xffull;
      h *= 1099511628211ull;  // FNV prime
    }
  };
  mix(static_cast<std::uint64_t>(a.rows()));
  mix(static_cast<std::uint64_t>(a.cols()));
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      std::uint64_t bits;
      double v = a(i, j);
      std::memcpy(&bits, &v, sizeof bits);
      mix(bits);
    }
  }
  return h;
}

void SolverOptions::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("SolverOptions: " + msg); };
  if (!(grad_tol > 0)) fail("grad_tol must be positive");
  if (max_outer < 0) fail("max_outer must be nonnegative");
  if (!(ls_rho > 0 && ls_rho < 1)) fail("ls_rho must be in (0,1)");
  if (!(ls_delta > 0 && ls_delta < 1)) fail("ls_delta must be in (0,1)");
  if (ls_max_backtracks < 1) fail("ls_max_backtracks must be at least 1");
  if (!(nm_weight >= 0 && nm_weight < 1)) fail("nm_weight must be in [0,1)");
  if (!(bb_min > 0 && bb_min <= bb_max)) fail("bb bounds must satisfy 0 < bb_min <= bb_max");
  if (!(eta1 > 0 && eta1 <= eta2 && eta2 < 1)) fail("need 0 < eta1 <= eta2 < 1");
  if (!(gamma0 > 0 && gamma0 < 1 && gamma1 >= 1 && gamma1 <= gamma2))
    fail("need 0 < gamma0 < 1 <= gamma1 <= gamma2");
  if (!(sigma_hat0 > 0)) fail("sigma_hat0 must be positive");
  if (!(curvature_margin >= 0)) fail("curvature_margin must be nonnegative");
  if (!(cg_eps >= 0)) fail("cg_eps must be nonnegative");
  if (!(cg_theta > 0)) fail("cg_theta must be positive");
  if (!(cg_T > 0)) fail("cg_T must be positive");
  if (cg_cap_min < 1 || cg_cap_max < cg_cap_min) fail("bad inner iteration caps");
  if (!(model_alpha0 > 0)) fail("model_alpha0 must be positive");
  if (!(tr_radius0 > 0 && tr_radius0 <= tr_radius_max)) fail("bad trust-region radii");
  if (!(tr_shrink > 0 && tr_shrink < 1)) fail("tr_shrink must be in (0,1)");
  if (!(tr_grow > 1)) fail("tr_grow must exceed 1");
  if (inner_gbb_cap < 1) fail("inner_gbb_cap must be at least 1");
  if (!(warm_start_tol > 0)) fail("warm_start_tol must be positive");
  if (warm_start_cap < 0) fail("warm_start_cap must be nonnegative");
}

SolverOptions SolverOptions::gradient_defaults() {
  SolverOptions o;
  o.max_outer = 10000;
  return o;
}

SolverOptions SolverOptions::newton_defaults() {
  SolverOptions o;
  o.max_outer = 500;
  return o;
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIters: return "MaxIters";
    case SolveStatus::LineSearchFailure: return "LineSearchFailure";
  }
  return "Unknown";
}

}  // namespace riemopt
