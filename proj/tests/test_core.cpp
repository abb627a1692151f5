#include <doctest.h>

#include "riemopt/core.hpp"

using namespace riemopt;

TEST_CASE("frobenius inner product") {
  DenseMat a(2, 2), b(2, 2);
  a << 1, 2, 3, 4;
  b << 5, 6, 7, 8;
  CHECK(frobenius_inner(a, b) == doctest::Approx(5 + 12 + 21 + 32).epsilon(1e-15));
  CHECK(fro_norm(a) == doctest::Approx(std::sqrt(30.0)).epsilon(1e-15));

  DenseMat c(3, 2);
  CHECK_THROWS_AS(frobenius_inner(a, c), DimensionError);
}

TEST_CASE("matrix hash is content and shape sensitive") {
  DenseMat a(2, 3);
  a << 1, 2, 3, 4, 5, 6;
  const auto h = matrix_hash(a);
  CHECK(h == matrix_hash(a));  // deterministic

  DenseMat b = a;
  b(1, 2) += 1e-16;  // representable change, different bits
  if (b(1, 2) != a(1, 2)) CHECK(h != matrix_hash(b));

  DenseMat t(3, 2);
  t << 1, 4, 2, 5, 3, 6;  // same bytes column-major, different shape
  CHECK(h != matrix_hash(t));
}

TEST_CASE("solver option validation") {
  SolverOptions o;
  CHECK_NOTHROW(o.validate());

  SUBCASE("acceptance thresholds must be ordered") {
    o.eta1 = 0.95;  // > eta2
    CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  }
  SUBCASE("shrink factor below one") {
    o.gamma0 = 1.5;
    CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  }
  SUBCASE("growth factors at least one") {
    o.gamma1 = 0.5;
    CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  }
  SUBCASE("bb bounds ordered") {
    o.bb_min = 1.0;
    o.bb_max = 0.5;
    CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  }
  SUBCASE("nonpositive tolerance rejected") {
    o.grad_tol = 0.0;
    CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  }
}

TEST_CASE("per-family defaults") {
  CHECK(SolverOptions::gradient_defaults().max_outer == 10000);
  CHECK(SolverOptions::newton_defaults().max_outer == 500);
  CHECK(SolverOptions::newton_defaults().sigma_hat0 == 10.0);
  CHECK_NOTHROW(SolverOptions::gradient_defaults().validate());
  CHECK_NOTHROW(SolverOptions::newton_defaults().validate());
}

TEST_CASE("status names") {
  CHECK(std::string(to_string(SolveStatus::Converged)) == "Converged");
  CHECK(std::string(to_string(SolveStatus::MaxIters)) == "MaxIters");
  CHECK(std::string(to_string(SolveStatus::LineSearchFailure)) == "LineSearchFailure");
}
