// Config-driven benchmark harness used by the `bench` command line tool.
// A JSON config names problems and solvers; the runner executes every
// (problem, solver) pair, shares the gradient warm start across the
// second-order solvers of a problem, and writes results.csv, results.md and
// optional JSONL per-iteration traces.
#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "riemopt/core.hpp"
#include "riemopt/manifolds.hpp"
#include "riemopt/problems.hpp"

namespace riemopt::bench {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverSpec {
  std::string name;  // gbb | adagrad | arnt | trqh | rtr
  SolverOptions opts;
  double adagrad_lr = 1e-2;
  double adagrad_eps = 1e-8;
};

struct ProblemSpec {
  std::string name;
  std::string kind;  // rayleigh | ncm | nleig | bec
  std::shared_ptr<nlohmann::json> raw;
};

struct BenchConfig {
  std::uint64_t seed = 0;
  int repetitions = 1;
  std::string output_dir = "bench_out";
  bool trace = false;
  double warm_start_tol = 1e-3;
  int warm_start_cap = 2000;
  std::vector<ProblemSpec> problems;
  std::vector<SolverSpec> solvers;
};

// Parses and validates; file paths are resolved against base_dir and must
// exist at parse time.  Throws ConfigError.
BenchConfig parse_config(const nlohmann::json& j, const std::string& base_dir);
BenchConfig load_config(const std::string& path);

struct BuiltProblem {
  std::string name;
  std::shared_ptr<const Manifold> manifold;
  std::shared_ptr<const Objective> objective;
  DenseMat x0;       // starting point for the gradient solvers
  DenseMat warm_x0;  // shared warm-started point for arnt/trqh/rtr
  int warm_iters = 0;
};

// Deterministic problem construction; `index` salts the seed so different
// problems in one config draw different starting points.
BuiltProblem build_problem(const ProblemSpec& spec, std::uint64_t seed, int index);
// Adds the shared warm start (no-op when no second-order solver needs it).
void attach_warm_start(BuiltProblem& bp, const BenchConfig& cfg);

struct ResultRow {
  std::string problem;
  std::string solver;
  int outer_its = 0;
  double mean_inner_its = 0.0;
  double f = kNaN;
  double nrmG = kNaN;
  double time_s = 0.0;
  std::string status;
};

SolverReport run_solver(const SolverSpec& spec, const BuiltProblem& bp);
ResultRow to_row(const std::string& problem, const std::string& solver, const SolverReport& rep);

// RFC 4180: quotes fields containing comma, quote or newline.
std::string csv_escape(const std::string& field);
std::string results_csv(const std::vector<ResultRow>& rows);
std::string results_markdown(const std::vector<ResultRow>& rows);
// Rebuilds the Markdown summary from a results.csv payload.
std::string markdown_from_csv(const std::string& csv_text);

// JSONL trace of one run: a meta line followed by one object per iteration.
std::string trace_jsonl(const std::string& problem, const std::string& solver,
                        const SolverReport& rep);
// Plot-friendly CSV (k, f, nrmG and whichever of sigma/step/radius the trace
// carries) extracted from a JSONL trace payload.
std::string plot_data_from_jsonl(const std::string& jsonl_text);

// Executes the full benchmark.  Returns a process exit code: 0 on success,
// 2 on runtime failure.  `jobs` is additionally capped by the
// RIEMOPT_MAX_JOBS environment variable when that is set.
int run_bench(const BenchConfig& cfg, int jobs, std::vector<ResultRow>* rows_out = nullptr);

// Derivative checks for every configured problem; returns 0 when all pass.
int run_check(const BenchConfig& cfg);

}  // namespace riemopt::bench
