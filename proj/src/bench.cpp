#include "riemopt/bench.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "riemopt/arnt.hpp"
#include "riemopt/diagnostics.hpp"
#include "riemopt/gbb.hpp"
#include "riemopt/mtx.hpp"
#include "riemopt/rtr.hpp"

namespace riemopt::bench {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw ConfigError("config: " + msg); }

const json& need(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) bad(ctx + ": missing required field '" + key + "'");
  return *it;
}

double num(const json& j, const char* key, const std::string& ctx) {
  const json& v = need(j, key, ctx);
  if (!v.is_number()) bad(ctx + ": field '" + key + "' must be a number");
  return v.get<double>();
}

int integer(const json& j, const char* key, const std::string& ctx) {
  const json& v = need(j, key, ctx);
  if (!v.is_number_integer()) bad(ctx + ": field '" + key + "' must be an integer");
  return v.get<int>();
}

std::string resolve_path(const std::string& p, const std::string& base_dir) {
  fs::path path(p);
  if (path.is_relative()) path = fs::path(base_dir) / path;
  if (!fs::exists(path)) bad("referenced file does not exist: " + path.string());
  return path.string();
}

void apply_solver_option(SolverOptions& o, double& lr, double& eps_div, const std::string& key,
                         const json& v, const std::string& ctx) {
  auto d = [&]() -> double {
    if (!v.is_number()) bad(ctx + ": option '" + key + "' must be a number");
    return v.get<double>();
  };
  auto i = [&]() -> int {
    if (!v.is_number_integer()) bad(ctx + ": option '" + key + "' must be an integer");
    return v.get<int>();
  };
  if (key == "grad_tol") o.grad_tol = d();
  else if (key == "max_outer") o.max_outer = i();
  else if (key == "ls_rho") o.ls_rho = d();
  else if (key == "ls_delta") o.ls_delta = d();
  else if (key == "ls_max_backtracks") o.ls_max_backtracks = i();
  else if (key == "nm_weight") o.nm_weight = d();
  else if (key == "bb_min") o.bb_min = d();
  else if (key == "bb_max") o.bb_max = d();
  else if (key == "bb_alternation") {
    if (!v.is_string()) bad(ctx + ": option 'bb_alternation' must be a string");
    const std::string s = v.get<std::string>();
    if (s == "alternate") o.bb_alternation = BbAlternation::kAlternate;
    else if (s == "long") o.bb_alternation = BbAlternation::kLong;
    else if (s == "short") o.bb_alternation = BbAlternation::kShort;
    else bad(ctx + ": unknown bb_alternation '" + s + "'");
  }
  else if (key == "eta1") o.eta1 = d();
  else if (key == "eta2") o.eta2 = d();
  else if (key == "gamma0") o.gamma0 = d();
  else if (key == "gamma1") o.gamma1 = d();
  else if (key == "gamma2") o.gamma2 = d();
  else if (key == "sigma_hat0") o.sigma_hat0 = d();
  else if (key == "curvature_margin") o.curvature_margin = d();
  else if (key == "cg_eps") o.cg_eps = d();
  else if (key == "cg_theta") o.cg_theta = d();
  else if (key == "cg_T") o.cg_T = d();
  else if (key == "cg_cap_min") o.cg_cap_min = i();
  else if (key == "cg_cap_max") o.cg_cap_max = i();
  else if (key == "cg_cap_slope") o.cg_cap_slope = d();
  else if (key == "model_alpha0") o.model_alpha0 = d();
  else if (key == "tr_radius0") o.tr_radius0 = d();
  else if (key == "tr_radius_max") o.tr_radius_max = d();
  else if (key == "tr_shrink") o.tr_shrink = d();
  else if (key == "tr_grow") o.tr_grow = d();
  else if (key == "tcg_kappa") o.tcg_kappa = d();
  else if (key == "tcg_theta") o.tcg_theta = d();
  else if (key == "inner_gbb_cap") o.inner_gbb_cap = i();
  else if (key == "lr") lr = d();
  else if (key == "eps_div") eps_div = d();
  else bad(ctx + ": unknown solver option '" + key + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v, const char* spec) {
  char buf[40];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

BenchConfig parse_config(const json& j, const std::string& base_dir) {
  if (!j.is_object()) bad("top level must be a JSON object");
  BenchConfig cfg;

  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer()) bad("'seed' must be an integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("repetitions")) {
    cfg.repetitions = j["repetitions"].get<int>();
    if (cfg.repetitions < 1) bad("'repetitions' must be at least 1");
  }
  if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
  if (j.contains("trace")) cfg.trace = j["trace"].get<bool>();
  if (j.contains("warm_start_tol")) cfg.warm_start_tol = j["warm_start_tol"].get<double>();
  if (j.contains("warm_start_cap")) cfg.warm_start_cap = j["warm_start_cap"].get<int>();

  const json& problems = need(j, "problems", "top level");
  if (!problems.is_array() || problems.empty()) bad("'problems' must be a non-empty array");
  int idx = 0;
  for (const json& p : problems) {
    const std::string ctx = "problems[" + std::to_string(idx) + "]";
    if (!p.is_object()) bad(ctx + " must be an object");
    ProblemSpec spec;
    spec.kind = need(p, "kind", ctx).get<std::string>();
    spec.name = p.contains("name") ? p["name"].get<std::string>()
                                   : spec.kind + "-" + std::to_string(idx);
    if (spec.kind != "rayleigh" && spec.kind != "ncm" && spec.kind != "nleig" &&
        spec.kind != "bec")
      bad(ctx + ": unknown kind '" + spec.kind + "'");

    json raw = p;
    // Validate the numeric shape now so `bench check` and `bench run` cannot
    // fail halfway through a long run.
    if (spec.kind == "rayleigh") {
      const int n = integer(p, "n", ctx);
      if (n < 1) bad(ctx + ": n must be positive");
      const int pp = p.contains("p") ? integer(p, "p", ctx) : 1;
      if (pp < 1 || pp > n) bad(ctx + ": need 1 <= p <= n");
      if (p.contains("matrix"))
        raw["matrix"] = resolve_path(p["matrix"].get<std::string>(), base_dir);
    } else if (spec.kind == "ncm") {
      const int pp = integer(p, "p", ctx);
      if (pp < 1) bad(ctx + ": p must be positive");
      if (p.contains("c") && p["c"].get<std::string>() != "example")
        raw["c"] = resolve_path(p["c"].get<std::string>(), base_dir);
      else if (integer(p, "n", ctx) < 1)
        bad(ctx + ": n must be positive");
      if (p.contains("weights")) {
        const std::string w = p["weights"].get<std::string>();
        if (w != "ones" && w != "random") raw["weights"] = resolve_path(w, base_dir);
      }
    } else if (spec.kind == "nleig") {
      const int n = integer(p, "n", ctx);
      const int pp = integer(p, "p", ctx);
      if (n < 1 || pp < 1 || pp > n) bad(ctx + ": need 1 <= p <= n");
      if (num(p, "alpha", ctx) < 0) bad(ctx + ": alpha must be nonnegative");
    } else {  // bec
      const int mesh = integer(p, "mesh", ctx);
      if (mesh < 2) bad(ctx + ": mesh must be at least 2");
      if (num(p, "beta", ctx) < 0) bad(ctx + ": beta must be nonnegative");
      if (p.contains("potential")) {
        const std::string s = p["potential"].get<std::string>();
        if (s != "harmonic" && s != "double_well") bad(ctx + ": unknown potential '" + s + "'");
      }
      if (p.contains("refine") && p["refine"].get<bool>()) {
        int coarse = p.contains("coarse_mesh") ? p["coarse_mesh"].get<int>() : 17;
        if (coarse < 2) bad(ctx + ": coarse_mesh must be at least 2");
        int m = coarse;
        while (m < mesh) m = 2 * m - 1;
        if (m != mesh)
          bad(ctx + ": mesh must arise from coarse_mesh by grid doubling (m -> 2m - 1)");
      }
    }
    spec.raw = std::make_shared<json>(std::move(raw));
    cfg.problems.push_back(std::move(spec));
    ++idx;
  }

  const json& solvers = need(j, "solvers", "top level");
  if (!solvers.is_array() || solvers.empty()) bad("'solvers' must be a non-empty array");
  idx = 0;
  for (const json& s : solvers) {
    const std::string ctx = "solvers[" + std::to_string(idx) + "]";
    SolverSpec spec;
    if (s.is_string()) {
      spec.name = s.get<std::string>();
    } else if (s.is_object()) {
      spec.name = need(s, "name", ctx).get<std::string>();
    } else {
      bad(ctx + " must be a string or an object");
    }
    if (spec.name != "gbb" && spec.name != "adagrad" && spec.name != "arnt" &&
        spec.name != "trqh" && spec.name != "rtr")
      bad(ctx + ": unknown solver '" + spec.name + "'");
    spec.opts = (spec.name == "gbb" || spec.name == "adagrad")
                    ? SolverOptions::gradient_defaults()
                    : SolverOptions::newton_defaults();
    if (s.is_object() && s.contains("options")) {
      const json& o = s["options"];
      if (!o.is_object()) bad(ctx + ": 'options' must be an object");
      for (auto it = o.begin(); it != o.end(); ++it)
        apply_solver_option(spec.opts, spec.adagrad_lr, spec.adagrad_eps, it.key(), it.value(),
                            ctx);
    }
    try {
      spec.opts.validate();
    } catch (const std::invalid_argument& e) {
      bad(ctx + ": " + e.what());
    }
    cfg.solvers.push_back(std::move(spec));
    ++idx;
  }
  return cfg;
}

BenchConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    bad(std::string("JSON parse error: ") + e.what());
  }
  return parse_config(j, fs::path(path).parent_path().string());
}

// ---------------------------------------------------------------------------
// Problem construction

namespace {

std::shared_ptr<const SymOperator> rayleigh_operator(const json& p, int n) {
  if (p.contains("matrix")) {
    DenseMat a = read_matrix_market_file(p["matrix"].get<std::string>());
    if (a.rows() != n || a.cols() != n) bad("rayleigh: matrix file does not match n");
    return std::make_shared<DenseSymOperator>(0.5 * (a + a.transpose()));
  }
  return std::make_shared<TridiagLaplacian>(n);
}

}  // namespace

BuiltProblem build_problem(const ProblemSpec& spec, std::uint64_t seed, int index) {
  const json& p = *spec.raw;
  const std::uint64_t pseed = seed + 1000003ull * static_cast<std::uint64_t>(index);
  BuiltProblem bp;
  bp.name = spec.name;

  if (spec.kind == "rayleigh") {
    const int n = p["n"].get<int>();
    const int pp = p.contains("p") ? p["p"].get<int>() : 1;
    bp.objective = std::make_shared<RayleighProblem>(rayleigh_operator(p, n), pp);
    if (pp == 1) {
      bp.manifold = std::make_shared<Sphere>(n);
      bp.x0 = random_sphere_point(n, pseed);
    } else {
      bp.manifold = std::make_shared<Stiefel>(n, pp);
      bp.x0 = random_stiefel_point(n, pp, pseed);
    }
  } else if (spec.kind == "ncm") {
    DenseMat c = p.contains("c") && p["c"].get<std::string>() != "example"
                     ? read_matrix_market_file(p["c"].get<std::string>())
                     : NearestCorrelationProblem::example_c(p["n"].get<int>());
    const int n = static_cast<int>(c.rows());
    const int pp = p["p"].get<int>();
    DenseMat h;
    const std::string w = p.contains("weights") ? p["weights"].get<std::string>() : "ones";
    if (w == "ones") h = DenseMat::Ones(n, n);
    else if (w == "random") h = NearestCorrelationProblem::random_weights(n, pseed + 17);
    else h = read_matrix_market_file(w);
    bp.objective = std::make_shared<NearestCorrelationProblem>(std::move(c), std::move(h), pp);
    bp.manifold = std::make_shared<Oblique>(pp, n);
    bp.x0 = random_oblique_point(pp, n, pseed);
  } else if (spec.kind == "nleig") {
    const int n = p["n"].get<int>();
    const int pp = p["p"].get<int>();
    bp.objective = std::make_shared<NonlinearEigenProblem>(n, pp, p["alpha"].get<double>());
    bp.manifold = std::make_shared<Stiefel>(n, pp);
    bp.x0 = random_stiefel_point(n, pp, pseed);
  } else if (spec.kind == "bec") {
    const int mesh = p["mesh"].get<int>();
    const double beta = p["beta"].get<double>();
    const auto pot = (p.contains("potential") && p["potential"] == "double_well")
                         ? BecProblem::Potential::DoubleWell
                         : BecProblem::Potential::Harmonic;
    bp.objective = std::make_shared<BecProblem>(mesh, beta, pot);
    bp.manifold = std::make_shared<Sphere>(mesh * mesh);
    if (p.contains("refine") && p["refine"].get<bool>()) {
      // March the gradient solver up the mesh hierarchy to seed the finest
      // level; every solver then starts from the same interpolated point.
      const int coarse = p.contains("coarse_mesh") ? p["coarse_mesh"].get<int>() : 17;
      const double rtol = p.contains("refine_tol") ? p["refine_tol"].get<double>() : 1e-4;
      DenseMat x = BecProblem::gaussian_initial(coarse);
      int m = coarse;
      while (m < mesh) {
        BecProblem level(m, beta, pot);
        Sphere sph(m * m);
        SolverOptions gopts = SolverOptions::gradient_defaults();
        gopts.grad_tol = rtol;
        SolverReport r = solve_gbb(sph, level, x, gopts);
        const int m_next = 2 * m - 1;
        x = BecProblem::interpolate(r.x, m, m_next);
        m = m_next;
      }
      bp.x0 = std::move(x);
    } else {
      bp.x0 = BecProblem::gaussian_initial(mesh);
    }
  } else {
    bad("unknown problem kind '" + spec.kind + "'");
  }

  bp.warm_x0 = bp.x0;
  return bp;
}

void attach_warm_start(BuiltProblem& bp, const BenchConfig& cfg) {
  bool wants_warm = false;
  for (const auto& s : cfg.solvers)
    wants_warm = wants_warm || s.name == "arnt" || s.name == "trqh" || s.name == "rtr";
  if (!wants_warm) return;
  SolverOptions gopts = SolverOptions::gradient_defaults();
  gopts.grad_tol = cfg.warm_start_tol;
  gopts.max_outer = cfg.warm_start_cap;
  SolverReport warm = solve_gbb(*bp.manifold, *bp.objective, bp.x0, gopts);
  bp.warm_x0 = std::move(warm.x);
  bp.warm_iters = warm.outer_iters;
}

// ---------------------------------------------------------------------------
// Running

SolverReport run_solver(const SolverSpec& spec, const BuiltProblem& bp) {
  if (spec.name == "gbb") return solve_gbb(*bp.manifold, *bp.objective, bp.x0, spec.opts);
  if (spec.name == "adagrad")
    return solve_adagrad(*bp.manifold, *bp.objective, bp.x0, spec.adagrad_lr, spec.adagrad_eps,
                         spec.opts);
  // Second-order solvers start from the shared warm-started point.
  SolverOptions o = spec.opts;
  o.warm_start = false;
  SolverReport rep;
  if (spec.name == "arnt") rep = solve_arnt(*bp.manifold, *bp.objective, bp.warm_x0, o);
  else if (spec.name == "trqh") rep = solve_trqh(*bp.manifold, *bp.objective, bp.warm_x0, o);
  else if (spec.name == "rtr") rep = solve_rtr(*bp.manifold, *bp.objective, bp.warm_x0, o);
  else throw ConfigError("unknown solver " + spec.name);
  rep.warm_start_iters = bp.warm_iters;
  return rep;
}

ResultRow to_row(const std::string& problem, const std::string& solver, const SolverReport& rep) {
  ResultRow row;
  row.problem = problem;
  row.solver = solver;
  row.outer_its = rep.outer_iters;
  row.mean_inner_its = rep.mean_inner_iters;
  row.f = rep.final_f;
  row.nrmG = rep.final_grad_norm;
  row.time_s = rep.wall_time_s;
  row.status = to_string(rep.status);
  return row;
}

// ---------------------------------------------------------------------------
// Emission

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << "problem,solver,outer_its,mean_inner_its,f,nrmG,time_s,status\r\n";
  for (const auto& r : rows) {
    out << csv_escape(r.problem) << ',' << csv_escape(r.solver) << ',' << r.outer_its << ','
        << fmt_short(r.mean_inner_its, "%.2f") << ',' << fmt(r.f) << ',' << fmt(r.nrmG) << ','
        << fmt_short(r.time_s, "%.1f") << ',' << csv_escape(r.status) << "\r\n";
  }
  return out.str();
}

namespace {

std::string markdown_table(const std::vector<std::array<std::string, 8>>& cells) {
  std::ostringstream out;
  out << "| problem | solver | its | f | nrmG | time (s) | status |\n";
  out << "| --- | --- | --- | --- | --- | --- | --- |\n";
  for (const auto& c : cells) {
    std::string its = c[2];
    if (c[3] != "0.00" && c[3] != "0") its += " (" + c[3] + ")";
    out << "| " << c[0] << " | " << c[1] << " | " << its << " | " << c[4] << " | " << c[5]
        << " | " << c[6] << " | " << c[7] << " |\n";
  }
  return out.str();
}

// Minimal RFC 4180 reader (quotes, escaped quotes, CRLF).
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      if (!field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(row));
        row.clear();
      }
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (!field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string results_markdown(const std::vector<ResultRow>& rows) {
  std::vector<std::array<std::string, 8>> cells;
  for (const auto& r : rows)
    cells.push_back({r.problem, r.solver, std::to_string(r.outer_its),
                     fmt_short(r.mean_inner_its, "%.2f"), fmt_short(r.f, "%.8g"),
                     fmt_short(r.nrmG, "%.3g"), fmt_short(r.time_s, "%.1f"), r.status});
  return markdown_table(cells);
}

std::string markdown_from_csv(const std::string& csv_text) {
  auto rows = parse_csv(csv_text);
  if (rows.empty()) throw std::runtime_error("results csv is empty");
  std::vector<std::array<std::string, 8>> cells;
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 8)
      throw std::runtime_error("results csv: row " + std::to_string(i) + " has " +
                               std::to_string(rows[i].size()) + " fields, expected 8");
    std::array<std::string, 8> c;
    std::copy(rows[i].begin(), rows[i].end(), c.begin());
    cells.push_back(std::move(c));
  }
  return markdown_table(cells);
}

std::string trace_jsonl(const std::string& problem, const std::string& solver,
                        const SolverReport& rep) {
  std::ostringstream out;
  json meta{{"type", "meta"},
            {"problem", problem},
            {"solver", solver},
            {"status", to_string(rep.status)},
            {"start_hash", rep.start_hash},
            {"warm_start_iters", rep.warm_start_iters},
            {"initial_f", rep.initial_f},
            {"initial_grad_norm", rep.initial_grad_norm}};
  out << meta.dump() << '\n';
  for (const TraceRecord& t : rep.trace) {
    json rec{{"type", "iter"}, {"k", t.k}, {"f", t.f}, {"nrmG", t.grad_norm}};
    auto put = [&rec](const char* key, double v) {
      if (!std::isnan(v)) rec[key] = v;
    };
    put("step", t.step);
    put("sigma_hat", t.sigma_hat);
    put("sigma", t.sigma);
    put("sigma_est", t.sigma_est);
    put("C", t.nm_C);
    put("Q", t.nm_Q);
    put("radius", t.radius);
    if (!std::isnan(t.sigma_hat) || !std::isnan(t.radius)) {
      rec["rho"] = std::isnan(t.rho) ? json() : json(t.rho);
      rec["accepted"] = t.accepted;
      rec["inner_its"] = t.inner_iters;
      rec["neg_curv"] = t.negative_curvature;
    }
    out << rec.dump() << '\n';
  }
  return out.str();
}

std::string plot_data_from_jsonl(const std::string& jsonl_text) {
  std::istringstream in(jsonl_text);
  std::string line;
  bool has_sigma = false, has_step = false, has_radius = false;
  std::vector<json> iters;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (j.value("type", "") != "iter") continue;
    has_sigma = has_sigma || j.contains("sigma");
    has_step = has_step || j.contains("step");
    has_radius = has_radius || j.contains("radius");
    iters.push_back(std::move(j));
  }
  std::ostringstream out;
  out << "k,f,nrmG";
  if (has_sigma) out << ",sigma";
  if (has_step) out << ",step";
  if (has_radius) out << ",radius";
  out << "\r\n";
  for (const json& j : iters) {
    out << j["k"].get<int>() << ',' << fmt(j["f"].get<double>()) << ','
        << fmt(j["nrmG"].get<double>());
    auto opt = [&](const char* key) {
      out << ',';
      if (j.contains(key)) out << fmt(j[key].get<double>());
    };
    if (has_sigma) opt("sigma");
    if (has_step) opt("step");
    if (has_radius) opt("radius");
    out << "\r\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Orchestration

namespace {

int effective_jobs(int jobs) {
  if (const char* env = std::getenv("RIEMOPT_MAX_JOBS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) jobs = std::min(jobs, cap);
  }
  return std::max(jobs, 1);
}

}  // namespace

int run_bench(const BenchConfig& cfg, int jobs, std::vector<ResultRow>* rows_out) {
  try {
    std::vector<BuiltProblem> built;
    built.reserve(cfg.problems.size());
    for (size_t i = 0; i < cfg.problems.size(); ++i) {
      built.push_back(build_problem(cfg.problems[i], cfg.seed, static_cast<int>(i)));
      attach_warm_start(built.back(), cfg);
    }

    struct Task {
      size_t problem, solver;
      int rep;
    };
    std::vector<Task> tasks;
    for (size_t p = 0; p < built.size(); ++p)
      for (size_t s = 0; s < cfg.solvers.size(); ++s)
        for (int r = 0; r < cfg.repetitions; ++r) tasks.push_back({p, s, r});

    std::vector<SolverReport> reports(tasks.size());
    std::vector<std::string> errors(tasks.size());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
      for (size_t t = next.fetch_add(1); t < tasks.size(); t = next.fetch_add(1)) {
        try {
          reports[t] = run_solver(cfg.solvers[tasks[t].solver], built[tasks[t].problem]);
        } catch (const std::exception& e) {
          errors[t] = e.what();
        }
      }
    };
    const int njobs = std::min<std::size_t>(effective_jobs(jobs), tasks.size());
    if (njobs <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < njobs; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }

    // A failed solve becomes a row with an error status; the run continues.
    for (size_t t = 0; t < tasks.size(); ++t)
      if (!errors[t].empty())
        std::cerr << "warning: " << built[tasks[t].problem].name << " / "
                  << cfg.solvers[tasks[t].solver].name << ": " << errors[t] << "\n";

    // The second-order solvers of one problem must have seen the same
    // warm-started iterate.
    for (size_t p = 0; p < built.size(); ++p) {
      std::uint64_t expect = 0;
      bool have = false;
      for (size_t t = 0; t < tasks.size(); ++t) {
        const std::string& name = cfg.solvers[tasks[t].solver].name;
        if (tasks[t].problem != p || !errors[t].empty() ||
            (name != "arnt" && name != "trqh" && name != "rtr"))
          continue;
        if (!have) {
          expect = reports[t].start_hash;
          have = true;
        } else if (reports[t].start_hash != expect) {
          std::cerr << "error: warm-start hash mismatch for problem " << built[p].name << "\n";
          return 2;
        }
      }
    }

    std::vector<ResultRow> rows;
    rows.reserve(tasks.size());
    for (size_t t = 0; t < tasks.size(); ++t) {
      if (errors[t].empty()) {
        rows.push_back(to_row(built[tasks[t].problem].name, cfg.solvers[tasks[t].solver].name,
                              reports[t]));
      } else {
        ResultRow row;
        row.problem = built[tasks[t].problem].name;
        row.solver = cfg.solvers[tasks[t].solver].name;
        row.f = kNaN;
        row.nrmG = kNaN;
        row.status = "Error: " + errors[t];
        rows.push_back(std::move(row));
      }
    }

    fs::create_directories(cfg.output_dir);
    {
      std::ofstream csv(fs::path(cfg.output_dir) / "results.csv", std::ios::binary);
      csv << results_csv(rows);
    }
    {
      std::ofstream md(fs::path(cfg.output_dir) / "results.md", std::ios::binary);
      md << results_markdown(rows);
    }
    if (cfg.trace) {
      fs::create_directories(fs::path(cfg.output_dir) / "traces");
      for (size_t t = 0; t < tasks.size(); ++t) {
        if (!errors[t].empty()) continue;
        const auto path = fs::path(cfg.output_dir) / "traces" /
                          (sanitize(built[tasks[t].problem].name) + "__" +
                           cfg.solvers[tasks[t].solver].name + ".jsonl");
        std::ofstream tr(path, std::ios::binary);
        tr << trace_jsonl(built[tasks[t].problem].name, cfg.solvers[tasks[t].solver].name,
                          reports[t]);
      }
    }

    if (rows_out) *rows_out = std::move(rows);
    return 0;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

int run_check(const BenchConfig& cfg) {
  bool all_pass = true;
  for (size_t i = 0; i < cfg.problems.size(); ++i) {
    BuiltProblem bp;
    try {
      bp = build_problem(cfg.problems[i], cfg.seed, static_cast<int>(i));
    } catch (const std::exception& e) {
      std::cerr << "error: building " << cfg.problems[i].name << ": " << e.what() << "\n";
      return 2;
    }
    for (int probe = 0; probe < 3; ++probe) {
      DenseMat x = bp.manifold->project_to_manifold(
          bp.x0 + 0.1 * random_gaussian(bp.manifold->rows(), bp.manifold->cols(),
                                        cfg.seed + 31ull * probe + i));
      const auto g = check_gradient(*bp.objective, x, 1e-6, 10, 1e-5, cfg.seed + probe);
      const auto h = check_hess_vec(*bp.objective, x, 1e-5, 10, 1e-4, cfg.seed + probe);
      const auto rh = check_riemannian_hess_vec(*bp.objective, *bp.manifold, x, 1e-6, 10, 1e-5,
                                                cfg.seed + probe);
      const bool ok = g.pass && h.pass && rh.pass;
      all_pass = all_pass && ok;
      std::cout << (ok ? "[PASS] " : "[FAIL] ") << bp.name << " point " << probe
                << "  grad " << g.max_rel_err << "  hess " << h.max_rel_err << "  rhess "
                << rh.max_rel_err << "\n";
    }
  }
  return all_pass ? 0 : 2;
}

}  // namespace riemopt::bench
