#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "riemopt/bench.hpp"

using namespace riemopt;
using namespace riemopt::bench;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json minimal_cfg() {
  return json::parse(R"({
    "problems": [{"kind": "rayleigh", "n": 20}],
    "solvers": ["gbb"]
  })");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path write_temp(const std::string& name, const std::string& text) {
  fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p, std::ios::binary);
  out << text;
  return p;
}

}  // namespace

TEST_CASE("config parsing rejects malformed input") {
  const std::string base = fs::temp_directory_path().string();

  CHECK_THROWS_AS(parse_config(json::array(), base), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"solvers": ["gbb"]})"), base), ConfigError);

  SUBCASE("problems") {
    json j = minimal_cfg();
    j["problems"] = json::array();
    CHECK_THROWS_AS(parse_config(j, base), ConfigError);

    j = minimal_cfg();
    j["problems"][0]["kind"] = "sudoku";
    CHECK_THROWS_AS(parse_config(j, base), ConfigError);

    j = minimal_cfg();
    j["problems"][0].erase("n");
    CHECK_THROWS_AS(parse_config(j, base), ConfigError);

    j = minimal_cfg();
    j["problems"][0]["p"] = 30;  // p > n
    CHECK_THROWS_AS(parse_config(j, base), ConfigError);

    j = minimal_cfg();
    j["problems"][0] = {{"kind", "nleig"}, {"n", 50}, {"p", 5}, {"alpha", -1.0}};
    CHECK_THROWS_AS(parse_config(j, base), ConfigError);

    j = minimal_cfg();
    j["problems"][0] = {{"kind", "bec"}, {"mesh", 1}, {"beta", 10.0}};
    CHECK_THROWS_AS(parse_config(j, base), ConfigError);

    j = minimal_cfg();
    j["problems"][0] = {{"kind", "bec"}, {"mesh", 33}, {"beta", 10.0}, {"potential", "cubic"}};
    CHECK_THROWS_AS(parse_config(j, base), ConfigError);

    // 17 -> 33 -> 65 by grid doubling; 20 is unreachable.
    j = minimal_cfg();
    j["problems"][0] = {{"kind", "bec"}, {"mesh", 20}, {"beta", 10.0}, {"refine", true}};
    CHECK_THROWS_AS(parse_config(j, base), ConfigError);
    j["problems"][0]["mesh"] = 33;
    CHECK_NOTHROW(parse_config(j, base));

    j = minimal_cfg();
    j["problems"][0]["matrix"] = "no_such_file.mtx";
    CHECK_THROWS_AS(parse_config(j, base), ConfigError);
  }

  SUBCASE("solvers") {
    json j = minimal_cfg();
    j.erase("solvers");
    CHECK_THROWS_AS(parse_config(j, base), ConfigError);

    j = minimal_cfg();
    j["solvers"] = json::array();
    CHECK_THROWS_AS(parse_config(j, base), ConfigError);

    j = minimal_cfg();
    j["solvers"][0] = "bfgs";
    CHECK_THROWS_AS(parse_config(j, base), ConfigError);

    j = minimal_cfg();
    j["solvers"][0] = 5;
    CHECK_THROWS_AS(parse_config(j, base), ConfigError);

    j = minimal_cfg();
    j["solvers"][0] = {{"name", "gbb"}, {"options", {{"stepsize", 1.0}}}};
    CHECK_THROWS_AS(parse_config(j, base), ConfigError);

    j = minimal_cfg();
    j["solvers"][0] = {{"name", "gbb"}, {"options", {{"bb_alternation", "zigzag"}}}};
    CHECK_THROWS_AS(parse_config(j, base), ConfigError);

    j = minimal_cfg();
    j["solvers"][0] = {{"name", "gbb"}, {"options", {{"grad_tol", "tiny"}}}};
    CHECK_THROWS_AS(parse_config(j, base), ConfigError);

    j = minimal_cfg();
    j["solvers"][0] = {{"name", "gbb"}, {"options", {{"max_outer", 2.5}}}};
    CHECK_THROWS_AS(parse_config(j, base), ConfigError);

    // Options are applied, then validated as a whole.
    j = minimal_cfg();
    j["solvers"][0] = {{"name", "arnt"}, {"options", {{"eta1", 0.9}, {"eta2", 0.1}}}};
    CHECK_THROWS_AS(parse_config(j, base), ConfigError);
  }

  SUBCASE("top level") {
    json j = minimal_cfg();
    j["repetitions"] = 0;
    CHECK_THROWS_AS(parse_config(j, base), ConfigError);
  }
}

TEST_CASE("config parsing applies per-family defaults and options") {
  json j = json::parse(R"({
    "seed": 11,
    "repetitions": 2,
    "output_dir": "somewhere",
    "trace": true,
    "problems": [{"kind": "rayleigh", "n": 20, "name": "ray"}],
    "solvers": [
      "gbb",
      {"name": "arnt", "options": {"grad_tol": 1e-8, "bb_alternation": "long"}},
      {"name": "adagrad", "options": {"lr": 0.05, "eps_div": 1e-6}}
    ]
  })");
  BenchConfig cfg = parse_config(j, ".");
  CHECK(cfg.seed == 11);
  CHECK(cfg.repetitions == 2);
  CHECK(cfg.output_dir == "somewhere");
  CHECK(cfg.trace);
  REQUIRE(cfg.problems.size() == 1);
  CHECK(cfg.problems[0].name == "ray");
  REQUIRE(cfg.solvers.size() == 3);
  CHECK(cfg.solvers[0].opts.max_outer == 10000);
  CHECK(cfg.solvers[1].opts.max_outer == 500);
  CHECK(cfg.solvers[1].opts.grad_tol == 1e-8);
  CHECK(cfg.solvers[1].opts.bb_alternation == BbAlternation::kLong);
  CHECK(cfg.solvers[2].adagrad_lr == 0.05);
  CHECK(cfg.solvers[2].adagrad_eps == 1e-6);
}

TEST_CASE("load_config reports unreadable or unparsable files") {
  CHECK_THROWS_AS(load_config("/no/such/config.json"), ConfigError);
  fs::path p = write_temp("riemopt_bad_config.json", "{ not json");
  CHECK_THROWS_AS(load_config(p.string()), ConfigError);
}

TEST_CASE("problem construction is seeded deterministically") {
  json j = minimal_cfg();
  j["problems"][0]["name"] = "ray";
  BenchConfig cfg = parse_config(j, ".");

  BuiltProblem a = build_problem(cfg.problems[0], 7, 0);
  BuiltProblem b = build_problem(cfg.problems[0], 7, 0);
  BuiltProblem c = build_problem(cfg.problems[0], 7, 1);
  CHECK(a.x0 == b.x0);
  CHECK(a.x0 != c.x0);
  CHECK(a.manifold->rows() == 20);
  CHECK(a.manifold->cols() == 1);
  CHECK(a.x0.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("matrix-backed operators load through the config") {
  fs::path mtx = write_temp("riemopt_diag3.mtx",
                            "%%MatrixMarket matrix coordinate real symmetric\n"
                            "3 3 3\n1 1 1.0\n2 2 2.0\n3 3 3.0\n");
  json j = minimal_cfg();
  j["problems"][0] = {{"kind", "rayleigh"}, {"n", 3}, {"matrix", mtx.filename().string()}};
  BenchConfig cfg = parse_config(j, mtx.parent_path().string());
  BuiltProblem bp = build_problem(cfg.problems[0], 0, 0);
  DenseMat e1 = DenseMat::Zero(3, 1);
  e1(0, 0) = 1.0;
  CHECK(bp.objective->eval(e1) == doctest::Approx(0.5).epsilon(1e-15));

  // Shape mismatch against the declared n is caught at build time.
  j["problems"][0]["n"] = 5;
  BenchConfig wrong = parse_config(j, mtx.parent_path().string());
  CHECK_THROWS_AS(build_problem(wrong.problems[0], 0, 0), ConfigError);
}

TEST_CASE("csv fields are escaped per RFC 4180") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_escape("two\nlines") == "\"two\nlines\"");
}

TEST_CASE("results tables render csv and markdown") {
  ResultRow r;
  r.problem = "a,b";
  r.solver = "gbb";
  r.outer_its = 3;
  r.mean_inner_its = 0.0;
  r.f = 0.5;
  r.nrmG = 0.25;
  r.time_s = 1.5;
  r.status = "Converged";

  const std::string csv = results_csv({r});
  CHECK(csv ==
        "problem,solver,outer_its,mean_inner_its,f,nrmG,time_s,status\r\n"
        "\"a,b\",gbb,3,0.00,0.5,0.25,1.5,Converged\r\n");

  const std::string md = markdown_from_csv(csv);
  CHECK(md ==
        "| problem | solver | its | f | nrmG | time (s) | status |\n"
        "| --- | --- | --- | --- | --- | --- | --- |\n"
        "| a,b | gbb | 3 | 0.5 | 0.25 | 1.5 | Converged |\n");

  // Inner iteration counts only show up for solvers that have them.
  r.solver = "arnt";
  r.mean_inner_its = 2.5;
  CHECK(results_markdown({r}).find("| 3 (2.50) |") != std::string::npos);

  CHECK_THROWS_AS(markdown_from_csv("problem,solver\r\nx,y,z\r\n"), std::runtime_error);
}

TEST_CASE("trace serialization carries exactly the fields a solver produced") {
  SolverReport rep;
  rep.status = SolveStatus::Converged;
  rep.start_hash = 42;
  rep.warm_start_iters = 7;
  rep.initial_f = 2.0;
  rep.initial_grad_norm = 1.0;

  SUBCASE("gradient-style trace") {
    TraceRecord t;
    t.k = 0;
    t.f = 1.5;
    t.grad_norm = 0.5;
    t.step = 0.25;
    t.nm_C = 2.0;
    t.nm_Q = 1.85;
    rep.trace.push_back(t);

    const std::string text = trace_jsonl("ray", "gbb", rep);
    std::istringstream in(text);
    std::string line;
    REQUIRE(std::getline(in, line));
    json meta = json::parse(line);
    CHECK(meta["type"] == "meta");
    CHECK(meta["problem"] == "ray");
    CHECK(meta["solver"] == "gbb");
    CHECK(meta["status"] == "Converged");
    CHECK(meta["start_hash"] == 42);
    CHECK(meta["warm_start_iters"] == 7);
    CHECK(meta["initial_f"] == 2.0);

    REQUIRE(std::getline(in, line));
    json it = json::parse(line);
    CHECK(it["type"] == "iter");
    CHECK(it["k"] == 0);
    CHECK(it["step"] == 0.25);
    CHECK(it["C"] == 2.0);
    CHECK(it["Q"] == 1.85);
    CHECK_FALSE(it.contains("sigma"));
    CHECK_FALSE(it.contains("radius"));
    CHECK_FALSE(it.contains("rho"));

    const std::string plot = plot_data_from_jsonl(text);
    CHECK(plot == "k,f,nrmG,step\r\n0,1.5,0.5,0.25\r\n");
  }

  SUBCASE("newton-style trace with a rejected step") {
    TraceRecord t;
    t.k = 0;
    t.f = 1.5;
    t.grad_norm = 0.5;
    t.sigma_hat = 10.0;
    t.sigma = 10.0;
    t.rho = kNaN;  // model value was not finite
    t.accepted = false;
    t.inner_iters = 4;
    rep.trace.push_back(t);

    const std::string text = trace_jsonl("ray", "arnt", rep);
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    REQUIRE(std::getline(in, line));
    json it = json::parse(line);
    CHECK(it["sigma_hat"] == 10.0);
    CHECK(it["rho"].is_null());
    CHECK(it["accepted"] == false);
    CHECK(it["inner_its"] == 4);
    CHECK(it["neg_curv"] == false);
    CHECK_FALSE(it.contains("step"));

    CHECK(plot_data_from_jsonl(text) == "k,f,nrmG,sigma\r\n0,1.5,0.5,10\r\n");
  }

  SUBCASE("mixed columns leave gaps where a record has no value") {
    TraceRecord a;
    a.k = 0;
    a.f = 1.0;
    a.grad_norm = 0.5;
    a.step = 0.25;
    TraceRecord b;
    b.k = 1;
    b.f = 0.5;
    b.grad_norm = 0.25;
    b.radius = 2.0;
    rep.trace = {a, b};

    const std::string plot = plot_data_from_jsonl(trace_jsonl("p", "s", rep));
    CHECK(plot ==
          "k,f,nrmG,step,radius\r\n"
          "0,1,0.5,0.25,\r\n"
          "1,0.5,0.25,,2\r\n");
  }
}

TEST_CASE("benchmark runs are deterministic and keep going past solver failures") {
  const fs::path out_a = fs::temp_directory_path() / "riemopt_bench_a";
  const fs::path out_b = fs::temp_directory_path() / "riemopt_bench_b";
  fs::remove_all(out_a);
  fs::remove_all(out_b);

  json j = json::parse(R"({
    "seed": 3,
    "trace": true,
    "problems": [{"kind": "rayleigh", "n": 12, "name": "ray"}],
    "solvers": ["gbb", "arnt"]
  })");

  j["output_dir"] = out_a.string();
  BenchConfig cfg_a = parse_config(j, ".");
  std::vector<ResultRow> rows_a;
  REQUIRE(run_bench(cfg_a, 2, &rows_a) == 0);

  j["output_dir"] = out_b.string();
  BenchConfig cfg_b = parse_config(j, ".");
  std::vector<ResultRow> rows_b;
  REQUIRE(run_bench(cfg_b, 2, &rows_b) == 0);

  REQUIRE(rows_a.size() == 2);
  REQUIRE(rows_b.size() == 2);
  CHECK(rows_a[0].solver == "gbb");
  CHECK(rows_a[1].solver == "arnt");
  for (size_t i = 0; i < rows_a.size(); ++i) {
    CHECK(rows_a[i].problem == "ray");
    CHECK(rows_a[i].outer_its == rows_b[i].outer_its);
    CHECK(rows_a[i].f == rows_b[i].f);
    CHECK(rows_a[i].nrmG == rows_b[i].nrmG);
    CHECK(rows_a[i].status == "Converged");
  }

  CHECK(fs::exists(out_a / "results.csv"));
  CHECK(fs::exists(out_a / "results.md"));
  // Traces contain no wall-clock data, so reruns must match byte for byte.
  for (const char* name : {"ray__gbb.jsonl", "ray__arnt.jsonl"}) {
    const std::string ta = slurp(out_a / "traces" / name);
    REQUIRE(!ta.empty());
    CHECK(ta == slurp(out_b / "traces" / name));
  }

  SUBCASE("a solver that throws becomes an error row, not a crash") {
    json bad = j;
    bad["output_dir"] = (fs::temp_directory_path() / "riemopt_bench_err").string();
    bad["solvers"] = json::array({json{{"name", "adagrad"}, {"options", {{"lr", -1.0}}}}});
    BenchConfig cfg = parse_config(bad, ".");
    std::vector<ResultRow> rows;
    CHECK(run_bench(cfg, 1, &rows) == 0);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].status.rfind("Error:", 0) == 0);
    CHECK(std::isnan(rows[0].f));
  }
}
