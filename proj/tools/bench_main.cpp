// Command line driver: run benchmark configs, verify problem oracles, and
// reformat result/trace files.
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "riemopt/bench.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riemannian solver benchmark harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir, csv_path, jsonl_path;
  int jobs = 1;
  bool trace = false;

  auto* run = app.add_subcommand("run", "run all problem/solver pairs from a config");
  run->add_option("config", config_path, "JSON config file")->required();
  run->add_option("--out", out_dir, "output directory (overrides config)");
  run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--trace", trace, "write per-iteration JSONL traces");

  auto* check = app.add_subcommand("check", "finite-difference oracle checks for each problem");
  check->add_option("config", config_path, "JSON config file")->required();

  auto* table = app.add_subcommand("table", "render a results.csv as a Markdown table");
  table->add_option("csv", csv_path, "results.csv produced by `bench run`")->required();

  auto* plot = app.add_subcommand("plot", "extract per-iteration plot columns from a trace");
  plot->add_option("trace", jsonl_path, "trace .jsonl produced by `bench run --trace`")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      riemopt::bench::BenchConfig cfg = riemopt::bench::load_config(config_path);
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      cfg.trace = cfg.trace || trace;
      const int rc = riemopt::bench::run_bench(cfg, jobs);
      if (rc == 0)
        std::cout << "wrote " << cfg.output_dir << "/results.csv and results.md\n";
      return rc;
    }
    if (check->parsed()) {
      riemopt::bench::BenchConfig cfg = riemopt::bench::load_config(config_path);
      return riemopt::bench::run_check(cfg);
    }
    if (table->parsed()) {
      std::cout << riemopt::bench::markdown_from_csv(slurp(csv_path));
      return 0;
    }
    if (plot->parsed()) {
      std::cout << riemopt::bench::plot_data_from_jsonl(slurp(jsonl_path));
      return 0;
    }
  } catch (const riemopt::bench::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
