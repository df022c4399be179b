#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "featmap/parallel.hpp"
#include "featmap/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Feature-mapping analysis, sensitivities and benchmarks on fixed grids"};
  app.require_subcommand(1);
  app.set_version_flag("--version", FEATMAP_VERSION);

  std::string scenario;
  std::string out = "featmap-out";
  std::vector<std::string> overrides;
  int threads = 0;

  auto* run = app.add_subcommand("run", "Run the study declared in a scenario file");
  run->add_option("scenario", scenario, "Scenario YAML file")->required();
  run->add_option("--out", out, "Output directory");
  run->add_option("--override", overrides, "Replace a scenario value, e.g. model.boundary.kind=tanh")
      ->take_all();
  run->add_option("--threads", threads, "Worker threads (default: FEATMAP_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);

  auto* verify = app.add_subcommand("verify", "Compare analytic gradients of a scenario with finite differences");
  verify->add_option("scenario", scenario, "Scenario YAML file")->required();
  verify->add_option("--out", out, "Output directory");
  verify->add_option("--override", overrides, "Replace a scenario value")->take_all();
  verify->add_option("--threads", threads, "Worker threads")->check(CLI::NonNegativeNumber);

  std::string bench_name, preset;
  auto* bench = app.add_subcommand("bench", "Run a built-in benchmark study");
  bench->add_option("name", bench_name, "hshape, threebar or localmin")
      ->required()
      ->check(CLI::IsMember({"hshape", "threebar", "localmin"}));
  bench->add_option("--preset", preset, "Benchmark preset");
  bench->add_option("--out", out, "Output directory");
  bench->add_option("--threads", threads, "Worker threads")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : featmap::kExitValidation;
  }

  if (threads > 0) featmap::set_default_threads(threads);

  if (*bench) {
    featmap::BenchOptions opt;
    opt.preset = preset;
    opt.out = out;
    opt.threads = threads;
    return featmap::run_bench(bench_name, opt, std::cout, std::cerr);
  }
  featmap::RunOptions opt;
  opt.out = out;
  opt.overrides = overrides;
  opt.threads = threads;
  if (*verify) opt.study = featmap::StudyKind::verify;
  return featmap::run_scenario(scenario, opt, std::cout, std::cerr);
}
