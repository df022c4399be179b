#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "featmap/scenario.hpp"

namespace featmap {

enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,  // I/O and other unexpected failures
  kExitValidation = 2,
  kExitAnalysis = 3,
  kExitGradient = 4,
};

struct RunOptions {
  std::filesystem::path out = "featmap-out";
  std::vector<std::string> overrides;
  int threads = 0;  // 0: FEATMAP_THREADS or the hardware concurrency
  std::optional<StudyKind> study;  // replaces the scenario's study kind
};

/// Loads, validates and runs a scenario, writing CSV/PGM outputs and
/// manifest.json into options.out. Returns an ExitCode.
int run_scenario(const std::filesystem::path& scenario, const RunOptions& options, std::ostream& log,
                 std::ostream& err);

/// Runs an already parsed scenario (path is echoed in the manifest only).
int run_study(const Scenario& scenario, const std::filesystem::path& source, const RunOptions& options,
              std::ostream& log, std::ostream& err);

struct BenchOptions {
  std::string preset;  // empty selects the first preset
  std::filesystem::path out = "featmap-out";
  int threads = 0;
};

/// Names accepted by run_bench and their presets.
std::vector<std::string> bench_names();
std::vector<std::string> bench_presets(std::string_view name);

int run_bench(std::string_view name, const BenchOptions& options, std::ostream& log, std::ostream& err);

}  // namespace featmap
