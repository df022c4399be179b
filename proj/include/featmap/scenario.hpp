#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "featmap/constraints.hpp"
#include "featmap/optimizer.hpp"
#include "featmap/pipeline.hpp"
#include "featmap/sensitivity.hpp"

namespace featmap {

enum class StudyKind { map_only, sweep, optimize, verify };

std::string_view study_kind_name(StudyKind kind);
std::optional<StudyKind> parse_study_kind(std::string_view name);

struct Study {
  StudyKind kind = StudyKind::map_only;
  // sweep: design parameter index and sampled range (inclusive)
  int parameter = 0;
  double from = 0.0;
  double to = 0.0;
  int samples = 11;
  OptimizerOptions optimizer;
  FdOptions fd;
  double fd_step = 1e-4;  // relative to each parameter's natural scale
};

struct Scenario {
  std::string name;
  Model model;
  std::vector<ConstraintSpec> constraints;
  Study study;
  /// The document after overrides, re-emitted as YAML.
  std::string resolved;
};

/// Parses a scenario document. Overrides are `dotted.key=value` strings
/// applied before validation; list entries are addressed by index
/// (`features.1.half_width=2`). Errors are ValidationErrors of the form
/// `origin:line:column: key: message`.
Scenario parse_scenario(std::string_view text, std::span<const std::string> overrides = {},
                        std::string_view origin = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path, std::span<const std::string> overrides = {});

}  // namespace featmap
