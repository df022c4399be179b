#pragma once

#include <stdexcept>
#include <string>

namespace featmap {

/// Invalid input: malformed feature, model, scenario or option.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The finite element analysis could not produce a trustworthy state.
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A derivative was requested from a configuration that has none.
class NotDifferentiableError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace featmap
