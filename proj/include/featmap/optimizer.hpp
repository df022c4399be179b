#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace featmap {

struct OptimizerOptions {
  int max_iterations = 300;
  /// Largest step per iteration as a fraction of each parameter's range.
  double move_limit = 0.02;
  double min_move = 1e-6;
  double shrink = 0.5;
  double grow = 1.2;
  /// Converged when the largest step (fraction of range) falls below this
  /// while the constraints hold to constraint_tol.
  double design_tol = 1e-3;
  double kkt_tol = 1e-6;
  double constraint_tol = 1e-3;
  /// Upper bound of the subproblem multipliers; beyond it the linearized
  /// constraints are treated as an elastic penalty.
  double max_multiplier = 1e4;
  int max_retries = 8;

  void validate() const;
};

struct ProblemEval {
  double objective = 0.0;
  std::vector<double> grad;
  std::vector<double> constraints;               // value <= 0 is feasible
  std::vector<std::vector<double>> constraint_grads;
};

using ProblemFunction = std::function<ProblemEval(std::span<const double>)>;

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;
  double max_constraint = 0.0;
  double grad_norm = 0.0;
  std::vector<double> design;
};

struct History {
  std::vector<IterationRecord> records;
  bool converged = false;
  bool failed = false;
  std::string message;
};

struct StepResult {
  std::vector<double> x;
  std::vector<double> multipliers;
  /// False when some linearized constraint could not be met inside the
  /// move limits (the multiplier reached its cap).
  bool linear_feasible = true;
};

/// One move-limited linearized step: minimizes g.d + 1/2 sum c_i d_i^2
/// subject to the linearized constraints, |d_i| <= move_i and the bounds,
/// via dual coordinate ascent. c_i = max|g| / move_i.
StepResult step(std::span<const double> x, std::span<const double> grad, std::span<const double> constraints,
                const std::vector<std::vector<double>>& constraint_grads, std::span<const double> lower,
                std::span<const double> upper, std::span<const double> move, const OptimizerOptions& options);

struct OptimizeResult {
  std::vector<double> x;
  ProblemEval final;
  History history;
};

OptimizeResult optimize(const ProblemFunction& problem, std::span<const double> x0, std::span<const double> lower,
                        std::span<const double> upper, const OptimizerOptions& options);

}  // namespace featmap
