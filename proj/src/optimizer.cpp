#include "featmap/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "featmap/errors.hpp"

namespace featmap {

void OptimizerOptions::validate() const {
  if (max_iterations < 0) throw ValidationError("max_iterations must be nonnegative");
  if (!(move_limit > 0.0 && move_limit <= 0.5)) throw ValidationError("move limit must lie in (0, 0.5]");
  if (!(min_move > 0.0 && min_move <= move_limit)) throw ValidationError("min_move must lie in (0, move_limit]");
  if (!(design_tol > 0.0) || !(kkt_tol > 0.0) || !(constraint_tol > 0.0))
    throw ValidationError("optimizer tolerances must be positive");
  if (!(shrink > 0.0 && shrink < 1.0) || !(grow >= 1.0)) throw ValidationError("invalid move limit adaptation factors");
  if (!(max_multiplier > 0.0)) throw ValidationError("max_multiplier must be positive");
}

StepResult step(std::span<const double> x, std::span<const double> g, std::span<const double> c,
                const std::vector<std::vector<double>>& a, std::span<const double> lower,
                std::span<const double> upper, std::span<const double> move, const OptimizerOptions& opt) {
  const std::size_t n = x.size();
  const std::size_t m = c.size();
  if (g.size() != n || lower.size() != n || upper.size() != n || move.size() != n || a.size() != m)
    throw ValidationError("step inputs have inconsistent sizes");
  double gmax = 0.0;
  for (double v : g) gmax = std::max(gmax, std::abs(v));
  gmax = std::max(gmax, 1e-30);
  std::vector<double> lo(n), hi(n), curv(n);
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = std::max(-move[i], lower[i] - x[i]);
    hi[i] = std::min(move[i], upper[i] - x[i]);
    if (lo[i] > hi[i]) lo[i] = hi[i] = std::clamp(0.0, lower[i] - x[i], upper[i] - x[i]);
    curv[i] = gmax / std::max(move[i], 1e-300);
  }
  std::vector<double> lambda(m, 0.0), r(n), d(n);
  auto primal = [&]() {
    for (std::size_t i = 0; i < n; ++i) {
      double s = g[i];
      for (std::size_t j = 0; j < m; ++j) s += lambda[j] * a[j][i];
      r[i] = s;
      d[i] = std::clamp(-s / curv[i], lo[i], hi[i]);
    }
  };
  auto slope = [&](std::size_t j) {
    primal();
    double s = c[j];
    for (std::size_t i = 0; i < n; ++i) s += a[j][i] * d[i];
    return s;
  };
  StepResult out;
  const double cap = opt.max_multiplier;
  for (int sweep = 0; sweep < (m > 1 ? 200 : 1); ++sweep) {
    double change = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      double old = lambda[j];
      lambda[j] = 0.0;
      if (slope(j) <= 0.0) {
        change = std::max(change, std::abs(old));
        continue;
      }
      lambda[j] = cap;
      if (slope(j) > 0.0) {
        change = std::max(change, std::abs(cap - old));
        continue;
      }
      double l = 0.0, h = cap;
      for (int it = 0; it < 200 && h - l > 1e-15 * (1.0 + h); ++it) {
        lambda[j] = 0.5 * (l + h);
        if (slope(j) > 0.0) l = lambda[j];
        else h = lambda[j];
      }
      lambda[j] = h;
      change = std::max(change, std::abs(lambda[j] - old));
    }
    if (change <= 1e-12 * (1.0 + cap)) break;
  }
  primal();
  out.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.x[i] = std::clamp(x[i] + d[i], lower[i], upper[i]);
  out.multipliers = lambda;
  for (std::size_t j = 0; j < m; ++j) {
    double lin = c[j];
    for (std::size_t i = 0; i < n; ++i) lin += a[j][i] * d[i];
    if (lambda[j] >= cap && lin > 1e-12) out.linear_feasible = false;
  }
  return out;
}

namespace {

double max_constraint(const ProblemEval& e) {
  double m = e.constraints.empty() ? 0.0 : -std::numeric_limits<double>::infinity();
  for (double c : e.constraints) m = std::max(m, c);
  return m;
}

double violation(const ProblemEval& e) {
  double v = 0.0;
  for (double c : e.constraints) v += std::max(0.0, c);
  return v;
}

IterationRecord record(int iter, const ProblemEval& e, std::span<const double> x) {
  IterationRecord r;
  r.iter = iter;
  r.objective = e.objective;
  r.max_constraint = max_constraint(e);
  double g2 = 0.0;
  for (double v : e.grad) g2 += v * v;
  r.grad_norm = std::sqrt(g2);
  r.design.assign(x.begin(), x.end());
  return r;
}

void check_eval(const ProblemEval& e, std::size_t n) {
  if (e.grad.size() != n) throw ValidationError("objective gradient length must equal the design length");
  if (e.constraint_grads.size() != e.constraints.size())
    throw ValidationError("one gradient per constraint is required");
  for (const auto& g : e.constraint_grads)
    if (g.size() != n) throw ValidationError("constraint gradient length must equal the design length");
  if (!std::isfinite(e.objective)) throw AnalysisError("objective is not finite");
  for (double v : e.grad)
    if (!std::isfinite(v)) throw AnalysisError("objective gradient is not finite");
}

}  // namespace

OptimizeResult optimize(const ProblemFunction& problem, std::span<const double> x0, std::span<const double> lower,
                        std::span<const double> upper, const OptimizerOptions& opt) {
  opt.validate();
  const std::size_t n = x0.size();
  if (lower.size() != n || upper.size() != n) throw ValidationError("bounds must match the design length");
  OptimizeResult res;
  res.x.resize(n);
  std::vector<double> range(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(lower[i] < upper[i])) throw ValidationError("each design parameter needs lower < upper");
    res.x[i] = std::clamp(x0[i], lower[i], upper[i]);
    range[i] = upper[i] - lower[i];
  }
  History& hist = res.history;
  try {
    res.final = problem(res.x);
    check_eval(res.final, n);
  } catch (const AnalysisError& err) {
    hist.failed = true;
    hist.message = std::string("analysis failed at the initial design: ") + err.what();
    return res;
  }
  hist.records.push_back(record(0, res.final, res.x));
  const double fscale = 1.0 / std::max(std::abs(res.final.objective), 1e-300);
  std::vector<double> frac(n, opt.move_limit), prev_d(n, 0.0), move(n), gs(n);
  double mu = 10.0;
  auto merit = [&](const ProblemEval& e) { return e.objective * fscale + mu * violation(e); };

  for (int it = 1; it <= opt.max_iterations; ++it) {
    const ProblemEval& cur = res.final;
    for (std::size_t i = 0; i < n; ++i) gs[i] = cur.grad[i] * fscale;
    bool accepted = false;
    StepResult sr;
    ProblemEval next;
    std::string failure;
    bool last_failed = false;
    for (int retry = 0; retry <= opt.max_retries && !accepted; ++retry) {
      for (std::size_t i = 0; i < n; ++i) move[i] = frac[i] * range[i];
      sr = step(res.x, gs, cur.constraints, cur.constraint_grads, lower, upper, move, opt);
      double lmax = 0.0;
      for (double l : sr.multipliers) lmax = std::max(lmax, l);
      mu = std::max(mu, 2.0 * lmax);
      double before = merit(cur);
      try {
        next = problem(sr.x);
        check_eval(next, n);
      } catch (const AnalysisError& err) {
        failure = err.what();
        last_failed = true;
        for (auto& f : frac) f = std::max(opt.min_move, f * opt.shrink);
        continue;
      }
      last_failed = false;
      double after = merit(next);
      if (after <= before + 1e-12 * std::abs(before)) {
        accepted = true;
      } else {
        for (auto& f : frac) f = std::max(opt.min_move, f * opt.shrink);
      }
    }
    if (!accepted) {
      if (last_failed) {
        hist.failed = true;
        hist.message = "analysis failed during the line search: " + failure;
      } else {
        hist.converged = max_constraint(cur) <= opt.constraint_tol;
        hist.message = "no merit decrease within the move limit retries";
      }
      break;
    }
    double dx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = sr.x[i] - res.x[i];
      dx = std::max(dx, std::abs(d) / range[i]);
      if (d * prev_d[i] < 0.0) frac[i] = std::max(opt.min_move, frac[i] * opt.shrink);
      else frac[i] = std::min(opt.move_limit, frac[i] * opt.grow);
      if (d != 0.0) prev_d[i] = d;
    }
    res.x = sr.x;
    res.final = std::move(next);
    hist.records.push_back(record(it, res.final, res.x));

    // projected Lagrangian gradient, scaled by parameter range
    double kkt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = res.final.grad[i] * fscale;
      for (std::size_t j = 0; j < sr.multipliers.size(); ++j) r += sr.multipliers[j] * res.final.constraint_grads[j][i];
      if (res.x[i] <= lower[i] && r > 0.0) r = 0.0;
      if (res.x[i] >= upper[i] && r < 0.0) r = 0.0;
      kkt = std::max(kkt, std::abs(r) * range[i]);
    }
    bool feasible = max_constraint(res.final) <= opt.constraint_tol;
    if (feasible && (dx < opt.design_tol || kkt < opt.kkt_tol)) {
      hist.converged = true;
      hist.message = dx < opt.design_tol ? "design change below tolerance" : "KKT residual below tolerance";
      break;
    }
  }
  if (hist.message.empty()) hist.message = "iteration limit reached";
  return res;
}

}  // namespace featmap
