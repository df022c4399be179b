#include "featmap/run.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "featmap/bench.hpp"
#include "featmap/errors.hpp"
#include "featmap/io.hpp"
#include "featmap/parallel.hpp"

namespace featmap {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

json versions() {
  return {{"featmap", FEATMAP_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"yaml-cpp", FEATMAP_YAML_CPP_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__}};
}

void write_manifest(const fs::path& dir, json manifest, Clock::time_point start) {
  manifest["versions"] = versions();
  manifest["wall_time_s"] = std::chrono::duration<double>(Clock::now() - start).count();
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

json design_json(const Model& m, std::span<const double> s) {
  json d = json::array();
  for (std::size_t i = 0; i < s.size(); ++i)
    d.push_back({{"column", "s_" + std::to_string(i + 1)}, {"param", m.design.label(i, m.features)}, {"value", s[i]}});
  return d;
}

double volume_fraction(const Grid& g, std::span<const double> rho) {
  double v = 0.0;
  for (double r : rho) v += r;
  return v / g.num_elements();
}

void write_density(const fs::path& dir, const std::string& stem, const Grid& g, std::span<const double> rho,
                   json& outputs) {
  write_density_csv(dir / (stem + ".csv"), g, rho);
  write_density_pgm(dir / (stem + ".pgm"), g, rho);
  outputs[stem + ".csv"] = "element densities; columns ex,ey,rho";
  outputs[stem + ".pgm"] = "element densities as P5 greyscale, top row first, pixel = round(255 rho)";
}

int study_map_only(const Scenario& sc, const fs::path& dir, json& results, json& outputs, int threads) {
  const Model& m = sc.model;
  DensityField f = map_features(m.features, m.grid, m.mapping, false, threads);
  apply_passive(f, m.passive, m.mapping.boundary.rho_min);
  write_density(dir, "density", m.grid, f.rho, outputs);
  results["volume_fraction"] = volume_fraction(m.grid, f.rho);
  results["overshoot_elements"] = f.overshoot;
  return kExitOk;
}

int study_sweep(const Scenario& sc, const fs::path& dir, json& results, json& outputs, int threads) {
  const Model& m = sc.model;
  auto values = linspace(sc.study.from, sc.study.to, sc.study.samples);
  auto evs = sweep_evaluations(m, sc.study.parameter, values, threads);
  CsvWriter w(dir / "sweep.csv", {"s", "J", "V", "grayness"});
  for (std::size_t i = 0; i < values.size(); ++i) {
    double row[] = {values[i], evs[i].compliance, evs[i].volume, total_grayness(evs[i].mu)};
    w.row(row);
  }
  w.close();
  outputs["sweep.csv"] = "one row per sample; s is the swept parameter, J the compliance, V the material volume, "
                         "grayness the sum of 4 mu (1 - mu) over elements";
  results["param"] = m.design.label(sc.study.parameter, m.features);
  results["samples"] = values.size();
  Pipeline p(m, threads);
  write_density(dir, "density", m.grid, p.density(p.initial_design(), false).rho, outputs);
  return kExitOk;
}

int study_optimize(const Scenario& sc, const fs::path& dir, json& results, json& outputs, int threads,
                   std::ostream& log) {
  const Model& m = sc.model;
  if (!m.mapping.boundary.differentiable())
    throw ValidationError("model.boundary.kind: optimization needs a differentiable boundary model, not exact");
  Pipeline pipe(m, threads);
  ProblemFunction problem = [&](std::span<const double> x) {
    Evaluation ev = pipe.evaluate(x, true);
    auto cons = evaluate_constraints(sc.constraints, m, ev, true, threads);
    ProblemEval pe;
    pe.objective = ev.compliance;
    pe.grad = ev.compliance_grad;
    for (auto& c : cons) {
      pe.constraints.push_back(c.value);
      pe.constraint_grads.push_back(std::move(c.grad));
    }
    return pe;
  };
  auto x0 = pipe.initial_design();
  auto res = optimize(problem, x0, pipe.lower(), pipe.upper(), sc.study.optimizer);
  write_history_csv(dir / "history.csv", res.history);
  outputs["history.csv"] = "one row per accepted iterate; columns iter,objective,max_constraint,grad_norm,s_1..s_n "
                           "(see design for the s_i labels)";
  write_density(dir, "density", m.grid, pipe.density(x0, false).rho, outputs);
  if (!res.history.failed) write_density(dir, "density_final", m.grid, pipe.density(res.x, false).rho, outputs);
  const auto& recs = res.history.records;
  results["converged"] = res.history.converged;
  results["failed"] = res.history.failed;
  results["message"] = res.history.message;
  results["iterations"] = recs.empty() ? 0 : recs.back().iter;
  if (!recs.empty()) {
    results["initial_objective"] = recs.front().objective;
    results["final_objective"] = recs.back().objective;
    results["final_max_constraint"] = recs.back().max_constraint;
  }
  results["design"] = design_json(m, res.x);
  log << "optimize: " << res.history.message << " after " << (recs.empty() ? 0 : recs.back().iter)
      << " iterations\n";
  return res.history.failed ? kExitAnalysis : kExitOk;
}

int study_verify(const Scenario& sc, const fs::path& dir, json& results, json& outputs, int threads,
                 std::ostream& log) {
  const Model& m = sc.model;
  Pipeline pipe(m, threads);
  auto s = pipe.initial_design();
  auto steps = pipe.fd_steps(sc.study.fd_step);
  auto labels = pipe.labels();
  auto lower = pipe.lower(), upper = pipe.upper();
  FdOptions fd = sc.study.fd;
  fd.threads = 1;
  const bool smooth = m.mapping.boundary.differentiable();
  GradientReport rep;
  std::vector<double> analytic(s.size(), std::numeric_limits<double>::quiet_NaN());
  Evaluation ev;
  if (smooth) {
    ev = pipe.evaluate(s, true);
    analytic = ev.compliance_grad;
  }
  rep = fd_verify([&](std::span<const double> x) { return pipe.compliance(x); }, s, analytic, lower, upper, steps,
                  labels, fd);
  if (!smooth) {
    rep.differentiable = false;
    rep.note = "the exact Heaviside boundary has no shape derivative";
  } else if (ev.density.nondifferentiable > 0) {
    rep.note = std::to_string(ev.density.nondifferentiable) + " sample points sit on non-differentiable field points";
  }
  for (std::size_t k = 0; smooth && k < sc.constraints.size(); ++k) {
    std::span<const ConstraintSpec> one(&sc.constraints[k], 1);
    auto cv = evaluate_constraints(one, m, ev, true, threads);
    auto sub = fd_verify(
        [&](std::span<const double> x) {
          Evaluation e = pipe.evaluate(x, false);
          return evaluate_constraints(one, m, e, false, threads).front().value;
        },
        s, cv.front().grad, lower, upper, steps, labels, fd);
    for (auto& r : sub.rows) {
      r.param = cv.front().name + ":" + r.param;
      rep.rows.push_back(r);
    }
    if (!cv.front().differentiable) rep.differentiable = false;
  }
  write_gradient_csv(dir / "gradient.csv", rep);
  outputs["gradient.csv"] = "analytic vs central finite-difference gradient; columns param,analytic,fd,rel_err";
  const bool ok = rep.differentiable && rep.passed();
  results["passed"] = ok;
  results["differentiable"] = rep.differentiable;
  results["max_rel_err"] = rep.max_rel_err();
  results["tolerance"] = rep.tolerance;
  results["note"] = rep.note;
  json failing = json::array();
  for (const auto& r : rep.rows)
    if (!r.pass) failing.push_back(r.param);
  results["failing"] = failing;
  log << "verify: " << (ok ? "passed" : "FAILED") << ", max rel_err " << rep.max_rel_err() << "\n";
  return ok ? kExitOk : kExitGradient;
}

template <class F>
int guarded(F&& body, json& manifest, std::ostream& err) {
  auto record = [&](int code, const char* what) {
    manifest["status"] = "error";
    manifest["error"] = what;
    err << "featmap: error: " << what << "\n";
    return code;
  };
  try {
    int code = body();
    manifest["status"] = code == kExitOk ? "ok" : "failed";
    return code;
  } catch (const ValidationError& e) {
    return record(kExitValidation, e.what());
  } catch (const AnalysisError& e) {
    return record(kExitAnalysis, e.what());
  } catch (const NotDifferentiableError& e) {
    return record(kExitGradient, e.what());
  } catch (const std::exception& e) {
    return record(kExitError, e.what());
  }
}

}  // namespace

int run_study(const Scenario& sc, const fs::path& source, const RunOptions& opt, std::ostream& log,
              std::ostream& err) {
  const auto start = Clock::now();
  json manifest;
  json results = json::object(), outputs = json::object();
  const int threads = resolve_threads(opt.threads);
  manifest["command"] = "run";
  manifest["scenario"] = {{"path", source.string()}, {"name", sc.name}, {"overrides", opt.overrides},
                          {"resolved", sc.resolved}};
  manifest["study"] = study_kind_name(sc.study.kind);
  manifest["threads"] = threads;
  int code = guarded(
      [&] {
        fs::create_directories(opt.out);
        switch (sc.study.kind) {
          case StudyKind::map_only: return study_map_only(sc, opt.out, results, outputs, threads);
          case StudyKind::sweep: return study_sweep(sc, opt.out, results, outputs, threads);
          case StudyKind::optimize: return study_optimize(sc, opt.out, results, outputs, threads, log);
          case StudyKind::verify: return study_verify(sc, opt.out, results, outputs, threads, log);
        }
        return static_cast<int>(kExitError);
      },
      manifest, err);
  manifest["exit_code"] = code;
  manifest["results"] = results;
  manifest["outputs"] = outputs;
  try {
    write_manifest(opt.out, manifest, start);
  } catch (const std::exception& e) {
    err << "featmap: error: " << e.what() << "\n";
    return code == kExitOk ? kExitError : code;
  }
  return code;
}

int run_scenario(const fs::path& path, const RunOptions& opt, std::ostream& log, std::ostream& err) {
  Scenario sc;
  try {
    sc = load_scenario(path, opt.overrides);
    if (opt.study && *opt.study != sc.study.kind) {
      if (*opt.study != StudyKind::map_only && sc.model.design.size() == 0)
        throw ValidationError(path.string() + ": design: a " + std::string(study_kind_name(*opt.study)) +
                              " study needs a non-empty design list");
      sc.study.kind = *opt.study;
    }
  } catch (const ValidationError& e) {
    err << "featmap: error: " << e.what() << "\n";
    return kExitValidation;
  }
  return run_study(sc, path, opt, log, err);
}

// ---------------------------------------------------------------------------

namespace {

struct HShapeCase {
  std::string file;
  HShapeConfig config;
};

MaterialModel material_of(InterpolationKind kind) {
  MaterialModel m;
  m.kind = kind;
  return m;
}

std::vector<HShapeCase> hshape_cases(std::string_view preset, int threads) {
  std::vector<HShapeCase> out;
  auto base = [&] {
    HShapeConfig c;
    c.threads = threads;
    return c;
  };
  if (preset == "interpolation") {
    for (auto k : {InterpolationKind::linear, InterpolationKind::power, InterpolationKind::hs_bound,
                   InterpolationKind::ramp}) {
      HShapeConfig c = base();
      c.material = material_of(k);
      out.push_back({"hshape_" + std::string(interpolation_name(k)) + ".csv", c});
    }
  } else if (preset == "smoothing") {
    const BoundaryModel models[] = {{BoundaryKind::exact, 1.0, 6.5, 1e-6},
                                    {BoundaryKind::linear, 1.5, 6.5, 1e-6},
                                    {BoundaryKind::tanh, 1.0, 4.0 / 3.0, 1e-6}};
    for (const auto& b : models) {
      HShapeConfig c = base();
      c.boundary = b;
      c.material = material_of(InterpolationKind::linear);
      out.push_back({"hshape_" + std::string(boundary_kind_name(b.kind)) + ".csv", c});
    }
  } else if (preset == "quadrature") {
    struct Q {
      BoundaryKind kind;
      double h;
      int degree;
    };
    const Q qs[] = {{BoundaryKind::poly3, 0.5, 0}, {BoundaryKind::poly3, 1.0, 2}, {BoundaryKind::linear, 1.5, 0},
                    {BoundaryKind::linear, 1.5, 1}};
    for (const auto& q : qs) {
      HShapeConfig c = base();
      c.boundary = {q.kind, q.h, 6.5, 1e-6};
      c.quadrature = {QuadratureKind::newton_cotes, q.degree};
      c.material = material_of(InterpolationKind::linear);
      out.push_back({"hshape_" + std::string(boundary_kind_name(q.kind)) + "_h" + format_double(q.h) + "_deg" +
                         std::to_string(q.degree) + ".csv",
                     c});
    }
  }
  return out;
}

int bench_hshape(std::string_view preset, const BenchOptions& opt, json& results, json& outputs, std::ostream& log) {
  for (const auto& c : hshape_cases(preset, opt.threads)) {
    auto rows = run_hshape_sweep(c.config);
    write_hshape_csv(opt.out / c.file, rows);
    outputs[c.file] = "columns s,J,grayness_left,grayness_right,V; boundary " +
                      std::string(boundary_kind_name(c.config.boundary.kind)) + ", interpolation " +
                      std::string(interpolation_name(c.config.material.kind));
    results[c.file] = {{"rows", rows.size()}};
    log << "hshape: wrote " << c.file << "\n";
  }
  return kExitOk;
}

int bench_threebar(const BenchOptions& opt, json& results, json& outputs, std::ostream& log) {
  ThreeBarConfig c;
  c.threads = opt.threads;
  auto panels = run_threebar_demo(c);
  Grid g{c.n, c.n, 1.0, {0.0, 0.0}};
  write_panels(opt.out, g, panels);
  json names = json::array();
  for (const auto& p : panels) {
    names.push_back(p.name);
    outputs[p.name + ".csv"] = "per element value at the centroid or element density; columns ex,ey,value";
    outputs[p.name + ".pgm"] = p.density ? "density, pixel = round(255 value)"
                                         : "field scaled linearly from its min..max to 0..255";
  }
  results["panels"] = names;
  log << "threebar: wrote " << panels.size() << " panels\n";
  return kExitOk;
}

int bench_localmin(std::string_view preset, const BenchOptions& opt, json& results, json& outputs,
                   std::ostream& log) {
  LocalMinConfig c;
  c.threads = opt.threads;
  if (preset == "quick") {
    c.n = 40;
    c.samples = 101;
  }
  auto r = run_localmin_sweep(c);
  write_localmin_csv(opt.out, r);
  outputs["localmin.csv"] = "columns h_over_L,J,minimum (1 marks a detected strict local minimum)";
  outputs["localmin_minima.csv"] = "columns index,h_over_L,J,rank (rank 1 is the best minimum)";
  json mins = json::array();
  for (int i : r.minima) mins.push_back({{"index", i}, {"h_over_L", r.h_over_l[i]}, {"J", r.compliance[i]}});
  results["grid"] = c.n;
  results["samples"] = c.samples;
  results["minima"] = mins;
  log << "localmin: " << r.minima.size() << " interior minima\n";
  return kExitOk;
}

}  // namespace

std::vector<std::string> bench_names() { return {"hshape", "threebar", "localmin"}; }

std::vector<std::string> bench_presets(std::string_view name) {
  if (name == "hshape") return {"interpolation", "smoothing", "quadrature"};
  if (name == "threebar") return {"default"};
  if (name == "localmin") return {"default", "quick"};
  return {};
}

int run_bench(std::string_view name, const BenchOptions& opt, std::ostream& log, std::ostream& err) {
  const auto start = Clock::now();
  auto presets = bench_presets(name);
  if (presets.empty()) {
    err << "featmap: error: unknown benchmark '" << name << "' (expected one of hshape, threebar, localmin)\n";
    return kExitValidation;
  }
  std::string preset = opt.preset.empty() ? presets.front() : opt.preset;
  if (std::find(presets.begin(), presets.end(), preset) == presets.end()) {
    std::string list;
    for (const auto& p : presets) list += (list.empty() ? "" : ", ") + p;
    err << "featmap: error: --preset: unknown preset '" << preset << "' for " << name << " (expected one of " << list
        << ")\n";
    return kExitValidation;
  }
  json manifest;
  json results = json::object(), outputs = json::object();
  manifest["command"] = "bench";
  manifest["bench"] = std::string(name);
  manifest["preset"] = preset;
  manifest["threads"] = resolve_threads(opt.threads);
  int code = guarded(
      [&] {
        fs::create_directories(opt.out);
        if (name == "hshape") return bench_hshape(preset, opt, results, outputs, log);
        if (name == "threebar") return bench_threebar(opt, results, outputs, log);
        return bench_localmin(preset, opt, results, outputs, log);
      },
      manifest, err);
  manifest["exit_code"] = code;
  manifest["results"] = results;
  manifest["outputs"] = outputs;
  try {
    write_manifest(opt.out, manifest, start);
  } catch (const std::exception& e) {
    err << "featmap: error: " << e.what() << "\n";
    return code == kExitOk ? kExitError : code;
  }
  return code;
}

}  // namespace featmap
