#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "featmap/errors.hpp"
#include "featmap/run.hpp"
#include "featmap/scenario.hpp"

namespace py = pybind11;
using namespace featmap;

namespace {

py::array_t<double> as_grid(const Grid& g, const std::vector<double>& values) {
  py::array_t<double> a({g.ny, g.nx});
  auto m = a.mutable_unchecked<2>();
  for (int ey = 0; ey < g.ny; ++ey)
    for (int ex = 0; ex < g.nx; ++ex) m(ey, ex) = values[g.element(ex, ey)];
  return a;
}

std::vector<double> design_or_initial(const Pipeline& pipe, std::optional<std::vector<double>> design) {
  if (!design) return pipe.initial_design();
  if (design->size() != pipe.initial_design().size())
    throw ValidationError("design has " + std::to_string(design->size()) + " entries, the scenario declares " +
                          std::to_string(pipe.initial_design().size()));
  return *design;
}

// Runs a CLI-equivalent action with log/err captured; returns (code, log, err).
template <class F>
py::tuple captured(F&& f) {
  std::ostringstream log, err;
  int code;
  {
    py::gil_scoped_release release;
    code = f(log, err);
  }
  return py::make_tuple(code, log.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_featmap, m) {
  m.attr("__version__") = FEATMAP_VERSION;

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<AnalysisError>(m, "AnalysisError", PyExc_RuntimeError);
  py::register_exception<NotDifferentiableError>(m, "NotDifferentiableError", PyExc_RuntimeError);

  m.def(
      "run",
      [](const std::filesystem::path& scenario, const std::filesystem::path& out, std::vector<std::string> overrides,
         int threads, std::optional<std::string> study) {
        RunOptions o;
        o.out = out;
        o.overrides = std::move(overrides);
        o.threads = threads;
        if (study) {
          auto k = parse_study_kind(*study);
          if (!k) throw ValidationError("unknown study kind '" + *study + "'");
          o.study = *k;
        }
        return captured([&](std::ostream& log, std::ostream& err) { return run_scenario(scenario, o, log, err); });
      },
      py::arg("scenario"), py::arg("out") = "featmap-out", py::arg("overrides") = std::vector<std::string>{},
      py::arg("threads") = 0, py::arg("study") = py::none(),
      "Run a scenario file. Returns (exit_code, log, errors).");

  m.def(
      "bench",
      [](const std::string& name, const std::string& preset, const std::filesystem::path& out, int threads) {
        BenchOptions o;
        o.preset = preset;
        o.out = out;
        o.threads = threads;
        return captured([&](std::ostream& log, std::ostream& err) { return run_bench(name, o, log, err); });
      },
      py::arg("name"), py::arg("preset") = "", py::arg("out") = "featmap-out", py::arg("threads") = 0,
      "Run a benchmark. Returns (exit_code, log, errors).");

  m.def("bench_names", &bench_names);
  m.def("bench_presets", [](const std::string& name) { return bench_presets(name); });

  m.def(
      "density",
      [](const std::filesystem::path& scenario, std::vector<std::string> overrides,
         std::optional<std::vector<double>> design) {
        auto sc = load_scenario(scenario, overrides);
        const Model& md = sc.model;
        md.validate_mapping();
        std::vector<double> s = md.design.values(md.features);
        if (design) {
          if (design->size() != s.size())
            throw ValidationError("design has " + std::to_string(design->size()) + " entries, the scenario declares " +
                                  std::to_string(s.size()));
          s = *design;
        }
        auto features = md.design.apply(md.features, s);
        auto field = map_features(features, md.grid, md.mapping, false, 1);
        apply_passive(field, md.passive, md.mapping.boundary.rho_min);
        return as_grid(md.grid, field.rho);
      },
      py::arg("scenario"), py::arg("overrides") = std::vector<std::string>{}, py::arg("design") = py::none(),
      "Element densities as an (ny, nx) array; row 0 is the bottom row.");

  m.def(
      "evaluate",
      [](const std::filesystem::path& scenario, std::vector<std::string> overrides,
         std::optional<std::vector<double>> design, bool gradients) {
        auto sc = load_scenario(scenario, overrides);
        sc.model.validate();
        Pipeline pipe(sc.model, 1);
        auto s = design_or_initial(pipe, std::move(design));
        auto ev = pipe.evaluate(s, gradients);
        py::dict d;
        d["design"] = s;
        d["labels"] = pipe.labels();
        d["compliance"] = ev.compliance;
        d["volume"] = ev.volume;
        d["density"] = as_grid(sc.model.grid, ev.density.rho);
        if (gradients) {
          d["compliance_grad"] = ev.compliance_grad;
          d["volume_grad"] = ev.volume_grad;
        }
        return d;
      },
      py::arg("scenario"), py::arg("overrides") = std::vector<std::string>{}, py::arg("design") = py::none(),
      py::arg("gradients") = true, "Map, solve and optionally differentiate one design of a scenario.");

  m.def(
      "heaviside",
      [](const std::string& kind, py::array_t<double, py::array::c_style | py::array::forcecast> phi,
         double half_width, double beta, double rho_min) {
        auto k = parse_boundary_kind(kind);
        if (!k) throw ValidationError("unknown boundary kind '" + kind + "'");
        BoundaryModel b{*k, half_width, beta, rho_min};
        b.validate();
        py::array_t<double> out(phi.request().shape);
        auto in = phi.data();
        auto o = out.mutable_data();
        for (py::ssize_t i = 0; i < phi.size(); ++i) o[i] = heaviside_eval(b, in[i]).value;
        return out;
      },
      py::arg("kind"), py::arg("phi"), py::arg("half_width") = 1.0, py::arg("beta") = 6.5, py::arg("rho_min") = 1e-6,
      "Smoothed Heaviside of each entry of phi.");
}
