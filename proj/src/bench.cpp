#include "featmap/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "featmap/combine.hpp"
#include "featmap/errors.hpp"
#include "featmap/io.hpp"
#include "featmap/parallel.hpp"

namespace featmap {

std::vector<double> linspace(double from, double to, int samples) {
  if (samples < 1) throw ValidationError("a sweep needs at least one sample");
  std::vector<double> v(samples);
  for (int i = 0; i < samples; ++i)
    v[i] = samples == 1 ? from : from + (to - from) * static_cast<double>(i) / (samples - 1);
  return v;
}

std::vector<Evaluation> sweep_evaluations(const Model& model, int param, std::span<const double> values,
                                          int threads) {
  if (param < 0 || param >= static_cast<int>(model.design.size()))
    throw ValidationError("sweep parameter index out of range");
  model.validate();
  std::vector<Evaluation> out(values.size());
  parallel_for(static_cast<int>(values.size()), resolve_threads(threads), [&](int begin, int end) {
    Pipeline p(model, 1);
    std::vector<double> s = p.initial_design();
    for (int i = begin; i < end; ++i) {
      s[param] = values[i];
      out[i] = p.evaluate(s, false);
    }
  });
  return out;
}

double total_grayness(std::span<const double> mu) {
  double g = 0.0;
  for (double m : mu) g += grayness(m);
  return g;
}

// ---------------------------------------------------------------------------

Model hshape_model(const BoundaryModel& boundary, const Quadrature& quadrature, const MaterialModel& material) {
  Model m;
  m.grid = {40, 40, 1.0, {0.0, 0.0}};
  m.features = {make_rectangle({0.0, -4.0}, {4.0, 44.0})};
  m.design = DesignVector({{0, kOffsetX, 0.0, 36.0}});
  m.mapping.boundary = boundary;
  m.mapping.quadrature = quadrature;
  m.mapping.combine.extremum = ExtremumKind::true_max;
  m.material = material;
  m.passive.assign(m.grid.num_elements(), Passive::design);
  for (int ey = 0; ey < m.grid.ny; ++ey)
    if (ey <= 3 || ey >= 36)
      for (int ex = 0; ex < m.grid.nx; ++ex) m.passive[m.grid.element(ex, ey)] = Passive::solid;
  for (int ix = 0; ix <= m.grid.nx; ++ix) {
    m.fixed_dofs.push_back(node_dof(m.grid.node(ix, 0), 0));
    m.fixed_dofs.push_back(node_dof(m.grid.node(ix, 0), 1));
  }
  m.loads = Eigen::VectorXd::Zero(2 * m.grid.num_nodes());
  int top_left = m.grid.node(0, m.grid.ny);
  m.loads[node_dof(top_left, 0)] = 1.0;
  m.loads[node_dof(top_left, 1)] = -1.0;
  return m;
}

std::vector<HShapeRow> run_hshape_sweep(const HShapeConfig& c) {
  Model m = hshape_model(c.boundary, c.quadrature, c.material);
  auto s = linspace(c.s_from, c.s_to, c.samples);
  auto evs = sweep_evaluations(m, 0, s, c.threads);
  std::vector<HShapeRow> rows(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    HShapeRow& r = rows[i];
    r.s = s[i];
    r.compliance = evs[i].compliance;
    r.volume = evs[i].volume;
    const double center = s[i] + 2.0;
    for (int ey = 4; ey <= 35; ++ey) {
      for (int ex = 0; ex < m.grid.nx; ++ex) {
        int e = m.grid.element(ex, ey);
        double g = grayness(evs[i].mu[e]);
        if (m.grid.centroid(e).x() < center) r.gray_left += g;
        else r.gray_right += g;
      }
    }
  }
  return rows;
}

void write_hshape_csv(const std::filesystem::path& path, std::span<const HShapeRow> rows) {
  CsvWriter w(path, {"s", "J", "grayness_left", "grayness_right", "V"});
  for (const auto& r : rows) {
    double v[] = {r.s, r.compliance, r.gray_left, r.gray_right, r.volume};
    w.row(v);
  }
  w.close();
}

// ---------------------------------------------------------------------------

MappingConfig binary_mapping() {
  MappingConfig c;
  c.boundary.kind = BoundaryKind::exact;
  c.quadrature = {QuadratureKind::newton_cotes, 0};
  c.combine.strategy = CombineStrategy::map_then_combine_density;
  c.combine.extremum = ExtremumKind::true_max;
  return c;
}

Model localmin_model(int n, const MappingConfig& mapping) {
  if (n < 10) throw ValidationError("the four-bar layout needs at least 10 elements per side");
  const double L = n;
  const double w = 0.1 * L;
  const double reach = 0.75 * L;
  const int exponent = 12;
  Model m;
  m.grid = {n, n, 1.0, {0.0, 0.0}};
  m.features = {make_hyperellipse({0.0, 0.5 * L}, 0.5 * w, reach, exponent),
                make_hyperellipse({0.5 * L, 0.5 * L}, 0.5 * w, reach, exponent),
                make_hyperellipse({L, 0.5 * L}, 0.5 * w, reach, exponent),
                make_hyperellipse({0.5 * L, L - 0.5 * w}, reach, 0.5 * w, exponent),
                make_hyperellipse({0.0, 0.5 * L}, 0.5 * w, reach, exponent)};
  m.design = DesignVector({{4, kOffsetX, 0.0, L}});
  m.mapping = mapping;
  for (int ix = 0; ix <= n; ++ix) {
    m.fixed_dofs.push_back(node_dof(m.grid.node(ix, 0), 0));
    m.fixed_dofs.push_back(node_dof(m.grid.node(ix, 0), 1));
  }
  m.loads = Eigen::VectorXd::Zero(2 * m.grid.num_nodes());
  m.loads[node_dof(m.grid.node(static_cast<int>(std::lround(0.7 * n)), n), 1)] -= 1.0;
  m.loads[node_dof(m.grid.node(static_cast<int>(std::lround(0.25 * n)), n), 1)] -= 0.3;
  return m;
}

std::vector<int> detect_minima(std::span<const double> v, double rel_tol) {
  std::vector<int> first;
  std::vector<double> val;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!val.empty() && std::abs(v[i] - val.back()) <= rel_tol * std::abs(val.back())) continue;
    first.push_back(static_cast<int>(i));
    val.push_back(v[i]);
  }
  std::vector<int> out;
  for (std::size_t k = 1; k + 1 < val.size(); ++k)
    if (val[k] < val[k - 1] && val[k] < val[k + 1]) out.push_back(first[k]);
  return out;
}

LocalMinResult run_localmin_sweep(const LocalMinConfig& c) {
  if (c.samples < 3) throw ValidationError("the local minima sweep needs at least 3 samples");
  Model m = localmin_model(c.n, c.mapping);
  LocalMinResult r;
  r.h_over_l = linspace(0.0, 1.0, c.samples);
  std::vector<double> offsets(r.h_over_l.size());
  for (std::size_t i = 0; i < offsets.size(); ++i) offsets[i] = r.h_over_l[i] * m.grid.width();
  auto evs = sweep_evaluations(m, 0, offsets, c.threads);
  for (const auto& e : evs) r.compliance.push_back(e.compliance);
  r.minima = detect_minima(r.compliance);
  return r;
}

void write_localmin_csv(const std::filesystem::path& dir, const LocalMinResult& r) {
  std::vector<int> is_min(r.compliance.size(), 0);
  for (int i : r.minima) is_min[i] = 1;
  CsvWriter w(dir / "localmin.csv", {"h_over_L", "J", "minimum"});
  for (std::size_t i = 0; i < r.compliance.size(); ++i)
    w.row({format_double(r.h_over_l[i]), format_double(r.compliance[i]), std::to_string(is_min[i])});
  w.close();
  std::vector<int> order = r.minima;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return r.compliance[a] < r.compliance[b]; });
  CsvWriter m(dir / "localmin_minima.csv", {"index", "h_over_L", "J", "rank"});
  for (int i : r.minima) {
    int rank = static_cast<int>(std::find(order.begin(), order.end(), i) - order.begin()) + 1;
    m.row({std::to_string(i), format_double(r.h_over_l[i]), format_double(r.compliance[i]), std::to_string(rank)});
  }
  m.close();
}

// ---------------------------------------------------------------------------

namespace {

Feature hyper_from_bar(const Bar& b) {
  Vec2 d = b.b - b.a;
  double len = d.norm();
  return make_hyperellipse(0.5 * (b.a + b.b), 0.5 * len + b.half_width, b.half_width, 6, std::atan2(d.y(), d.x()));
}

std::vector<double> at_centroids(const Grid& g, const ImplicitField& f) {
  std::vector<double> v(g.num_elements());
  for (int e = 0; e < g.num_elements(); ++e) v[e] = f.value(g.centroid(e));
  return v;
}

std::string alpha_name(double a) {
  std::string s = format_double(a);
  std::replace(s.begin(), s.end(), '.', 'p');
  return "alpha_" + s;
}

}  // namespace

std::vector<Feature> threebar_features(bool hyperellipse, int n) {
  const double k = n / 48.0;
  std::vector<Bar> bars = {{{6.0 * k, 12.0 * k}, {42.0 * k, 12.0 * k}, 3.0 * k},
                           {{36.0 * k, 6.0 * k}, {36.0 * k, 42.0 * k}, 3.0 * k},
                           {{10.0 * k, 12.0 * k}, {36.0 * k, 38.0 * k}, 3.0 * k}};
  std::vector<Feature> out;
  for (const auto& b : bars) out.push_back(hyperellipse ? hyper_from_bar(b) : make_bar(b.a, b.b, b.half_width));
  return out;
}

std::vector<Panel> run_threebar_demo(const ThreeBarConfig& c) {
  const Grid g{c.n, c.n, 1.0, {0.0, 0.0}};
  std::vector<Panel> panels;
  MappingConfig smooth;
  smooth.boundary = {BoundaryKind::poly3, 1.0, 6.5, 1e-6};
  smooth.quadrature = {QuadratureKind::newton_cotes, 2};
  MappingConfig exact_ctm = binary_mapping();
  exact_ctm.combine.strategy = CombineStrategy::combine_then_map;
  const MappingConfig exact_mtc = binary_mapping();
  const double ks_p = 4.0;

  for (bool hyper : {false, true}) {
    const std::string rep = hyper ? "hyper" : "bar";
    auto fs = threebar_features(hyper, c.n);
    const FieldKind raw = hyper ? FieldKind::implicit : FieldKind::signed_distance;
    for (std::size_t i = 0; i < fs.size(); ++i) {
      panels.push_back({rep + "_phi_" + std::to_string(i), at_centroids(g, FeatureField(fs[i], 0, raw)), false});
      if (hyper)
        panels.push_back({rep + "_d_" + std::to_string(i),
                          at_centroids(g, FeatureField(fs[i], 0, FieldKind::signed_distance)), false});
    }
    for (auto ext : {ExtremumKind::true_max, ExtremumKind::ks, ExtremumKind::r_union}) {
      const std::string en(extremum_name(ext));
      panels.push_back({rep + "_combined_" + en, at_centroids(g, CombinedField(fs, raw, ext, ks_p)), false});
      auto dist = at_centroids(g, CombinedField(fs, FieldKind::signed_distance, ext, ks_p));
      std::vector<double> h(dist.size());
      for (std::size_t e = 0; e < dist.size(); ++e) h[e] = heaviside_eval(smooth.boundary, dist[e]).value;
      panels.push_back({rep + "_heaviside_" + en, h, true});
      MappingConfig mc = smooth;
      mc.combine.extremum = ext;
      mc.combine.p = ks_p;
      panels.push_back({rep + "_density_" + en, map_features(fs, g, mc, false, c.threads).rho, true});
    }
    panels.push_back({rep + "_density_exact_combine_then_map", map_features(fs, g, exact_ctm, false, c.threads).rho,
                      true});
    panels.push_back({rep + "_density_exact_map_then_combine", map_features(fs, g, exact_mtc, false, c.threads).rho,
                      true});
  }

  MappingConfig sized = smooth;
  sized.combine.strategy = CombineStrategy::map_then_combine_density;
  sized.combine.extremum = ExtremumKind::true_max;
  sized.combine.size_penalty = 3.0;
  auto fs = threebar_features(false, c.n);
  for (double a : c.alphas) {
    auto f = fs;
    f[2].size = a;
    panels.push_back({alpha_name(a), map_features(f, g, sized, false, c.threads).rho, true});
  }
  std::vector<Feature> two(fs.begin(), fs.begin() + 2);
  panels.push_back({"twobar_reference", map_features(two, g, sized, false, c.threads).rho, true});
  return panels;
}

void write_panels(const std::filesystem::path& dir, const Grid& g, std::span<const Panel> panels) {
  for (const auto& p : panels) {
    CsvWriter w(dir / (p.name + ".csv"), {"ex", "ey", "value"});
    for (int e = 0; e < g.num_elements(); ++e)
      w.row({std::to_string(e % g.nx), std::to_string(e / g.nx), format_double(p.values[e])});
    w.close();
    std::vector<double> img = p.values;
    if (!p.density) {
      auto [lo, hi] = std::minmax_element(img.begin(), img.end());
      double a = *lo, b = *hi;
      for (double& v : img) v = b > a ? (v - a) / (b - a) : 0.0;
    }
    write_density_pgm(dir / (p.name + ".pgm"), g, img);
  }
}

}  // namespace featmap
