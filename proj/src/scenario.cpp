#include "featmap/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "featmap/errors.hpp"

namespace featmap {

std::string_view study_kind_name(StudyKind kind) {
  switch (kind) {
    case StudyKind::map_only: return "map_only";
    case StudyKind::sweep: return "sweep";
    case StudyKind::optimize: return "optimize";
    case StudyKind::verify: return "verify";
  }
  return "";
}

std::optional<StudyKind> parse_study_kind(std::string_view name) {
  for (auto k : {StudyKind::map_only, StudyKind::sweep, StudyKind::optimize, StudyKind::verify})
    if (study_kind_name(k) == name) return k;
  return std::nullopt;
}

namespace {

// A ValidationError that already carries its location.
struct LocatedError : ValidationError {
  using ValidationError::ValidationError;
};

struct Ctx {
  std::string origin;
  std::vector<std::string> overridden;
};

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string join(const std::string& path, std::size_t index) { return join(path, std::to_string(index)); }

[[noreturn]] void fail(const Ctx& c, const YAML::Node& n, const std::string& key, const std::string& msg) {
  std::string where = c.origin;
  bool marked = false;
  if (n.IsDefined()) {
    auto m = n.Mark();
    if (m.line >= 0) {
      where += ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1);
      marked = true;
    }
  }
  if (!marked)
    for (const auto& o : c.overridden)
      if (key == o || key.rfind(o + ".", 0) == 0) where += " (override " + o + ")";
  throw LocatedError(where + ": " + (key.empty() ? std::string("document") : key) + ": " + msg);
}

void check_keys(const Ctx& c, const YAML::Node& map, const std::string& path,
                std::initializer_list<std::string_view> allowed) {
  if (!map.IsMap()) fail(c, map, path, "expected a mapping");
  for (auto it = map.begin(); it != map.end(); ++it) {
    std::string k = it->first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), k) != allowed.end()) continue;
    std::string list;
    for (auto a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
    fail(c, it->first, join(path, k), "unknown key (expected one of " + list + ")");
  }
}

YAML::Node require(const Ctx& c, const YAML::Node& map, const std::string& path, const char* key) {
  YAML::Node n = map[key];
  if (!n) fail(c, map, join(path, key), "missing required key");
  return n;
}

double number(const Ctx& c, const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) fail(c, n, key, "expected a number");
  double v = 0.0;
  try {
    v = n.as<double>();
  } catch (const YAML::Exception&) {
    fail(c, n, key, "expected a number, got '" + n.Scalar() + "'");
  }
  if (!std::isfinite(v)) fail(c, n, key, "must be finite");
  return v;
}

double number(const Ctx& c, const YAML::Node& map, const std::string& path, const char* key, double fallback) {
  YAML::Node n = map[key];
  return n ? number(c, n, join(path, key)) : fallback;
}

double number_req(const Ctx& c, const YAML::Node& map, const std::string& path, const char* key) {
  return number(c, require(c, map, path, key), join(path, key));
}

int integer(const Ctx& c, const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) fail(c, n, key, "expected an integer");
  try {
    return n.as<int>();
  } catch (const YAML::Exception&) {
    fail(c, n, key, "expected an integer, got '" + n.Scalar() + "'");
  }
}

int integer(const Ctx& c, const YAML::Node& map, const std::string& path, const char* key, int fallback) {
  YAML::Node n = map[key];
  return n ? integer(c, n, join(path, key)) : fallback;
}

std::string text(const Ctx& c, const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) fail(c, n, key, "expected a string");
  return n.Scalar();
}

Vec2 vec2(const Ctx& c, const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence() || n.size() != 2) fail(c, n, key, "expected a pair [x, y]");
  return {number(c, n[0], join(key, std::size_t{0})), number(c, n[1], join(key, std::size_t{1}))};
}

Vec2 vec2(const Ctx& c, const YAML::Node& map, const std::string& path, const char* key, Vec2 fallback) {
  YAML::Node n = map[key];
  return n ? vec2(c, n, join(path, key)) : fallback;
}

template <class E, class Parse, class Name>
E enumerated(const Ctx& c, const YAML::Node& n, const std::string& key, const char* what, Parse parse, Name name,
             std::initializer_list<E> all) {
  std::string s = text(c, n, key);
  if (auto v = parse(s)) return *v;
  std::string list;
  for (E e : all) list += (list.empty() ? "" : ", ") + std::string(name(e));
  fail(c, n, key, "unknown " + std::string(what) + " '" + s + "' (expected one of " + list + ")");
}

template <class F>
void anchored(const Ctx& c, const YAML::Node& n, const std::string& key, F&& validate) {
  try {
    validate();
  } catch (const LocatedError&) {
    throw;
  } catch (const ValidationError& e) {
    fail(c, n, key, e.what());
  }
}

// Copy without source positions, so errors do not point into the override text.
YAML::Node unmarked(const YAML::Node& n) {
  if (n.IsScalar()) return YAML::Node(n.Scalar());
  if (n.IsSequence()) {
    YAML::Node out(YAML::NodeType::Sequence);
    for (const auto& e : n) out.push_back(unmarked(e));
    return out;
  }
  if (n.IsMap()) {
    YAML::Node out(YAML::NodeType::Map);
    for (const auto& e : n) out[e.first.Scalar()] = unmarked(e.second);
    return out;
  }
  return YAML::Node();
}

std::string apply_override(YAML::Node& root, const std::string& item) {
  auto eq = item.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError("override '" + item + "': expected key=value");
  const std::string key = item.substr(0, eq);
  const std::string value = item.substr(eq + 1);
  YAML::Node v;
  try {
    v = YAML::Load(value);
  } catch (const YAML::Exception&) {
    v = YAML::Node(value);
  }
  v = unmarked(v);
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
  if (parts.empty() || std::any_of(parts.begin(), parts.end(), [](const std::string& p) { return p.empty(); }) ||
      key.back() == '.')
    throw ValidationError("override '" + item + "': malformed key");
  YAML::Node cur;
  cur.reset(root);
  std::string prefix;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& part = parts[i];
    const bool last = i + 1 == parts.size();
    if (cur.IsSequence()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(part, &used);
        if (used != part.size()) throw std::invalid_argument(part);
      } catch (const std::exception&) {
        throw ValidationError("override '" + key + "': '" + join(prefix, part) + "' needs a list index");
      }
      if (idx >= cur.size())
        throw ValidationError("override '" + key + "': list '" + prefix + "' has no entry " + part);
      if (last) {
        cur[idx] = v;
      } else {
        YAML::Node next = cur[idx];
        cur.reset(next);
      }
    } else if (cur.IsMap() || cur.IsNull()) {
      if (last) {
        cur[part] = v;
      } else {
        if (!cur[part]) cur[part] = YAML::Node(YAML::NodeType::Map);
        YAML::Node next = cur[part];
        cur.reset(next);
      }
    } else {
      throw ValidationError("override '" + key + "': '" + prefix + "' is a scalar");
    }
    prefix = join(prefix, part);
  }
  return key;
}

Grid parse_grid(const Ctx& c, const YAML::Node& n) {
  check_keys(c, n, "grid", {"nx", "ny", "l_el", "origin"});
  Grid g;
  g.nx = integer(c, require(c, n, "grid", "nx"), "grid.nx");
  g.ny = integer(c, require(c, n, "grid", "ny"), "grid.ny");
  g.l_el = number(c, n, "grid", "l_el", 1.0);
  g.origin = vec2(c, n, "grid", "origin", {0.0, 0.0});
  anchored(c, n, "grid", [&] { g.validate(); });
  return g;
}

Feature parse_feature(const Ctx& c, const YAML::Node& n, const std::string& path) {
  if (!n.IsMap()) fail(c, n, path, "expected a mapping");
  std::string type = text(c, require(c, n, path, "type"), join(path, "type"));
  Feature f;
  anchored(c, n, path, [&] {
  if (type == "bar") {
    check_keys(c, n, path, {"type", "a", "b", "half_width", "offset", "size"});
    f = make_bar(vec2(c, require(c, n, path, "a"), join(path, "a")), vec2(c, require(c, n, path, "b"), join(path, "b")),
                 number_req(c, n, path, "half_width"));
  } else if (type == "hyperellipse") {
    check_keys(c, n, path, {"type", "center", "semi_a", "semi_b", "exponent", "rotation", "offset", "size"});
    f = make_hyperellipse(vec2(c, require(c, n, path, "center"), join(path, "center")), number_req(c, n, path, "semi_a"),
                          number_req(c, n, path, "semi_b"), integer(c, n, path, "exponent", 6),
                          number(c, n, path, "rotation", 0.0));
  } else if (type == "circle") {
    check_keys(c, n, path, {"type", "center", "radius", "offset", "size"});
    f = make_circle(vec2(c, require(c, n, path, "center"), join(path, "center")), number_req(c, n, path, "radius"));
  } else if (type == "rectangle") {
    check_keys(c, n, path, {"type", "min", "max", "offset", "size"});
    f = make_rectangle(vec2(c, require(c, n, path, "min"), join(path, "min")),
                       vec2(c, require(c, n, path, "max"), join(path, "max")));
  } else {
    fail(c, n["type"], join(path, "type"),
         "unknown feature type '" + type + "' (expected one of bar, hyperellipse, circle, rectangle)");
  }
  });
  f.offset = vec2(c, n, path, "offset", {0.0, 0.0});
  f.size = number(c, n, path, "size", 1.0);
  anchored(c, n, path, [&] { validate(f); });
  return f;
}

DesignVector parse_design(const Ctx& c, const YAML::Node& n, const std::vector<Feature>& features) {
  if (!n.IsSequence()) fail(c, n, "design", "expected a list");
  std::vector<DesignParam> params;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const YAML::Node e = n[i];
    const std::string path = join("design", i);
    check_keys(c, e, path, {"feature", "param", "lower", "upper", "margin"});
    YAML::Node fn = require(c, e, path, "feature");
    int fi = integer(c, fn, join(path, "feature"));
    if (fi < 0 || fi >= static_cast<int>(features.size()))
      fail(c, fn, join(path, "feature"), "feature index " + std::to_string(fi) + " out of range");
    YAML::Node pn = require(c, e, path, "param");
    std::vector<std::pair<YAML::Node, std::string>> names;
    if (pn.IsSequence()) {
      for (std::size_t k = 0; k < pn.size(); ++k) names.emplace_back(pn[k], text(c, pn[k], join(join(path, "param"), k)));
    } else {
      names.emplace_back(pn, text(c, pn, join(path, "param")));
    }
    const bool has_margin = static_cast<bool>(e["margin"]);
    const bool has_bounds = e["lower"] || e["upper"];
    if (has_margin == has_bounds) fail(c, e, path, "give either lower and upper, or margin");
    const ShapeKind kind = kind_of(features[fi]);
    for (const auto& [node, name] : names) {
      int slot = slot_index(kind, name);
      if (slot < 0) {
        std::string list;
        for (int s = 0; s < kSlots; ++s)
          if (!slot_name(kind, s).empty()) list += (list.empty() ? "" : ", ") + std::string(slot_name(kind, s));
        fail(c, node, join(path, "param"),
             "unknown parameter '" + name + "' for a " + std::string(kind_name(kind)) + " (expected one of " + list +
                 ")");
      }
      DesignParam p;
      p.feature = fi;
      p.slot = slot;
      if (has_margin) {
        double m = number_req(c, e, path, "margin");
        double v = get_param(features[fi], slot);
        p.lower = v - m;
        p.upper = v + m;
      } else {
        p.lower = number_req(c, e, path, "lower");
        p.upper = number_req(c, e, path, "upper");
      }
      params.push_back(p);
    }
  }
  DesignVector dv(std::move(params));
  anchored(c, n, "design", [&] { dv.validate(features); });
  return dv;
}

void parse_model(const Ctx& c, const YAML::Node& n, Model& m) {
  check_keys(c, n, "model", {"boundary", "quadrature", "argument", "combine", "material"});
  MappingConfig& mc = m.mapping;
  if (YAML::Node b = n["boundary"]) {
    check_keys(c, b, "model.boundary", {"kind", "half_width", "beta", "rho_min"});
    if (YAML::Node k = b["kind"])
      mc.boundary.kind = enumerated<BoundaryKind>(
          c, k, "model.boundary.kind", "boundary kind", parse_boundary_kind, boundary_kind_name,
          {BoundaryKind::exact, BoundaryKind::linear, BoundaryKind::poly3, BoundaryKind::cosine, BoundaryKind::tanh,
           BoundaryKind::circ_sample});
    mc.boundary.half_width = number(c, b, "model.boundary", "half_width", mc.boundary.half_width);
    mc.boundary.beta = number(c, b, "model.boundary", "beta", mc.boundary.beta);
    mc.boundary.rho_min = number(c, b, "model.boundary", "rho_min", mc.boundary.rho_min);
    anchored(c, b, "model.boundary", [&] { mc.boundary.validate(); });
  }
  if (YAML::Node q = n["quadrature"]) {
    check_keys(c, q, "model.quadrature", {"kind", "degree"});
    if (YAML::Node k = q["kind"]) {
      std::string s = text(c, k, "model.quadrature.kind");
      if (s == "newton_cotes") mc.quadrature.kind = QuadratureKind::newton_cotes;
      else if (s == "quasi_analytic") mc.quadrature.kind = QuadratureKind::quasi_analytic;
      else fail(c, k, "model.quadrature.kind", "unknown quadrature '" + s + "' (expected one of newton_cotes, quasi_analytic)");
    }
    mc.quadrature.degree = integer(c, q, "model.quadrature", "degree", mc.quadrature.degree);
    anchored(c, q, "model.quadrature", [&] { mc.quadrature.validate(); });
  }
  if (YAML::Node a = n["argument"]) {
    std::string s = text(c, a, "model.argument");
    if (s == "signed_distance") mc.argument = FieldKind::signed_distance;
    else if (s == "implicit") mc.argument = FieldKind::implicit;
    else fail(c, a, "model.argument", "unknown field argument '" + s + "' (expected one of signed_distance, implicit)");
  }
  if (YAML::Node cb = n["combine"]) {
    check_keys(c, cb, "model.combine", {"strategy", "extremum", "p", "size_penalty"});
    if (YAML::Node k = cb["strategy"])
      mc.combine.strategy = enumerated<CombineStrategy>(
          c, k, "model.combine.strategy", "combine strategy", parse_strategy, strategy_name,
          {CombineStrategy::combine_then_map, CombineStrategy::map_then_combine_density,
           CombineStrategy::map_then_combine_heaviside});
    if (YAML::Node k = cb["extremum"])
      mc.combine.extremum = enumerated<ExtremumKind>(
          c, k, "model.combine.extremum", "extremum", parse_extremum, extremum_name,
          {ExtremumKind::true_max, ExtremumKind::ks, ExtremumKind::pnorm, ExtremumKind::r_union,
           ExtremumKind::product_indicator});
    mc.combine.p = number(c, cb, "model.combine", "p", mc.combine.p);
    mc.combine.size_penalty = number(c, cb, "model.combine", "size_penalty", mc.combine.size_penalty);
    anchored(c, cb, "model.combine", [&] { mc.combine.validate(); });
  }
  if (YAML::Node mt = n["material"]) {
    check_keys(c, mt, "model.material", {"interpolation", "p", "q", "youngs", "poisson", "thickness"});
    MaterialModel& mm = m.material;
    if (YAML::Node k = mt["interpolation"])
      mm.kind = enumerated<InterpolationKind>(
          c, k, "model.material.interpolation", "interpolation", parse_interpolation, interpolation_name,
          {InterpolationKind::linear, InterpolationKind::power, InterpolationKind::ramp, InterpolationKind::hs_bound});
    mm.p = number(c, mt, "model.material", "p", mm.p);
    mm.q = number(c, mt, "model.material", "q", mm.q);
    mm.youngs = number(c, mt, "model.material", "youngs", mm.youngs);
    mm.poisson = number(c, mt, "model.material", "poisson", mm.poisson);
    mm.thickness = number(c, mt, "model.material", "thickness", mm.thickness);
    anchored(c, mt, "model.material", [&] { mm.validate(); });
  }
  anchored(c, n, "model", [&] { mc.validate(); });
}

std::vector<int> dof_components(const Ctx& c, const YAML::Node& e, const std::string& path) {
  YAML::Node d = e["dofs"];
  std::string s = d ? text(c, d, join(path, "dofs")) : "xy";
  if (s == "xy") return {0, 1};
  if (s == "x") return {0};
  if (s == "y") return {1};
  fail(c, d, join(path, "dofs"), "unknown dof set '" + s + "' (expected one of x, y, xy)");
}

int node_at(const Ctx& c, const Grid& g, const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence() || n.size() != 2) fail(c, n, key, "expected a node index pair [ix, iy]");
  int ix = integer(c, n[0], join(key, std::size_t{0}));
  int iy = integer(c, n[1], join(key, std::size_t{1}));
  if (ix < 0 || ix > g.nx || iy < 0 || iy > g.ny) fail(c, n, key, "node index outside the grid");
  return g.node(ix, iy);
}

int nearest_node(const Ctx& c, const Grid& g, const YAML::Node& n, const std::string& key) {
  Vec2 x = vec2(c, n, key);
  const double tol = 1e-9 * g.l_el;
  Vec2 r = (x - g.origin) / g.l_el;
  if (r.x() < -tol || r.y() < -tol || r.x() > g.nx + tol || r.y() > g.ny + tol) fail(c, n, key, "point outside the grid");
  int ix = std::clamp(static_cast<int>(std::lround(r.x())), 0, g.nx);
  int iy = std::clamp(static_cast<int>(std::lround(r.y())), 0, g.ny);
  return g.node(ix, iy);
}

std::vector<int> parse_supports(const Ctx& c, const YAML::Node& n, const Grid& g) {
  if (!n.IsSequence()) fail(c, n, "supports", "expected a list");
  std::vector<int> fixed;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const YAML::Node e = n[i];
    const std::string path = join("supports", i);
    check_keys(c, e, path, {"edge", "node", "at", "box", "dofs"});
    auto comps = dof_components(c, e, path);
    std::vector<int> nodes;
    int selectors = 0;
    if (YAML::Node ed = e["edge"]) {
      ++selectors;
      std::string s = text(c, ed, join(path, "edge"));
      if (s == "left") for (int iy = 0; iy <= g.ny; ++iy) nodes.push_back(g.node(0, iy));
      else if (s == "right") for (int iy = 0; iy <= g.ny; ++iy) nodes.push_back(g.node(g.nx, iy));
      else if (s == "bottom") for (int ix = 0; ix <= g.nx; ++ix) nodes.push_back(g.node(ix, 0));
      else if (s == "top") for (int ix = 0; ix <= g.nx; ++ix) nodes.push_back(g.node(ix, g.ny));
      else fail(c, ed, join(path, "edge"), "unknown edge '" + s + "' (expected one of left, right, bottom, top)");
    }
    if (YAML::Node nd = e["node"]) {
      ++selectors;
      nodes.push_back(node_at(c, g, nd, join(path, "node")));
    }
    if (YAML::Node at = e["at"]) {
      ++selectors;
      nodes.push_back(nearest_node(c, g, at, join(path, "at")));
    }
    if (YAML::Node bx = e["box"]) {
      ++selectors;
      const std::string bp = join(path, "box");
      check_keys(c, bx, bp, {"min", "max"});
      Vec2 lo = vec2(c, require(c, bx, bp, "min"), join(bp, "min"));
      Vec2 hi = vec2(c, require(c, bx, bp, "max"), join(bp, "max"));
      const double tol = 1e-9 * g.l_el;
      for (int k = 0; k < g.num_nodes(); ++k) {
        Vec2 x = g.node_position(k);
        if (x.x() >= lo.x() - tol && x.x() <= hi.x() + tol && x.y() >= lo.y() - tol && x.y() <= hi.y() + tol)
          nodes.push_back(k);
      }
      if (nodes.empty()) fail(c, bx, bp, "box selects no nodes");
    }
    if (selectors != 1) fail(c, e, path, "give exactly one of edge, node, at, box");
    for (int k : nodes)
      for (int comp : comps) fixed.push_back(node_dof(k, comp));
  }
  std::sort(fixed.begin(), fixed.end());
  fixed.erase(std::unique(fixed.begin(), fixed.end()), fixed.end());
  return fixed;
}

Eigen::VectorXd parse_loads(const Ctx& c, const YAML::Node& n, const Grid& g) {
  if (!n.IsSequence()) fail(c, n, "loads", "expected a list");
  Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * g.num_nodes());
  for (std::size_t i = 0; i < n.size(); ++i) {
    const YAML::Node e = n[i];
    const std::string path = join("loads", i);
    check_keys(c, e, path, {"node", "at", "force"});
    int k = -1;
    if (e["node"] && e["at"]) fail(c, e, path, "give only one of node, at");
    if (YAML::Node nd = e["node"]) k = node_at(c, g, nd, join(path, "node"));
    else if (YAML::Node at = e["at"]) k = nearest_node(c, g, at, join(path, "at"));
    else fail(c, e, path, "missing node or at");
    Vec2 force = vec2(c, require(c, e, path, "force"), join(path, "force"));
    f[node_dof(k, 0)] += force.x();
    f[node_dof(k, 1)] += force.y();
  }
  return f;
}

std::vector<Passive> parse_passive(const Ctx& c, const YAML::Node& n, const Grid& g) {
  if (!n.IsSequence()) fail(c, n, "passive", "expected a list");
  std::vector<Passive> out(g.num_elements(), Passive::design);
  for (std::size_t i = 0; i < n.size(); ++i) {
    const YAML::Node e = n[i];
    const std::string path = join("passive", i);
    check_keys(c, e, path, {"min", "max", "value"});
    Vec2 lo = vec2(c, require(c, e, path, "min"), join(path, "min"));
    Vec2 hi = vec2(c, require(c, e, path, "max"), join(path, "max"));
    YAML::Node vn = require(c, e, path, "value");
    std::string v = text(c, vn, join(path, "value"));
    Passive p = Passive::design;
    if (v == "solid") p = Passive::solid;
    else if (v == "empty") p = Passive::empty;
    else fail(c, vn, join(path, "value"), "unknown passive value '" + v + "' (expected one of solid, empty)");
    for (int el = 0; el < g.num_elements(); ++el) {
      Vec2 x = g.centroid(el);
      if (x.x() >= lo.x() && x.x() <= hi.x() && x.y() >= lo.y() && x.y() <= hi.y()) out[el] = p;
    }
  }
  return out;
}

std::vector<ConstraintSpec> parse_constraints(const Ctx& c, const YAML::Node& n) {
  if (!n.IsSequence()) fail(c, n, "constraints", "expected a list");
  std::vector<ConstraintSpec> out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const YAML::Node e = n[i];
    const std::string path = join("constraints", i);
    check_keys(c, e, path, {"kind", "fraction", "min_gap", "p", "polygon", "offset", "spacing", "threshold_factor"});
    ConstraintSpec s;
    s.kind = enumerated<ConstraintKind>(
        c, require(c, e, path, "kind"), join(path, "kind"), "constraint kind", parse_constraint_kind,
        constraint_kind_name,
        {ConstraintKind::volume, ConstraintKind::fcm_separation, ConstraintKind::overlap_integral,
         ConstraintKind::overlap_auxiliary, ConstraintKind::containment});
    s.volume_fraction = number(c, e, path, "fraction", s.volume_fraction);
    s.min_gap = number(c, e, path, "min_gap", s.min_gap);
    s.p = number(c, e, path, "p", s.p);
    s.offset = number(c, e, path, "offset", s.offset);
    s.spacing = number(c, e, path, "spacing", s.spacing);
    s.threshold_factor = number(c, e, path, "threshold_factor", s.threshold_factor);
    if (YAML::Node poly = e["polygon"]) {
      if (!poly.IsSequence()) fail(c, poly, join(path, "polygon"), "expected a list of points");
      for (std::size_t k = 0; k < poly.size(); ++k) s.polygon.push_back(vec2(c, poly[k], join(join(path, "polygon"), k)));
    }
    anchored(c, e, path, [&] { s.validate(); });
    out.push_back(std::move(s));
  }
  return out;
}

Study parse_study(const Ctx& c, const YAML::Node& n, const Model& model) {
  check_keys(c, n, "study",
             {"kind", "param", "from", "to", "samples", "max_iterations", "move_limit", "design_tol", "kkt_tol",
              "constraint_tol", "tolerance", "step", "relative_floor"});
  Study st;
  st.kind = enumerated<StudyKind>(c, require(c, n, "study", "kind"), "study.kind", "study kind", parse_study_kind,
                                  study_kind_name,
                                  {StudyKind::map_only, StudyKind::sweep, StudyKind::optimize, StudyKind::verify});
  if (st.kind != StudyKind::map_only && model.design.size() == 0)
    fail(c, n, "study.kind", "a " + std::string(study_kind_name(st.kind)) + " study needs a non-empty design list");
  if (st.kind == StudyKind::sweep) {
    YAML::Node pn = require(c, n, "study", "param");
    std::string s = text(c, pn, "study.param");
    int idx = -1;
    for (std::size_t i = 0; i < model.design.size(); ++i)
      if (model.design.label(i, model.features) == s) idx = static_cast<int>(i);
    if (idx < 0) {
      try {
        std::size_t used = 0;
        int v = std::stoi(s, &used);
        if (used == s.size() && v >= 0 && v < static_cast<int>(model.design.size())) idx = v;
      } catch (const std::exception&) {
      }
    }
    if (idx < 0) fail(c, pn, "study.param", "'" + s + "' is neither a design label (like f0.ax) nor a design index");
    st.parameter = idx;
    st.from = number_req(c, n, "study", "from");
    st.to = number_req(c, n, "study", "to");
    st.samples = integer(c, n, "study", "samples", st.samples);
    if (st.samples < 1) fail(c, n["samples"], "study.samples", "must be at least 1");
  }
  OptimizerOptions& o = st.optimizer;
  o.max_iterations = integer(c, n, "study", "max_iterations", o.max_iterations);
  o.move_limit = number(c, n, "study", "move_limit", o.move_limit);
  o.design_tol = number(c, n, "study", "design_tol", o.design_tol);
  o.kkt_tol = number(c, n, "study", "kkt_tol", o.kkt_tol);
  o.constraint_tol = number(c, n, "study", "constraint_tol", o.constraint_tol);
  o.min_move = std::min(o.min_move, o.move_limit);
  anchored(c, n, "study", [&] { o.validate(); });
  st.fd.tolerance = number(c, n, "study", "tolerance", st.fd.tolerance);
  st.fd.relative_floor = number(c, n, "study", "relative_floor", st.fd.relative_floor);
  st.fd_step = number(c, n, "study", "step", st.fd_step);
  if (!(st.fd.tolerance > 0.0)) fail(c, n["tolerance"], "study.tolerance", "must be positive");
  if (!(st.fd_step > 0.0)) fail(c, n["step"], "study.step", "must be positive");
  if (!(st.fd.relative_floor >= 0.0)) fail(c, n["relative_floor"], "study.relative_floor", "must be nonnegative");
  return st;
}

}  // namespace

Scenario parse_scenario(std::string_view source, std::span<const std::string> overrides, std::string_view origin) {
  Ctx c{std::string(origin), {}};
  YAML::Node root;
  try {
    root = YAML::Load(std::string(source));
  } catch (const YAML::ParserException& e) {
    throw ValidationError(c.origin + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                          ": " + e.msg);
  }
  if (!root.IsMap()) throw ValidationError(c.origin + ": the scenario must be a mapping of sections");
  for (const auto& o : overrides) c.overridden.push_back(apply_override(root, o));
  check_keys(c, root, "",
             {"name", "grid", "features", "design", "model", "supports", "loads", "passive", "constraints", "study"});

  Scenario sc;
  sc.name = root["name"] ? text(c, root["name"], "name") : "scenario";
  Model& m = sc.model;
  m.grid = parse_grid(c, require(c, root, "", "grid"));
  YAML::Node fs = require(c, root, "", "features");
  if (!fs.IsSequence() || fs.size() == 0) fail(c, fs, "features", "expected a non-empty list");
  for (std::size_t i = 0; i < fs.size(); ++i) m.features.push_back(parse_feature(c, fs[i], join("features", i)));
  if (YAML::Node d = root["design"]) m.design = parse_design(c, d, m.features);
  if (YAML::Node md = root["model"]) parse_model(c, md, m);
  if (YAML::Node sp = root["supports"]) m.fixed_dofs = parse_supports(c, sp, m.grid);
  m.loads = Eigen::VectorXd::Zero(2 * m.grid.num_nodes());
  if (YAML::Node ld = root["loads"]) m.loads = parse_loads(c, ld, m.grid);
  if (YAML::Node p = root["passive"]) m.passive = parse_passive(c, p, m.grid);
  if (YAML::Node cs = root["constraints"]) sc.constraints = parse_constraints(c, cs);
  sc.study = parse_study(c, require(c, root, "", "study"), m);
  const bool analysis = sc.study.kind != StudyKind::map_only;
  if (analysis) {
    if (!root["supports"]) fail(c, root, "supports", "missing required key");
    if (!root["loads"]) fail(c, root, "loads", "missing required key");
    anchored(c, root["supports"], "supports", [&] { m.fea_problem().validate(); });
  }
  try {
    if (analysis) m.validate();
    else m.validate_mapping();
  } catch (const ValidationError& e) {
    throw ValidationError(c.origin + ": " + e.what());
  }
  YAML::Emitter out;
  out << root;
  sc.resolved = std::string(out.c_str()) + "\n";
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path, std::span<const std::string> overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path.string() + ": cannot open scenario file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), overrides, path.string());
}

}  // namespace featmap
