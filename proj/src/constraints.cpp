#include "featmap/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "featmap/errors.hpp"

namespace featmap {
namespace {

double segment_distance(const Vec2& a, const Vec2& b, const Vec2& x) {
  Vec2 ab = b - a;
  double t = std::clamp((x - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (x - (a + t * ab)).norm();
}

double signed_area(std::span<const Vec2> poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

std::vector<Vec2> grid_polygon(const Grid& g) {
  Vec2 o = g.origin;
  return {o, o + Vec2(g.width(), 0.0), o + Vec2(g.width(), g.height()), o + Vec2(0.0, g.height())};
}

std::vector<double> to_design(const Model& model, const SparsePartials& d) {
  std::vector<double> dense(model.num_slots(), 0.0);
  for (const auto& [s, v] : d)
    if (s >= 0 && s < model.num_slots()) dense[s] += v;
  return model.design.gather(dense);
}

}  // namespace

std::vector<SurrogateCircle> surrogate_circles(const Feature& f, int index) {
  std::vector<SurrogateCircle> out;
  if (const auto* c = std::get_if<Circle>(&f.shape)) {
    SurrogateCircle s;
    s.feature = index;
    s.center = c->center + f.offset;
    s.radius = c->radius;
    s.dcx[0] = 1.0;
    s.dcx[kOffsetX] = 1.0;
    s.dcy[1] = 1.0;
    s.dcy[kOffsetY] = 1.0;
    s.dr[2] = 1.0;
    out.push_back(s);
    return out;
  }
  const auto* bar = std::get_if<Bar>(&f.shape);
  if (!bar) throw ValidationError("finite circle surrogates exist only for bar and circle features");
  const Vec2 ab = bar->b - bar->a;
  const double len = ab.norm();
  const double r = bar->half_width;
  const int interior = std::max(0, static_cast<int>(std::ceil(len / (2.0 * r))) - 1);
  const int segments = interior + 1;
  const double half = 0.5 * len / segments;
  const double radius = std::sqrt(r * r + half * half);
  const Vec2 dlen_db = ab / len;
  const double dR_dlen = half / (2.0 * segments * radius);
  for (int k = 0; k <= segments; ++k) {
    double t = static_cast<double>(k) / segments;
    SurrogateCircle s;
    s.feature = index;
    s.center = bar->a + t * ab + f.offset;
    s.radius = radius;
    s.dcx[0] = 1.0 - t;
    s.dcx[2] = t;
    s.dcx[kOffsetX] = 1.0;
    s.dcy[1] = 1.0 - t;
    s.dcy[3] = t;
    s.dcy[kOffsetY] = 1.0;
    s.dr[0] = -dR_dlen * dlen_db.x();
    s.dr[1] = -dR_dlen * dlen_db.y();
    s.dr[2] = dR_dlen * dlen_db.x();
    s.dr[3] = dR_dlen * dlen_db.y();
    s.dr[4] = r / radius;
    out.push_back(s);
  }
  return out;
}

std::vector<PairConstraint> fcm_separation(std::span<const Feature> features, double min_gap) {
  std::vector<SurrogateCircle> circles;
  for (std::size_t i = 0; i < features.size(); ++i) {
    auto c = surrogate_circles(features[i], static_cast<int>(i));
    circles.insert(circles.end(), c.begin(), c.end());
  }
  std::vector<PairConstraint> out;
  for (std::size_t i = 0; i < circles.size(); ++i) {
    for (std::size_t j = i + 1; j < circles.size(); ++j) {
      const auto& a = circles[i];
      const auto& b = circles[j];
      if (a.feature == b.feature) continue;
      PairConstraint pc;
      pc.circle_a = static_cast<int>(i);
      pc.circle_b = static_cast<int>(j);
      Vec2 delta = a.center - b.center;
      double dist = delta.norm();
      pc.value = a.radius + b.radius + min_gap - dist;
      Vec2 n = Vec2::Zero();
      if (dist > 1e-14 * std::max(1.0, a.radius + b.radius)) n = delta / dist;
      else pc.degenerate = true;
      for (int s = 0; s < kSlots; ++s) {
        double da = a.dr[s] - (n.x() * a.dcx[s] + n.y() * a.dcy[s]);
        double db = b.dr[s] + (n.x() * b.dcx[s] + n.y() * b.dcy[s]);
        if (da != 0.0) accumulate(pc.d, global_slot(a.feature, s), da);
        if (db != 0.0) accumulate(pc.d, global_slot(b.feature, s), db);
      }
      out.push_back(std::move(pc));
    }
  }
  return out;
}

double overlap_integral(std::span<const Feature> features, const DensityField& combined, double rho_min,
                        SparsePartials* partials) {
  const double cell = combined.grid.element_area();
  const double norm = 1.0 / (1.0 - rho_min);
  double total = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    AreaSample a = feature_area(features[i]);
    total += a.value;
    if (partials)
      for (int s = 0; s < kSlots; ++s)
        if (a.d[s] != 0.0) accumulate(*partials, global_slot(static_cast<int>(i), s), a.d[s]);
  }
  double mapped = 0.0;
  for (std::size_t e = 0; e < combined.rho.size(); ++e) {
    mapped += (combined.rho[e] - rho_min) * norm * cell;
    if (partials && combined.has_jacobian) accumulate(*partials, combined.jacobian[e], -norm * cell);
  }
  if (partials) std::sort(partials->begin(), partials->end());
  return total - mapped;
}

double overlap_auxiliary_density(std::span<const Feature> features, const Grid& grid, const MappingConfig& mapping,
                                 double min_gap, double p, SparsePartials* partials, int threads) {
  if (!(min_gap >= 0.0)) throw ValidationError("minimum gap must be nonnegative");
  if (mapping.argument != FieldKind::signed_distance && min_gap > 0.0)
    throw ValidationError("dilation by a gap needs the signed_distance argument");
  const bool jac = partials != nullptr;
  const double rho_min = mapping.boundary.rho_min;
  const double norm = 1.0 / (1.0 - rho_min);
  std::vector<DensityField> fields;
  for (std::size_t i = 0; i < features.size(); ++i) {
    FeatureField f(features[i], static_cast<int>(i), mapping.argument, 0.5 * min_gap);
    fields.push_back(map_field(f, grid, mapping.boundary, mapping.quadrature, jac, threads));
  }
  const int ne = grid.num_elements();
  std::vector<double> excess(ne, 0.0);
  for (int e = 0; e < ne; ++e) {
    double sum = 0.0;
    for (const auto& f : fields) sum += (f.rho[e] - rho_min) * norm;
    excess[e] = std::max(sum - 1.0, 0.0);
  }
  std::vector<double> w(jac ? ne : 0);
  double value = pnorm_aggregate(excess, p, w);
  if (jac) {
    for (int e = 0; e < ne; ++e) {
      if (w[e] == 0.0) continue;
      for (const auto& f : fields) accumulate(*partials, f.jacobian[e], w[e] * norm);
    }
    std::sort(partials->begin(), partials->end());
  }
  return value;
}

bool point_in_polygon(std::span<const Vec2> poly, const Vec2& x) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > x.y()) != (b.y() > x.y())) {
      double xc = (b.x() - a.x()) * (x.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (x.x() < xc) inside = !inside;
    }
  }
  return inside;
}

double distance_to_polygon(std::span<const Vec2> poly, const Vec2& x) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) d = std::min(d, segment_distance(poly[i], poly[(i + 1) % poly.size()], x));
  return d;
}

std::vector<Vec2> ghost_points(std::span<const Vec2> poly, double offset, double spacing) {
  if (poly.size() < 3) throw ValidationError("containment polygon needs at least 3 vertices");
  if (!(offset > 0.0) || !(spacing > 0.0)) throw ValidationError("ghost offset and spacing must be positive");
  const std::size_t n = poly.size();
  const double orient = signed_area(poly) > 0.0 ? 1.0 : -1.0;
  auto outward = [&](std::size_t i) {
    Vec2 e = poly[(i + 1) % n] - poly[i];
    Vec2 nrm(e.y(), -e.x());
    return Vec2(orient * nrm / nrm.norm());
  };
  std::vector<Vec2> cand;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % n];
    const Vec2 nrm = outward(i);
    const double len = (b - a).norm();
    const Vec2 dir = (b - a) / len;
    // extended by the offset so reflex corners are reached from both sides
    const double t0 = -offset, t1 = len + offset;
    const int steps = std::max(1, static_cast<int>(std::ceil((t1 - t0) / spacing)));
    for (int k = 0; k <= steps; ++k) cand.push_back(a + (t0 + (t1 - t0) * k / steps) * dir + offset * nrm);
    // corner at b
    const Vec2 n2 = outward((i + 1) % n);
    const Vec2 dir2 = poly[(i + 2) % n] - b;
    const double turn = orient * (dir.x() * dir2.y() - dir.y() * dir2.x());
    if (turn > 0.0) {
      double a0 = std::atan2(nrm.y(), nrm.x());
      double a1 = std::atan2(n2.y(), n2.x());
      double sweep = a1 - a0;
      while (sweep > std::numbers::pi) sweep -= 2.0 * std::numbers::pi;
      while (sweep < -std::numbers::pi) sweep += 2.0 * std::numbers::pi;
      int arc = std::max(1, static_cast<int>(std::ceil(std::abs(sweep) * offset / spacing)));
      for (int k = 0; k <= arc; ++k) {
        double ang = a0 + sweep * k / arc;
        cand.push_back(b + offset * Vec2(std::cos(ang), std::sin(ang)));
      }
    } else if (turn < 0.0) {
      cand.push_back(b + offset * (nrm + n2) / (1.0 + nrm.dot(n2)));
    }
  }
  std::vector<Vec2> out;
  for (const Vec2& c : cand) {
    if (point_in_polygon(poly, c)) continue;
    // drops extension points that fell inside the layer or past a convex corner
    if (std::abs(distance_to_polygon(poly, c) - offset) > 1e-9 * offset) continue;
    bool dup = false;
    for (const Vec2& o : out)
      if ((o - c).norm() < 1e-9 * offset) dup = true;
    if (!dup) out.push_back(c);
  }
  return out;
}

double ghost_containment(std::span<const Feature> features, std::span<const Vec2> ghosts,
                         const MappingConfig& mapping, double p, double threshold_factor,
                         SparsePartials* partials) {
  const double rho_min = mapping.boundary.rho_min;
  const std::size_t nf = features.size();
  std::vector<double> v(nf * ghosts.size(), 0.0);
  std::vector<SparsePartials> d(partials ? v.size() : 0);
  PointSample ps;
  for (std::size_t i = 0; i < nf; ++i) {
    FeatureField field(features[i], static_cast<int>(i), mapping.argument);
    for (std::size_t g = 0; g < ghosts.size(); ++g) {
      std::size_t k = i * ghosts.size() + g;
      if (partials) {
        field.sample(ghosts[g], ps);
        HeavisideValue h = heaviside_eval(mapping.boundary, ps.value);
        v[k] = std::max(h.value - rho_min, 0.0);
        if (h.derivative != 0.0) accumulate(d[k], ps.d, h.derivative);
      } else {
        v[k] = std::max(heaviside_eval(mapping.boundary, field.value(ghosts[g])).value - rho_min, 0.0);
      }
    }
  }
  if (v.empty()) return -(threshold_factor - 1.0) * rho_min;
  std::vector<double> w(partials ? v.size() : 0);
  double agg = pnorm_aggregate(v, p, w);
  if (partials) {
    for (std::size_t k = 0; k < v.size(); ++k)
      if (w[k] != 0.0) accumulate(*partials, d[k], w[k]);
    std::sort(partials->begin(), partials->end());
  }
  return agg - (threshold_factor - 1.0) * rho_min;
}

double aggregate(std::span<const double> values, double p, std::span<double> partials) {
  return ks_aggregate(values, p, partials);
}

std::string_view constraint_kind_name(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::volume: return "volume";
    case ConstraintKind::fcm_separation: return "fcm_separation";
    case ConstraintKind::overlap_integral: return "overlap_integral";
    case ConstraintKind::overlap_auxiliary: return "overlap_auxiliary";
    case ConstraintKind::containment: return "containment";
  }
  return "";
}

std::optional<ConstraintKind> parse_constraint_kind(std::string_view name) {
  for (auto k : {ConstraintKind::volume, ConstraintKind::fcm_separation, ConstraintKind::overlap_integral,
                 ConstraintKind::overlap_auxiliary, ConstraintKind::containment})
    if (constraint_kind_name(k) == name) return k;
  return std::nullopt;
}

void ConstraintSpec::validate() const {
  if (kind == ConstraintKind::volume && !(volume_fraction > 0.0 && volume_fraction <= 1.0))
    throw ValidationError("volume fraction must lie in (0, 1]");
  if (!(min_gap >= 0.0)) throw ValidationError("minimum gap must be nonnegative");
  if (!(p > 0.0)) throw ValidationError("aggregation parameter must be positive");
  if (!polygon.empty() && polygon.size() < 3) throw ValidationError("containment polygon needs at least 3 vertices");
  if (!(threshold_factor >= 1.0)) throw ValidationError("containment threshold factor must be >= 1");
}

std::vector<ConstraintValue> evaluate_constraints(std::span<const ConstraintSpec> specs, const Model& model,
                                                  const Evaluation& ev, bool gradients, int threads) {
  std::vector<ConstraintValue> out;
  const Grid& g = model.grid;
  const double domain = g.width() * g.height();
  const std::size_t nd = model.design.size();
  for (const auto& spec : specs) {
    spec.validate();
    ConstraintValue cv;
    cv.name = std::string(constraint_kind_name(spec.kind));
    cv.grad.assign(nd, 0.0);
    SparsePartials d;
    SparsePartials* dp = gradients ? &d : nullptr;
    switch (spec.kind) {
      case ConstraintKind::volume: {
        double vd = domain * model.material.thickness;
        cv.value = ev.volume / vd - spec.volume_fraction;
        if (gradients)
          for (std::size_t i = 0; i < nd; ++i) cv.grad[i] = ev.volume_grad[i] / vd;
        break;
      }
      case ConstraintKind::fcm_separation: {
        auto pairs = fcm_separation(ev.features, spec.min_gap);
        if (pairs.empty()) {
          cv.value = -1.0;
          break;
        }
        std::vector<double> vals(pairs.size()), w(pairs.size());
        for (std::size_t k = 0; k < pairs.size(); ++k) {
          vals[k] = pairs[k].value / g.l_el;
          cv.degenerate += pairs[k].degenerate ? 1 : 0;
        }
        cv.value = aggregate(vals, spec.p, w);
        if (gradients)
          for (std::size_t k = 0; k < pairs.size(); ++k) accumulate(d, pairs[k].d, w[k] / g.l_el);
        break;
      }
      case ConstraintKind::overlap_integral: {
        DensityField combined = map_features(ev.features, g, model.mapping, gradients, threads);
        cv.value = overlap_integral(ev.features, combined, model.mapping.boundary.rho_min, dp) / domain;
        for (auto& [s, v] : d) v /= domain;
        break;
      }
      case ConstraintKind::overlap_auxiliary:
        cv.value = overlap_auxiliary_density(ev.features, g, model.mapping, spec.min_gap, spec.p, dp, threads);
        break;
      case ConstraintKind::containment: {
        std::vector<Vec2> poly = spec.polygon.empty() ? grid_polygon(g) : spec.polygon;
        double off = spec.offset > 0.0 ? spec.offset : 0.5 * g.l_el;
        double sp = spec.spacing > 0.0 ? spec.spacing : g.l_el;
        auto ghosts = ghost_points(poly, off, sp);
        cv.value = ghost_containment(ev.features, ghosts, model.mapping, spec.p, spec.threshold_factor, dp);
        break;
      }
    }
    cv.differentiable = model.mapping.boundary.differentiable() || spec.kind == ConstraintKind::fcm_separation;
    if (gradients && spec.kind != ConstraintKind::volume) cv.grad = to_design(model, d);
    out.push_back(std::move(cv));
  }
  return out;
}

}  // namespace featmap
