#include "featmap/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "featmap/errors.hpp"
#include "featmap/parallel.hpp"

namespace featmap {
namespace {

std::vector<std::pair<double, double>> newton_cotes_1d(int degree) {
  switch (degree) {
    case 0: return {{0.5, 1.0}};
    case 1: return {{0.0, 0.5}, {1.0, 0.5}};
    case 2: return {{0.0, 1.0 / 6.0}, {0.5, 4.0 / 6.0}, {1.0, 1.0 / 6.0}};
    case 3: return {{0.0, 1.0 / 8.0}, {1.0 / 3.0, 3.0 / 8.0}, {2.0 / 3.0, 3.0 / 8.0}, {1.0, 1.0 / 8.0}};
  }
  throw ValidationError("Newton-Cotes degree must be 0, 1, 2 or 3");
}

std::vector<std::pair<double, double>> compute_gauss(int n) {
  std::vector<std::pair<double, double>> out(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    out[n - 1 - i] = {0.5 * (1.0 + x), 0.5 * w};
  }
  return out;
}

// Fraction of the unit segment where f >= 0, given samples on a uniform
// partition and a root finder for sign changes.
template <class F>
double positive_fraction(const F& f, int segments) {
  double length = 0.0;
  double t0 = 0.0;
  double f0 = f(t0);
  for (int k = 1; k <= segments; ++k) {
    double t1 = static_cast<double>(k) / segments;
    double f1 = f(t1);
    bool p0 = f0 >= 0.0, p1 = f1 >= 0.0;
    if (p0 && p1) {
      length += t1 - t0;
    } else if (p0 != p1) {
      double lo = t0, hi = t1;
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        if ((f(mid) >= 0.0) == p0) lo = mid;
        else hi = mid;
      }
      double root = 0.5 * (lo + hi);
      length += p0 ? root - t0 : t1 - root;
    }
    t0 = t1;
    f0 = f1;
  }
  return length;
}

constexpr int kRowSegments = 64;

}  // namespace

void Grid::validate() const {
  if (nx < 1 || ny < 1) throw ValidationError("grid needs nx >= 1 and ny >= 1");
  if (!(l_el > 0.0) || !std::isfinite(l_el)) throw ValidationError("grid element size must be positive");
  if (!std::isfinite(origin.x()) || !std::isfinite(origin.y())) throw ValidationError("grid origin must be finite");
}

std::string_view boundary_kind_name(BoundaryKind kind) {
  switch (kind) {
    case BoundaryKind::exact: return "exact";
    case BoundaryKind::linear: return "linear";
    case BoundaryKind::poly3: return "poly3";
    case BoundaryKind::cosine: return "cosine";
    case BoundaryKind::tanh: return "tanh";
    case BoundaryKind::circ_sample: return "circ_sample";
  }
  return "";
}

std::optional<BoundaryKind> parse_boundary_kind(std::string_view name) {
  for (auto k : {BoundaryKind::exact, BoundaryKind::linear, BoundaryKind::poly3, BoundaryKind::cosine,
                 BoundaryKind::tanh, BoundaryKind::circ_sample})
    if (boundary_kind_name(k) == name) return k;
  return std::nullopt;
}

void BoundaryModel::validate() const {
  if (!(rho_min > 0.0 && rho_min < 1.0)) throw ValidationError("rho_min must lie in (0, 1)");
  if (kind != BoundaryKind::exact && kind != BoundaryKind::tanh && !(half_width > 0.0 && std::isfinite(half_width)))
    throw ValidationError("boundary half_width must be positive");
  if (kind == BoundaryKind::tanh && !(beta > 0.0 && std::isfinite(beta)))
    throw ValidationError("tanh steepness beta must be positive");
}

double BoundaryModel::band() const {
  switch (kind) {
    case BoundaryKind::exact: return 0.0;
    case BoundaryKind::tanh: return std::numeric_limits<double>::infinity();
    default: return half_width;
  }
}

HeavisideValue heaviside_eval(const BoundaryModel& m, double d) {
  const double lo = m.rho_min;
  const double span = 1.0 - lo;
  const double h = m.half_width;
  HeavisideValue out;
  if (m.kind == BoundaryKind::exact) {
    out.value = d >= 0.0 ? 1.0 : lo;
    out.differentiable = d != 0.0;
    return out;
  }
  if (m.kind == BoundaryKind::tanh) {
    double z = m.beta * d;
    double sigma;
    if (z >= 0.0) {
      sigma = 1.0 / (1.0 + std::exp(-z));
    } else {
      double e = std::exp(z);
      sigma = e / (1.0 + e);
    }
    out.value = span * sigma + lo;
    out.derivative = span * m.beta * sigma * (1.0 - sigma);
    return out;
  }
  if (d <= -h) {
    out.value = lo;
    return out;
  }
  if (d >= h) {
    out.value = 1.0;
    return out;
  }
  double t = d / h;
  switch (m.kind) {
    case BoundaryKind::linear:
      out.value = span * d / (2.0 * h) + 0.5 * (1.0 + lo);
      out.derivative = span / (2.0 * h);
      break;
    case BoundaryKind::poly3:
      out.value = 0.75 * span * (t - t * t * t / 3.0) + 0.5 * (1.0 + lo);
      out.derivative = 0.75 * span * (1.0 - t * t) / h;
      break;
    case BoundaryKind::cosine: {
      double a = (d / (2.0 * h) - 0.5) * std::numbers::pi;
      out.value = 0.5 * span * std::cos(a) + 0.5 * (1.0 + lo);
      out.derivative = -0.5 * span * std::sin(a) * std::numbers::pi / (2.0 * h);
      break;
    }
    case BoundaryKind::circ_sample: {
      double root = std::sqrt(1.0 - t * t);
      out.value = lo + span * (std::acos(-t) + t * root) / std::numbers::pi;
      out.derivative = span * 2.0 * root / (std::numbers::pi * h);
      break;
    }
    default: break;
  }
  out.value = std::clamp(out.value, lo, 1.0);
  return out;
}

void Quadrature::validate() const {
  if (kind == QuadratureKind::newton_cotes && (degree < 0 || degree > 3))
    throw ValidationError("Newton-Cotes degree must be 0, 1, 2 or 3");
}

int Quadrature::points() const {
  if (kind == QuadratureKind::quasi_analytic) return kGaussPoints * kGaussPoints;
  return (degree + 1) * (degree + 1);
}

const std::vector<std::pair<double, double>>& gauss_legendre_unit(int n) {
  static const std::vector<std::pair<double, double>> g32 = compute_gauss(kGaussPoints);
  if (n == kGaussPoints) return g32;
  thread_local std::vector<std::pair<double, double>> other;
  other = compute_gauss(n);
  return other;
}

std::vector<QuadraturePoint> quadrature_points(const Quadrature& q) {
  q.validate();
  std::vector<std::pair<double, double>> rule =
      q.kind == QuadratureKind::quasi_analytic ? gauss_legendre_unit(kGaussPoints) : newton_cotes_1d(q.degree);
  std::vector<QuadraturePoint> pts;
  pts.reserve(rule.size() * rule.size());
  for (const auto& [y, wy] : rule)
    for (const auto& [x, wx] : rule) pts.push_back({Vec2(x, y), wx * wy});
  return pts;
}

double grayness(double mu) { return 4.0 * mu * (1.0 - mu); }

void accumulate(SparsePartials& into, int slot, double value) {
  for (auto& [s, v] : into) {
    if (s == slot) {
      v += value;
      return;
    }
  }
  into.emplace_back(slot, value);
}

void accumulate(SparsePartials& into, const SparsePartials& from, double scale) {
  for (const auto& [s, v] : from) accumulate(into, s, scale * v);
}

FeatureField::FeatureField(const Feature& feature, int index, FieldKind kind, double dilation)
    : feature_(feature), index_(index), kind_(kind), dilation_(dilation) {}

double FeatureField::value(const Vec2& x) const { return field_value(feature_, x, kind_) + dilation_; }

void FeatureField::sample(const Vec2& x, PointSample& out) const {
  FieldSample s = field_sample(feature_, x, kind_);
  out.value = s.value + dilation_;
  out.differentiable = s.differentiable;
  out.d.clear();
  for (int i = 0; i < kSlots; ++i)
    if (s.d[i] != 0.0) out.d.emplace_back(global_slot(index_, i), s.d[i]);
}

bool FeatureField::lipschitz() const {
  return kind_of(feature_) != ShapeKind::hyperellipse;
}

std::vector<double> DensityField::column(int slot) const {
  std::vector<double> c(rho.size(), 0.0);
  if (!has_jacobian) return c;
  for (std::size_t e = 0; e < jacobian.size(); ++e)
    for (const auto& [s, v] : jacobian[e])
      if (s == slot) c[e] += v;
  return c;
}

namespace {

ElementDensity map_element(const ImplicitField& field, const Grid& grid, int e, const BoundaryModel& model,
                           const std::vector<QuadraturePoint>& points, const Quadrature& quadrature, bool jacobian) {
  ElementDensity out;
  const double l = grid.l_el;
  const Vec2 x0 = grid.element_min(e);

  if (model.kind == BoundaryKind::circ_sample) {
    if (!field.distance_argument())
      throw ValidationError("circ_sample needs a signed-distance argument");
    Vec2 c = grid.centroid(e);
    if (jacobian) {
      PointSample ps;
      field.sample(c, ps);
      HeavisideValue h = heaviside_eval(model, ps.value);
      out.rho = h.value;
      if (h.derivative != 0.0) {
        accumulate(out.d, ps.d, h.derivative);
        if (!ps.differentiable) ++out.nondifferentiable;
      }
    } else {
      out.rho = heaviside_eval(model, field.value(c)).value;
    }
    return out;
  }

  if (field.lipschitz() && model.piecewise()) {
    double dc = field.value(grid.centroid(e));
    double reach = 0.5 * std::numbers::sqrt2 * l + model.band();
    if (dc > reach) {
      out.rho = 1.0;
      return out;
    }
    if (dc < -reach) {
      out.rho = model.rho_min;
      return out;
    }
  }

  if (model.kind == BoundaryKind::exact && quadrature.kind == QuadratureKind::quasi_analytic) {
    // Lines run across the boundary: a boundary nearly parallel to the lines
    // would make the Gauss direction integrate a step.
    const Vec2 c = x0 + Vec2(0.5 * l, 0.5 * l);
    const double eps = 1e-3 * l;
    double gx = field.value(c + Vec2(eps, 0)) - field.value(c - Vec2(eps, 0));
    double gy = field.value(c + Vec2(0, eps)) - field.value(c - Vec2(0, eps));
    const bool along_x = std::abs(gx) >= std::abs(gy);
    double frac = 0.0;
    for (const auto& [u, wu] : gauss_legendre_unit(kGaussPoints)) {
      if (along_x) {
        double py = x0.y() + l * u;
        frac += wu * positive_fraction([&](double t) { return field.value(Vec2(x0.x() + l * t, py)); }, kRowSegments);
      } else {
        double px = x0.x() + l * u;
        frac += wu * positive_fraction([&](double t) { return field.value(Vec2(px, x0.y() + l * t)); }, kRowSegments);
      }
    }
    out.rho = std::clamp(model.rho_min + (1.0 - model.rho_min) * frac, model.rho_min, 1.0);
    return out;
  }

  double rho = 0.0;
  PointSample ps;
  for (const auto& q : points) {
    Vec2 x = x0 + l * q.local;
    if (jacobian) {
      field.sample(x, ps);
      HeavisideValue h = heaviside_eval(model, ps.value);
      rho += q.weight * h.value;
      if (h.derivative != 0.0) {
        accumulate(out.d, ps.d, q.weight * h.derivative);
        if (!ps.differentiable) ++out.nondifferentiable;
      }
    } else {
      rho += q.weight * heaviside_eval(model, field.value(x)).value;
    }
  }
  out.rho = std::clamp(rho, model.rho_min, 1.0);
  return out;
}

void sort_partials(SparsePartials& p) {
  std::sort(p.begin(), p.end());
}

}  // namespace

ElementDensity element_density(const ImplicitField& field, const Grid& grid, int e, const BoundaryModel& model,
                               const Quadrature& quadrature, bool jacobian) {
  if (jacobian && !model.differentiable())
    throw NotDifferentiableError("the exact Heaviside has no density derivative; choose a smooth boundary model");
  auto points = quadrature_points(quadrature);
  ElementDensity out = map_element(field, grid, e, model, points, quadrature, jacobian);
  sort_partials(out.d);
  return out;
}

double element_density(const ImplicitField& field, const Grid& grid, int e, const BoundaryModel& model,
                       const Quadrature& quadrature) {
  return element_density(field, grid, e, model, quadrature, false).rho;
}

SparsePartials element_density_jacobian(const ImplicitField& field, const Grid& grid, int e,
                                        const BoundaryModel& model, const Quadrature& quadrature) {
  return element_density(field, grid, e, model, quadrature, true).d;
}

DensityField map_field(const ImplicitField& field, const Grid& grid, const BoundaryModel& model,
                       const Quadrature& quadrature, bool jacobian, int threads) {
  grid.validate();
  model.validate();
  quadrature.validate();
  if (jacobian && !model.differentiable())
    throw NotDifferentiableError("the exact Heaviside has no density derivative; choose a smooth boundary model");
  if (model.kind == BoundaryKind::circ_sample && !field.distance_argument())
    throw ValidationError("circ_sample needs a signed-distance argument");
  const int ne = grid.num_elements();
  DensityField out;
  out.grid = grid;
  out.rho.assign(ne, model.rho_min);
  out.has_jacobian = jacobian;
  if (jacobian) out.jacobian.assign(ne, {});
  std::vector<int> nondiff(ne, 0);
  auto points = quadrature_points(quadrature);
  parallel_for(ne, threads, [&](int begin, int end) {
    for (int e = begin; e < end; ++e) {
      ElementDensity r = map_element(field, grid, e, model, points, quadrature, jacobian);
      out.rho[e] = r.rho;
      nondiff[e] = r.nondifferentiable;
      if (jacobian) {
        sort_partials(r.d);
        out.jacobian[e] = std::move(r.d);
      }
    }
  });
  for (int n : nondiff) out.nondifferentiable += n;
  return out;
}

DensityField integrate_points(const Grid& grid, const Quadrature& quadrature, const PointIntegrand& integrand,
                              double rho_min, bool jacobian, int threads) {
  grid.validate();
  const int ne = grid.num_elements();
  DensityField out;
  out.grid = grid;
  out.rho.assign(ne, rho_min);
  out.has_jacobian = jacobian;
  if (jacobian) out.jacobian.assign(ne, {});
  std::vector<int> over(ne, 0), nondiff(ne, 0);
  auto points = quadrature_points(quadrature);
  parallel_for(ne, threads, [&](int begin, int end) {
    PointSample ps;
    for (int e = begin; e < end; ++e) {
      Vec2 x0 = grid.element_min(e);
      double rho = 0.0;
      SparsePartials d;
      bool uniform = true;
      double first = 0.0;
      for (const auto& q : points) {
        ps.d.clear();
        ps.differentiable = true;
        integrand(x0 + grid.l_el * q.local, jacobian, ps);
        rho += q.weight * ps.value;
        if (&q == &points.front()) first = ps.value;
        uniform = uniform && ps.value == first;
        if (jacobian) {
          accumulate(d, ps.d, q.weight);
          if (!ps.differentiable && !ps.d.empty()) ++nondiff[e];
        }
      }
      // weights do not sum to exactly one in floating point
      if (uniform) rho = first;
      if (rho > 1.0 + 1e-12) {
        over[e] = 1;
        d.clear();
      }
      if (rho < rho_min) d.clear();
      out.rho[e] = std::clamp(rho, rho_min, 1.0);
      if (jacobian) {
        sort_partials(d);
        out.jacobian[e] = std::move(d);
      }
    }
  });
  for (int e = 0; e < ne; ++e) {
    out.overshoot += over[e];
    out.nondifferentiable += nondiff[e];
  }
  return out;
}

}  // namespace featmap
