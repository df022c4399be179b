#include "featmap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/AutoDiff>

#include "featmap/errors.hpp"

namespace featmap {
namespace {

// Derivative directions: slots 0..6 (shape + offset) and the query point.
constexpr int kDirs = 9;
constexpr int kDirX = 7;
constexpr int kDirY = 8;
using AD = Eigen::AutoDiffScalar<Eigen::Matrix<double, kDirs, 1>>;

template <class T>
T ipow(T v, int n) {
  T r = T(1.0);
  for (int i = 0; i < n; ++i) r = r * v;
  return r;
}

double value_of(double v) { return v; }
double value_of(const AD& v) { return v.value(); }

template <class T>
struct Params {
  std::array<T, kShapeSlots> s;
  T ox, oy, x, y;
};

template <class T>
struct Eval {
  T value;
  bool differentiable = true;
  bool singular = false;  // derivative undefined, partials must be zeroed
};

template <class T>
Eval<T> eval_bar(const Params<T>& p, double scale) {
  using std::sqrt;
  T qx = p.x - p.ox, qy = p.y - p.oy;
  T abx = p.s[2] - p.s[0], aby = p.s[3] - p.s[1];
  T apx = qx - p.s[0], apy = qy - p.s[1];
  T len2 = abx * abx + aby * aby;
  T t = (apx * abx + apy * aby) / len2;
  double tv = value_of(t);
  if (tv < 0.0) t = T(0.0);
  if (tv > 1.0) t = T(1.0);
  T dx = apx - t * abx, dy = apy - t * aby;
  T dist2 = dx * dx + dy * dy;
  double tol = 1e-12 * scale;
  if (value_of(dist2) <= tol * tol) {
    return {T(value_of(p.s[4]) - std::sqrt(value_of(dist2))), false, true};
  }
  return {p.s[4] - sqrt(dist2), true, false};
}

template <class T>
Eval<T> eval_circle(const Params<T>& p, double scale) {
  using std::sqrt;
  T dx = p.x - p.ox - p.s[0], dy = p.y - p.oy - p.s[1];
  T dist2 = dx * dx + dy * dy;
  double tol = 1e-12 * scale;
  if (value_of(dist2) <= tol * tol) {
    return {T(value_of(p.s[2]) - std::sqrt(value_of(dist2))), false, true};
  }
  return {p.s[2] - sqrt(dist2), true, false};
}

template <class T>
Eval<T> eval_rectangle(const Params<T>& p, double scale) {
  using std::sqrt;
  T qx = p.x - p.ox, qy = p.y - p.oy;
  std::array<T, 4> faces = {qx - p.s[0], p.s[2] - qx, qy - p.s[1], p.s[3] - qy};
  bool inside = true;
  for (auto& f : faces) inside = inside && value_of(f) >= 0.0;
  if (inside) {
    int best = 0;
    for (int i = 1; i < 4; ++i)
      if (value_of(faces[i]) < value_of(faces[best])) best = i;
    bool tie = false;
    for (int i = 0; i < 4; ++i)
      if (i != best && value_of(faces[i]) - value_of(faces[best]) <= 1e-12 * scale) tie = true;
    return {faces[best], !tie, false};
  }
  T ex = T(0.0), ey = T(0.0);
  bool has_x = false, has_y = false;
  if (value_of(faces[0]) < 0.0) { ex = -faces[0]; has_x = true; }
  if (value_of(faces[1]) < 0.0) { ex = -faces[1]; has_x = true; }
  if (value_of(faces[2]) < 0.0) { ey = -faces[2]; has_y = true; }
  if (value_of(faces[3]) < 0.0) { ey = -faces[3]; has_y = true; }
  if (has_x && has_y) return {-sqrt(ex * ex + ey * ey), true, false};
  if (has_x) return {-ex, true, false};
  return {-ey, true, false};
}

// Superellipse implicit value and its analytic spatial gradient.
template <class T>
void hyperellipse_phi(const Params<T>& p, int m, T& phi, T& gx, T& gy) {
  using std::cos;
  using std::sin;
  T c = cos(p.s[4]), s = sin(p.s[4]);
  T rx = p.x - p.ox - p.s[0], ry = p.y - p.oy - p.s[1];
  T xl = c * rx + s * ry;
  T yl = -s * rx + c * ry;
  T u = xl / p.s[2], v = yl / p.s[3];
  T um1 = ipow(u, m - 1), vm1 = ipow(v, m - 1);
  phi = T(1.0) - um1 * u - vm1 * v;
  T dxl = -double(m) * um1 / p.s[2];
  T dyl = -double(m) * vm1 / p.s[3];
  gx = dxl * c - dyl * s;
  gy = dxl * s + dyl * c;
}

template <class T>
Eval<T> eval_hyperellipse(const Params<T>& p, int m, double scale, FieldKind kind) {
  using std::sqrt;
  T phi, gx, gy;
  hyperellipse_phi(p, m, phi, gx, gy);
  if (kind == FieldKind::implicit) return {phi, true, false};
  T g2 = gx * gx + gy * gy;
  if (value_of(g2) <= kGradientEpsilon * kGradientEpsilon) {
    return {T(kInteriorSentinel * scale), false, true};
  }
  return {phi / sqrt(g2), true, false};
}

std::array<double, kShapeSlots> shape_params(const Feature& f) {
  std::array<double, kShapeSlots> s{};
  for (int i = 0; i < kShapeSlots; ++i) s[i] = get_param(f, i);
  return s;
}

template <class T>
Eval<T> eval_any(const Feature& f, const Params<T>& p, FieldKind kind) {
  double scale = feature_scale(f);
  switch (kind_of(f)) {
    case ShapeKind::bar: return eval_bar(p, scale);
    case ShapeKind::circle: return eval_circle(p, scale);
    case ShapeKind::rectangle: return eval_rectangle(p, scale);
    case ShapeKind::hyperellipse:
      return eval_hyperellipse(p, std::get<Hyperellipse>(f.shape).exponent, scale, kind);
  }
  return {T(0.0), false, true};
}

Params<double> plain_params(const Feature& f, const Vec2& x) {
  Params<double> p;
  p.s = shape_params(f);
  p.ox = f.offset.x();
  p.oy = f.offset.y();
  p.x = x.x();
  p.y = x.y();
  return p;
}

Params<AD> ad_params(const Feature& f, const Vec2& x) {
  auto s = shape_params(f);
  Params<AD> p;
  for (int i = 0; i < kShapeSlots; ++i) p.s[i] = AD(s[i], kDirs, i);
  p.ox = AD(f.offset.x(), kDirs, kOffsetX);
  p.oy = AD(f.offset.y(), kDirs, kOffsetY);
  p.x = AD(x.x(), kDirs, kDirX);
  p.y = AD(x.y(), kDirs, kDirY);
  return p;
}

constexpr std::array<std::string_view, kShapeSlots> kBarSlots = {"ax", "ay", "bx", "by", "half_width"};
constexpr std::array<std::string_view, kShapeSlots> kHyperSlots = {"cx", "cy", "semi_a", "semi_b", "rotation"};
constexpr std::array<std::string_view, kShapeSlots> kCircleSlots = {"cx", "cy", "radius", "", ""};
constexpr std::array<std::string_view, kShapeSlots> kRectSlots = {"x_min", "y_min", "x_max", "y_max", ""};

bool finite(const Vec2& v) { return std::isfinite(v.x()) && std::isfinite(v.y()); }

}  // namespace

ShapeKind kind_of(const Feature& feature) {
  return static_cast<ShapeKind>(feature.shape.index());
}

std::string_view kind_name(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::bar: return "bar";
    case ShapeKind::hyperellipse: return "hyperellipse";
    case ShapeKind::circle: return "circle";
    case ShapeKind::rectangle: return "rectangle";
  }
  return "";
}

void validate(const Feature& f) {
  if (!finite(f.offset)) throw ValidationError("feature offset must be finite");
  if (!(f.size >= 0.0 && f.size <= 1.0)) throw ValidationError("feature size variable must lie in [0, 1]");
  std::visit(
      [](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Bar>) {
          if (!finite(s.a) || !finite(s.b) || !std::isfinite(s.half_width))
            throw ValidationError("bar parameters must be finite");
          if (!(s.half_width > 0.0)) throw ValidationError("bar half_width must be positive");
          if ((s.a - s.b).norm() == 0.0)
            throw ValidationError("bar endpoints coincide; use a circle for a zero-length bar");
        } else if constexpr (std::is_same_v<S, Hyperellipse>) {
          if (!finite(s.center) || !std::isfinite(s.rotation))
            throw ValidationError("hyperellipse parameters must be finite");
          if (!(s.semi_a > 0.0) || !(s.semi_b > 0.0) || !std::isfinite(s.semi_a) || !std::isfinite(s.semi_b))
            throw ValidationError("hyperellipse semi axes must be positive");
          if (s.exponent < 2 || s.exponent % 2 != 0)
            throw ValidationError("hyperellipse exponent must be an even integer >= 2");
        } else if constexpr (std::is_same_v<S, Circle>) {
          if (!finite(s.center)) throw ValidationError("circle center must be finite");
          if (!(s.radius > 0.0) || !std::isfinite(s.radius)) throw ValidationError("circle radius must be positive");
        } else {
          if (!finite(s.corner_min) || !finite(s.corner_max))
            throw ValidationError("rectangle corners must be finite");
          if (!(s.corner_min.x() < s.corner_max.x() && s.corner_min.y() < s.corner_max.y()))
            throw ValidationError("rectangle corner_min must be componentwise less than corner_max");
        }
      },
      f.shape);
}

Feature make_bar(Vec2 a, Vec2 b, double half_width) {
  Feature f{Bar{a, b, half_width}};
  validate(f);
  return f;
}

Feature make_hyperellipse(Vec2 center, double semi_a, double semi_b, int exponent, double rotation) {
  Feature f{Hyperellipse{center, semi_a, semi_b, exponent, rotation}};
  validate(f);
  return f;
}

Feature make_circle(Vec2 center, double radius) {
  Feature f{Circle{center, radius}};
  validate(f);
  return f;
}

Feature make_rectangle(Vec2 corner_min, Vec2 corner_max) {
  Feature f{RectangleAA{corner_min, corner_max}};
  validate(f);
  return f;
}

std::string_view slot_name(ShapeKind kind, int slot) {
  if (slot == kOffsetX) return "offset_x";
  if (slot == kOffsetY) return "offset_y";
  if (slot == kSizeSlot) return "size";
  if (slot < 0 || slot >= kShapeSlots) return "";
  switch (kind) {
    case ShapeKind::bar: return kBarSlots[slot];
    case ShapeKind::hyperellipse: return kHyperSlots[slot];
    case ShapeKind::circle: return kCircleSlots[slot];
    case ShapeKind::rectangle: return kRectSlots[slot];
  }
  return "";
}

int slot_index(ShapeKind kind, std::string_view name) {
  if (name.empty()) return -1;
  for (int i = 0; i < kSlots; ++i)
    if (slot_name(kind, i) == name) return i;
  return -1;
}

int slot_count_used(ShapeKind kind) {
  int n = 0;
  for (int i = 0; i < kSlots; ++i)
    if (!slot_name(kind, i).empty()) ++n;
  return n;
}

double get_param(const Feature& f, int slot) {
  if (slot == kOffsetX) return f.offset.x();
  if (slot == kOffsetY) return f.offset.y();
  if (slot == kSizeSlot) return f.size;
  return std::visit(
      [slot](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Bar>) {
          switch (slot) {
            case 0: return s.a.x();
            case 1: return s.a.y();
            case 2: return s.b.x();
            case 3: return s.b.y();
            case 4: return s.half_width;
          }
        } else if constexpr (std::is_same_v<S, Hyperellipse>) {
          switch (slot) {
            case 0: return s.center.x();
            case 1: return s.center.y();
            case 2: return s.semi_a;
            case 3: return s.semi_b;
            case 4: return s.rotation;
          }
        } else if constexpr (std::is_same_v<S, Circle>) {
          switch (slot) {
            case 0: return s.center.x();
            case 1: return s.center.y();
            case 2: return s.radius;
          }
        } else {
          switch (slot) {
            case 0: return s.corner_min.x();
            case 1: return s.corner_min.y();
            case 2: return s.corner_max.x();
            case 3: return s.corner_max.y();
          }
        }
        return 0.0;
      },
      f.shape);
}

void set_param(Feature& f, int slot, double value) {
  if (slot_name(kind_of(f), slot).empty()) {
    std::ostringstream msg;
    msg << "slot " << slot << " is not a parameter of a " << kind_name(kind_of(f));
    throw ValidationError(msg.str());
  }
  if (slot == kOffsetX) { f.offset.x() = value; return; }
  if (slot == kOffsetY) { f.offset.y() = value; return; }
  if (slot == kSizeSlot) { f.size = value; return; }
  std::visit(
      [slot, value](auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Bar>) {
          double* p[] = {&s.a.x(), &s.a.y(), &s.b.x(), &s.b.y(), &s.half_width};
          *p[slot] = value;
        } else if constexpr (std::is_same_v<S, Hyperellipse>) {
          double* p[] = {&s.center.x(), &s.center.y(), &s.semi_a, &s.semi_b, &s.rotation};
          *p[slot] = value;
        } else if constexpr (std::is_same_v<S, Circle>) {
          double* p[] = {&s.center.x(), &s.center.y(), &s.radius};
          *p[slot] = value;
        } else {
          double* p[] = {&s.corner_min.x(), &s.corner_min.y(), &s.corner_max.x(), &s.corner_max.y()};
          *p[slot] = value;
        }
      },
      f.shape);
}

double feature_scale(const Feature& f) {
  return std::visit(
      [](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Bar>) {
          return std::max((s.b - s.a).norm(), s.half_width);
        } else if constexpr (std::is_same_v<S, Hyperellipse>) {
          return std::max(s.semi_a, s.semi_b);
        } else if constexpr (std::is_same_v<S, Circle>) {
          return s.radius;
        } else {
          Vec2 d = s.corner_max - s.corner_min;
          return std::max(d.x(), d.y());
        }
      },
      f.shape);
}

double implicit_value(const Feature& f, const Vec2& x) { return field_value(f, x, FieldKind::implicit); }

double signed_distance(const Feature& f, const Vec2& x) {
  return field_value(f, x, FieldKind::signed_distance);
}

double approx_signed_distance(const Feature& f, const Vec2& x) {
  double phi = implicit_value(f, x);
  Vec2 g = implicit_gradient(f, x);
  double n = g.norm();
  if (n <= kGradientEpsilon) return kInteriorSentinel * feature_scale(f);
  return phi / n;
}

Vec2 implicit_gradient(const Feature& f, const Vec2& x) {
  if (kind_of(f) == ShapeKind::hyperellipse) {
    auto p = plain_params(f, x);
    double phi, gx, gy;
    hyperellipse_phi(p, std::get<Hyperellipse>(f.shape).exponent, phi, gx, gy);
    return {gx, gy};
  }
  FieldSample s = field_sample(f, x, FieldKind::implicit);
  // d/dx of a field of (x - offset) is minus its offset partial
  return {-s.d[kOffsetX], -s.d[kOffsetY]};
}

double field_value(const Feature& f, const Vec2& x, FieldKind kind) {
  return eval_any(f, plain_params(f, x), kind).value;
}

FieldSample field_sample(const Feature& f, const Vec2& x, FieldKind kind) {
  Eval<AD> e = eval_any(f, ad_params(f, x), kind);
  FieldSample out;
  out.value = e.value.value();
  out.differentiable = e.differentiable;
  if (!e.singular && e.value.derivatives().size() == kDirs) {
    for (int i = 0; i < kSizeSlot; ++i) out.d[i] = e.value.derivatives()[i];
  }
  return out;
}

AreaSample feature_area(const Feature& f) {
  AreaSample out;
  std::visit(
      [&out](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Bar>) {
          Vec2 ab = s.b - s.a;
          double len = ab.norm();
          double r = s.half_width;
          out.value = 2.0 * r * len + std::numbers::pi * r * r;
          Vec2 dlen_db = ab / len;
          out.d[0] = -2.0 * r * dlen_db.x();
          out.d[1] = -2.0 * r * dlen_db.y();
          out.d[2] = 2.0 * r * dlen_db.x();
          out.d[3] = 2.0 * r * dlen_db.y();
          out.d[4] = 2.0 * len + 2.0 * std::numbers::pi * r;
        } else if constexpr (std::is_same_v<S, Hyperellipse>) {
          double m = s.exponent;
          double k = 4.0 * std::exp(2.0 * std::lgamma(1.0 + 1.0 / m) - std::lgamma(1.0 + 2.0 / m));
          out.value = k * s.semi_a * s.semi_b;
          out.d[2] = k * s.semi_b;
          out.d[3] = k * s.semi_a;
        } else if constexpr (std::is_same_v<S, Circle>) {
          out.value = std::numbers::pi * s.radius * s.radius;
          out.d[2] = 2.0 * std::numbers::pi * s.radius;
        } else {
          Vec2 d = s.corner_max - s.corner_min;
          out.value = d.x() * d.y();
          out.d[0] = -d.y();
          out.d[1] = -d.x();
          out.d[2] = d.y();
          out.d[3] = d.x();
        }
      },
      f.shape);
  return out;
}

DesignVector::DesignVector(std::vector<DesignParam> params) : params_(std::move(params)) {}

void DesignVector::validate(std::span<const Feature> features) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    std::ostringstream where;
    where << "design parameter " << i;
    if (p.feature < 0 || p.feature >= static_cast<int>(features.size()))
      throw ValidationError(where.str() + " references a missing feature");
    if (slot_name(kind_of(features[p.feature]), p.slot).empty())
      throw ValidationError(where.str() + " references an unknown parameter");
    if (!std::isfinite(p.lower) || !std::isfinite(p.upper) || !(p.lower < p.upper))
      throw ValidationError(where.str() + " needs finite bounds with lower < upper");
    if (p.slot == kSizeSlot && (p.lower < 0.0 || p.upper > 1.0))
      throw ValidationError(where.str() + ": size bounds must lie in [0, 1]");
    double v = get_param(features[p.feature], p.slot);
    if (v < p.lower || v > p.upper)
      throw ValidationError(where.str() + " starts at " + std::to_string(v) + ", outside its bounds");
    for (std::size_t j = 0; j < i; ++j)
      if (params_[j].feature == p.feature && params_[j].slot == p.slot)
        throw ValidationError(where.str() + " duplicates an earlier parameter");
  }
}

std::vector<double> DesignVector::values(std::span<const Feature> features) const {
  std::vector<double> s(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) s[i] = get_param(features[params_[i].feature], params_[i].slot);
  return s;
}

std::vector<Feature> DesignVector::apply(std::span<const Feature> features, std::span<const double> s) const {
  if (s.size() != params_.size()) throw ValidationError("design vector length mismatch");
  std::vector<Feature> out(features.begin(), features.end());
  for (std::size_t i = 0; i < params_.size(); ++i) set_param(out[params_[i].feature], params_[i].slot, s[i]);
  return out;
}

std::vector<double> DesignVector::gather(std::span<const double> slot_gradient) const {
  std::vector<double> g(params_.size(), 0.0);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    std::size_t k = static_cast<std::size_t>(global_slot(params_[i].feature, params_[i].slot));
    if (k < slot_gradient.size()) g[i] = slot_gradient[k];
  }
  return g;
}

std::string DesignVector::label(std::size_t i, std::span<const Feature> features) const {
  const auto& p = params_[i];
  std::ostringstream out;
  out << "f" << p.feature << "." << slot_name(kind_of(features[p.feature]), p.slot);
  return out.str();
}

}  // namespace featmap
