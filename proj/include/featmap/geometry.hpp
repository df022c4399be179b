#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace featmap {

using Vec2 = Eigen::Vector2d;

/// Offset surface of the segment [a, b]: all points within half_width of it.
struct Bar {
  Vec2 a{0.0, 0.0};
  Vec2 b{1.0, 0.0};
  double half_width = 0.5;
};

/// Superellipse 1 - (x'/a)^m - (y'/b)^m >= 0 in the frame rotated by `rotation`.
struct Hyperellipse {
  Vec2 center{0.0, 0.0};
  double semi_a = 1.0;
  double semi_b = 1.0;
  int exponent = 2;
  double rotation = 0.0;
};

struct Circle {
  Vec2 center{0.0, 0.0};
  double radius = 1.0;
};

struct RectangleAA {
  Vec2 corner_min{0.0, 0.0};
  Vec2 corner_max{1.0, 1.0};
};

using Shape = std::variant<Bar, Hyperellipse, Circle, RectangleAA>;

enum class ShapeKind { bar, hyperellipse, circle, rectangle };

/// A geometric primitive plus a rigid offset and a size variable.
///
/// Every feature carries `offset` (a translation applied to the whole shape)
/// and `size` (the penalized size variable alpha in [0, 1]). Both are
/// ordinary design parameters, so a rigid move of any primitive is a single
/// scalar parameter.
struct Feature {
  Shape shape;
  Vec2 offset{0.0, 0.0};
  double size = 1.0;
};

ShapeKind kind_of(const Feature& feature);
std::string_view kind_name(ShapeKind kind);

/// Throws ValidationError when the feature violates its invariants.
void validate(const Feature& feature);

Feature make_bar(Vec2 a, Vec2 b, double half_width);
Feature make_hyperellipse(Vec2 center, double semi_a, double semi_b, int exponent, double rotation = 0.0);
Feature make_circle(Vec2 center, double radius);
Feature make_rectangle(Vec2 corner_min, Vec2 corner_max);

// ---------------------------------------------------------------------------
// Parameter slots.
//
// Slots 0..4 are kind specific (see slot_name), followed by the two offset
// components and the size variable.

inline constexpr int kShapeSlots = 5;
inline constexpr int kOffsetX = 5;
inline constexpr int kOffsetY = 6;
inline constexpr int kSizeSlot = 7;
inline constexpr int kSlots = 8;

using SlotGradient = std::array<double, kSlots>;

/// Name of a slot for the given kind; empty when the slot is unused.
std::string_view slot_name(ShapeKind kind, int slot);
/// Slot for a parameter name, or -1.
int slot_index(ShapeKind kind, std::string_view name);
int slot_count_used(ShapeKind kind);

double get_param(const Feature& feature, int slot);
void set_param(Feature& feature, int slot, double value);

/// Flattened index of a feature slot in a feature list.
inline int global_slot(int feature, int slot) { return feature * kSlots + slot; }

// ---------------------------------------------------------------------------
// Field evaluation. Positive inside, zero on the boundary, negative outside.

/// Implicit value. For bars, circles and rectangles this is the exact signed
/// distance; for hyperellipses it is the superellipse function.
double implicit_value(const Feature& feature, const Vec2& point);

/// Signed distance. Exact for bars, circles and rectangles. Hyperellipses
/// return approx_signed_distance (first-order Taylor estimate).
double signed_distance(const Feature& feature, const Vec2& point);

/// phi / |grad phi| with the analytic spatial gradient. Where the gradient
/// magnitude underflows kGradientEpsilon the interior sentinel
/// kInteriorSentinel * feature_scale is returned.
double approx_signed_distance(const Feature& feature, const Vec2& point);

/// Spatial gradient of implicit_value.
Vec2 implicit_gradient(const Feature& feature, const Vec2& point);

inline constexpr double kGradientEpsilon = 1e-12;
inline constexpr double kInteriorSentinel = 1e6;

/// Characteristic length of the feature (bar length, radius, max semi-axis...).
double feature_scale(const Feature& feature);

/// Field value and its partial derivatives with respect to every slot.
///
/// `differentiable` is false at points where the field has no derivative
/// with respect to the shape (medial axes, centers, rectangle corners).
/// The partials there belong to one of the meeting branches, or are zero at
/// the singular point of a bar axis or circle center. Nothing is perturbed.
struct FieldSample {
  double value = 0.0;
  SlotGradient d{};
  bool differentiable = true;
};

enum class FieldKind { signed_distance, implicit };

FieldSample field_sample(const Feature& feature, const Vec2& point, FieldKind kind);
double field_value(const Feature& feature, const Vec2& point, FieldKind kind);

/// Partials of signed_distance with respect to the feature's slots.
inline FieldSample shape_param_jacobian(const Feature& feature, const Vec2& point) {
  return field_sample(feature, point, FieldKind::signed_distance);
}

/// Exact area of the solid and its slot partials.
struct AreaSample {
  double value = 0.0;
  SlotGradient d{};
};
AreaSample feature_area(const Feature& feature);

// ---------------------------------------------------------------------------
// Design vector.

struct DesignParam {
  int feature = 0;
  int slot = 0;
  double lower = 0.0;
  double upper = 1.0;
};

/// Ordered active parameters of a feature list.
class DesignVector {
 public:
  DesignVector() = default;
  explicit DesignVector(std::vector<DesignParam> params);

  /// Throws ValidationError on bad bounds or references.
  void validate(std::span<const Feature> features) const;

  std::size_t size() const { return params_.size(); }
  const DesignParam& operator[](std::size_t i) const { return params_[i]; }
  const std::vector<DesignParam>& params() const { return params_; }

  std::vector<double> values(std::span<const Feature> features) const;
  /// Writes s into a copy of the features.
  std::vector<Feature> apply(std::span<const Feature> features, std::span<const double> s) const;
  /// Picks the active entries out of a gradient indexed by global_slot.
  std::vector<double> gather(std::span<const double> slot_gradient) const;

  std::string label(std::size_t i, std::span<const Feature> features) const;
  double range(std::size_t i) const { return params_[i].upper - params_[i].lower; }

 private:
  std::vector<DesignParam> params_;
};

}  // namespace featmap
