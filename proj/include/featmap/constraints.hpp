#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "featmap/combine.hpp"
#include "featmap/geometry.hpp"
#include "featmap/mapping.hpp"
#include "featmap/pipeline.hpp"

namespace featmap {

// Convention: value <= 0 means satisfied.

/// Circle covering part of a feature; partials of center and radius are
/// reported per slot of the owning feature.
struct SurrogateCircle {
  int feature = 0;
  Vec2 center;
  double radius = 0.0;
  SlotGradient dcx{}, dcy{}, dr{};
};

/// Bars: end caps plus ceil(L / 2r) - 1 evenly spaced axis circles, all of
/// radius sqrt(r^2 + (spacing / 2)^2) so the flanks between neighbouring
/// centers are covered. Circles: the circle itself.
std::vector<SurrogateCircle> surrogate_circles(const Feature& feature, int index);

struct PairConstraint {
  int circle_a = 0;
  int circle_b = 0;
  double value = 0.0;
  SparsePartials d;
  bool degenerate = false;  // coincident centers; a zero direction was used
};

/// (r_i + r_j + g) - |c_i - c_j| for every pair of circles from distinct
/// features.
std::vector<PairConstraint> fcm_separation(std::span<const Feature> features, double min_gap);

/// Sum of exact feature areas minus the integral of the combined field,
/// normalized by (rho - rho_min) / (1 - rho_min). Partials use the field's
/// Jacobian when present.
double overlap_integral(std::span<const Feature> features, const DensityField& combined, double rho_min,
                        SparsePartials* partials = nullptr);

/// p-norm over elements of max(sum_i rho'_i - 1, 0), with each feature's
/// distance field dilated by min_gap / 2 and rho' normalized as above.
double overlap_auxiliary_density(std::span<const Feature> features, const Grid& grid, const MappingConfig& mapping,
                                 double min_gap, double p, SparsePartials* partials = nullptr, int threads = 0);

/// Points outside `polygon` at distance `offset` from its boundary, spaced
/// at most `spacing` apart along the offset curve.
std::vector<Vec2> ghost_points(std::span<const Vec2> polygon, double offset, double spacing);

bool point_in_polygon(std::span<const Vec2> polygon, const Vec2& x);
double distance_to_polygon(std::span<const Vec2> polygon, const Vec2& x);

/// p-norm over features and ghost points of (H(field) - rho_min), minus
/// (threshold_factor - 1) rho_min.
double ghost_containment(std::span<const Feature> features, std::span<const Vec2> ghosts,
                         const MappingConfig& mapping, double p, double threshold_factor,
                         SparsePartials* partials = nullptr);

/// KS aggregate of constraint values.
double aggregate(std::span<const double> values, double p, std::span<double> partials = {});

enum class ConstraintKind { volume, fcm_separation, overlap_integral, overlap_auxiliary, containment };

std::string_view constraint_kind_name(ConstraintKind kind);
std::optional<ConstraintKind> parse_constraint_kind(std::string_view name);

struct ConstraintSpec {
  ConstraintKind kind = ConstraintKind::volume;
  double volume_fraction = 0.5;
  double min_gap = 0.0;
  double p = 40.0;
  std::vector<Vec2> polygon;   // containment domain; empty means the grid rectangle
  double offset = -1.0;        // ghost offset; negative means 0.5 l_el
  double spacing = -1.0;       // ghost spacing; negative means l_el
  double threshold_factor = 2.0;

  void validate() const;
};

struct ConstraintValue {
  std::string name;
  double value = 0.0;
  std::vector<double> grad;  // per design parameter
  bool differentiable = true;
  int degenerate = 0;
};

/// Optimizer-facing constraint values, scaled to be dimensionless:
/// volume as a fraction of the domain, FCM by l_el (KS-aggregated over
/// pairs), overlap_integral by the domain area.
std::vector<ConstraintValue> evaluate_constraints(std::span<const ConstraintSpec> specs, const Model& model,
                                                  const Evaluation& evaluation, bool gradients, int threads = 0);

}  // namespace featmap
