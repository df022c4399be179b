#pragma once

#include <functional>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "featmap/geometry.hpp"

namespace featmap {

/// Structured grid of square elements. Element e = ey * nx + ex covers
/// [origin + (ex, ey) * l_el, origin + (ex + 1, ey + 1) * l_el].
struct Grid {
  int nx = 1;
  int ny = 1;
  double l_el = 1.0;
  Vec2 origin{0.0, 0.0};

  void validate() const;
  int num_elements() const { return nx * ny; }
  int num_nodes() const { return (nx + 1) * (ny + 1); }
  int element(int ex, int ey) const { return ey * nx + ex; }
  int node(int ix, int iy) const { return iy * (nx + 1) + ix; }
  Vec2 element_min(int e) const { return origin + l_el * Vec2(e % nx, e / nx); }
  Vec2 centroid(int e) const { return element_min(e) + Vec2(0.5 * l_el, 0.5 * l_el); }
  Vec2 node_position(int n) const { return origin + l_el * Vec2(n % (nx + 1), n / (nx + 1)); }
  double width() const { return nx * l_el; }
  double height() const { return ny * l_el; }
  double element_area() const { return l_el * l_el; }
};

enum class BoundaryKind { exact, linear, poly3, cosine, tanh, circ_sample };

std::string_view boundary_kind_name(BoundaryKind kind);
std::optional<BoundaryKind> parse_boundary_kind(std::string_view name);

/// Smoothed Heaviside. `half_width` is h (the transition zone is 2h wide,
/// the sampling window radius for circ_sample); `beta` is the tanh steepness.
struct BoundaryModel {
  BoundaryKind kind = BoundaryKind::poly3;
  double half_width = 1.0;
  double beta = 6.5;
  double rho_min = 1e-6;

  void validate() const;
  bool differentiable() const { return kind != BoundaryKind::exact; }
  /// True when the value is exactly rho_min / 1 outside [-h, h].
  bool piecewise() const { return kind != BoundaryKind::tanh; }
  /// Half-width of the region where the value is not saturated.
  double band() const;
};

struct HeavisideValue {
  double value = 0.0;
  double derivative = 0.0;
  bool differentiable = true;
};

HeavisideValue heaviside_eval(const BoundaryModel& model, double arg);

enum class QuadratureKind { newton_cotes, quasi_analytic };

struct Quadrature {
  QuadratureKind kind = QuadratureKind::newton_cotes;
  int degree = 2;

  void validate() const;
  int points() const;
};

/// Sample position in the unit element [0,1]^2 and its weight.
struct QuadraturePoint {
  Vec2 local;
  double weight = 0.0;
};

inline constexpr int kGaussPoints = 32;

std::vector<QuadraturePoint> quadrature_points(const Quadrature& quadrature);
/// Gauss-Legendre nodes and weights on [0, 1].
const std::vector<std::pair<double, double>>& gauss_legendre_unit(int n);

/// 4 mu (1 - mu).
double grayness(double mu);

// ---------------------------------------------------------------------------
// Fields.

/// Partial derivatives keyed by global slot (see global_slot).
using SparsePartials = std::vector<std::pair<int, double>>;

void accumulate(SparsePartials& into, int slot, double value);
void accumulate(SparsePartials& into, const SparsePartials& from, double scale);

struct PointSample {
  double value = 0.0;
  SparsePartials d;
  bool differentiable = true;
};

/// Scalar field over the plane, positive inside.
class ImplicitField {
 public:
  virtual ~ImplicitField() = default;
  virtual double value(const Vec2& x) const = 0;
  virtual void sample(const Vec2& x, PointSample& out) const = 0;
  /// The value is a (possibly approximate) signed distance.
  virtual bool distance_argument() const = 0;
  /// |value(x) - value(y)| <= |x - y| is guaranteed.
  virtual bool lipschitz() const = 0;
};

/// Field of a single feature. Partials are reported against
/// global_slot(index, slot). `dilation` is added to the field value, which
/// grows a distance field outward by that length.
class FeatureField : public ImplicitField {
 public:
  FeatureField(const Feature& feature, int index, FieldKind kind, double dilation = 0.0);
  double value(const Vec2& x) const override;
  void sample(const Vec2& x, PointSample& out) const override;
  bool distance_argument() const override { return kind_ == FieldKind::signed_distance; }
  bool lipschitz() const override;

 private:
  Feature feature_;
  int index_;
  FieldKind kind_;
  double dilation_;
};

/// Element pseudo-densities and, optionally, their partials.
struct DensityField {
  Grid grid;
  std::vector<double> rho;
  bool has_jacobian = false;
  std::vector<SparsePartials> jacobian;
  /// Elements clamped after a from-above aggregation exceeded 1.
  int overshoot = 0;
  /// Non-differentiable samples met inside a transition band.
  int nondifferentiable = 0;

  /// Dense column of d rho / d slot for every element.
  std::vector<double> column(int slot) const;
};

/// Integrand at a point: density value and partials.
using PointIntegrand = std::function<void(const Vec2& x, bool partials, PointSample& out)>;

/// Mapping of one implicit field onto one element.
struct ElementDensity {
  double rho = 0.0;
  SparsePartials d;
  int nondifferentiable = 0;
};

ElementDensity element_density(const ImplicitField& field, const Grid& grid, int e, const BoundaryModel& model,
                               const Quadrature& quadrature, bool jacobian);

/// Density only.
double element_density(const ImplicitField& field, const Grid& grid, int e, const BoundaryModel& model,
                       const Quadrature& quadrature);

/// Partials only. Throws NotDifferentiableError for the exact model.
SparsePartials element_density_jacobian(const ImplicitField& field, const Grid& grid, int e,
                                        const BoundaryModel& model, const Quadrature& quadrature);

/// Maps a field onto every element of the grid.
DensityField map_field(const ImplicitField& field, const Grid& grid, const BoundaryModel& model,
                       const Quadrature& quadrature, bool jacobian, int threads = 0);

/// Weighted quadrature of an arbitrary point integrand, clamped to [rho_min, 1].
DensityField integrate_points(const Grid& grid, const Quadrature& quadrature, const PointIntegrand& integrand,
                              double rho_min, bool jacobian, int threads = 0);

}  // namespace featmap
