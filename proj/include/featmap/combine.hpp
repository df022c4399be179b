#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "featmap/geometry.hpp"
#include "featmap/mapping.hpp"

namespace featmap {

enum class CombineStrategy { combine_then_map, map_then_combine_density, map_then_combine_heaviside };
enum class ExtremumKind { true_max, ks, pnorm, r_union, product_indicator };

std::string_view strategy_name(CombineStrategy s);
std::optional<CombineStrategy> parse_strategy(std::string_view name);
std::string_view extremum_name(ExtremumKind k);
std::optional<ExtremumKind> parse_extremum(std::string_view name);

struct CombineSpec {
  CombineStrategy strategy = CombineStrategy::combine_then_map;
  ExtremumKind extremum = ExtremumKind::ks;
  double p = 40.0;             // ks / pnorm aggregation parameter
  double size_penalty = 3.0;   // p_alpha

  void validate() const;
};

/// Union-type aggregate of `values`. When `partials` is non-empty it
/// receives d result / d values[i]. r_union folds left to right;
/// product_indicator multiplies. Throws ValidationError on empty input or
/// negative input to pnorm.
double smooth_extremum(ExtremumKind kind, std::span<const double> values, double p, std::span<double> partials = {});

/// max(v) <= ks(v) <= max(v) + ln(N) / p.
double ks_aggregate(std::span<const double> values, double p, std::span<double> partials = {});
/// (sum v^p)^(1/p) for v >= 0.
double pnorm_aggregate(std::span<const double> values, double p, std::span<double> partials = {});

enum class RBoolean { union_op, intersection_op };

/// f1 + f2 +- sqrt(f1^2 + f2^2). df receives the two partials when given.
double r_boolean(RBoolean op, double f1, double f2, double* df1 = nullptr, double* df2 = nullptr);

/// alpha^p_alpha * rho.
double effective_density(double rho, double alpha, double size_penalty);
std::vector<double> effective_density(std::span<const double> rho, double alpha, double size_penalty);

/// Point-wise combination of feature fields into one implicit field.
class CombinedField : public ImplicitField {
 public:
  CombinedField(std::span<const Feature> features, FieldKind kind, ExtremumKind extremum, double p);
  double value(const Vec2& x) const override;
  void sample(const Vec2& x, PointSample& out) const override;
  bool distance_argument() const override;
  bool lipschitz() const override;

 private:
  std::vector<FeatureField> fields_;
  std::vector<bool> lipschitz_;
  FieldKind kind_;
  ExtremumKind extremum_;
  double p_;
};

/// Full pseudo-density configuration of the mapping stage.
struct MappingConfig {
  BoundaryModel boundary;
  Quadrature quadrature;
  FieldKind argument = FieldKind::signed_distance;
  CombineSpec combine;

  void validate() const;
};

/// The combined density field of all features with partials against
/// global_slot(feature, slot).
DensityField map_features(std::span<const Feature> features, const Grid& grid, const MappingConfig& config,
                          bool jacobian, int threads = 0);

/// Element-wise combination of per-feature fields after size penalization.
/// `alphas` holds each feature's size variable.
DensityField combine_densities(std::span<const DensityField> fields, std::span<const double> alphas,
                               std::span<const int> feature_indices, const CombineSpec& spec, double rho_min);

}  // namespace featmap
