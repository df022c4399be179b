#pragma once

#include <optional>
#include <string_view>

namespace featmap {

enum class InterpolationKind { linear, power, ramp, hs_bound };

std::string_view interpolation_name(InterpolationKind kind);
std::optional<InterpolationKind> parse_interpolation(std::string_view name);

struct MaterialModel {
  InterpolationKind kind = InterpolationKind::power;
  double p = 3.0;  // power law exponent
  double q = 1.0;  // RAMP parameter
  double youngs = 1.0;
  double poisson = 0.3;
  double thickness = 1.0;

  /// Throws ValidationError; hs_bound is only defined for poisson = 0.3.
  void validate() const;
};

struct Interpolated {
  double mu = 0.0;
  double dmu = 0.0;
};

/// Stiffness scale mu(rho) and d mu / d rho.
Interpolated interpolate(const MaterialModel& model, double rho);

}  // namespace featmap
