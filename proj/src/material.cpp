#include "featmap/material.hpp"

#include <cmath>

#include "featmap/errors.hpp"

namespace featmap {

std::string_view interpolation_name(InterpolationKind kind) {
  switch (kind) {
    case InterpolationKind::linear: return "linear";
    case InterpolationKind::power: return "power";
    case InterpolationKind::ramp: return "ramp";
    case InterpolationKind::hs_bound: return "hs_bound";
  }
  return "";
}

std::optional<InterpolationKind> parse_interpolation(std::string_view name) {
  for (auto k : {InterpolationKind::linear, InterpolationKind::power, InterpolationKind::ramp,
                 InterpolationKind::hs_bound})
    if (interpolation_name(k) == name) return k;
  return std::nullopt;
}

void MaterialModel::validate() const {
  if (!(youngs > 0.0) || !std::isfinite(youngs)) throw ValidationError("Young's modulus must be positive");
  if (!(poisson > 0.0 && poisson < 0.5)) throw ValidationError("Poisson ratio must lie in (0, 0.5)");
  if (!(thickness > 0.0) || !std::isfinite(thickness)) throw ValidationError("thickness must be positive");
  if (kind == InterpolationKind::power && !(p >= 1.0)) throw ValidationError("power law exponent must be >= 1");
  if (kind == InterpolationKind::ramp && !(q >= 0.0)) throw ValidationError("RAMP parameter must be >= 0");
  if (kind == InterpolationKind::hs_bound && std::abs(poisson - 0.3) > 1e-12)
    throw ValidationError("hs_bound interpolation is only defined for a Poisson ratio of 0.3");
}

Interpolated interpolate(const MaterialModel& m, double rho) {
  switch (m.kind) {
    case InterpolationKind::linear: return {rho, 1.0};
    case InterpolationKind::power: {
      double mu = std::pow(rho, m.p);
      double dmu = m.p * std::pow(rho, m.p - 1.0);
      return {mu, dmu};
    }
    case InterpolationKind::ramp: {
      double den = 1.0 + m.q * (1.0 - rho);
      return {rho / den, (1.0 + m.q) / (den * den)};
    }
    case InterpolationKind::hs_bound: {
      double den = 3.0 - 2.0 * rho;
      return {rho / den, 3.0 / (den * den)};
    }
  }
  return {rho, 1.0};
}

}  // namespace featmap
