#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "featmap/fea.hpp"
#include "featmap/mapping.hpp"
#include "featmap/material.hpp"

namespace featmap {

enum class ResponseKind { compliance, volume, displacement };

/// Scalar response of the solved state. `dof` selects the displacement
/// component for ResponseKind::displacement.
struct Response {
  ResponseKind kind = ResponseKind::compliance;
  int dof = -1;
};

double response_value(const FeaSolver& solver, const Solution& solution, const Response& response);

/// Adjoint vector lambda of K lambda = -dJ/du (zero on fixed dofs).
/// Compliance returns -u without a solve; volume returns zero.
Eigen::VectorXd adjoint_vector(const FeaSolver& solver, const Solution& solution, const Response& response);

/// dJ/drho_e = lambda_e^T (dmu/drho K_e^0) u_e, plus l_el^2 t for volume.
std::vector<double> density_sensitivity(const FeaSolver& solver, const Solution& solution,
                                        const MaterialModel& material, std::span<const double> rho,
                                        const Response& response);

/// Chain rule sum_e dJ/drho_e * drho_e/dslot for every global slot.
/// Throws NotDifferentiableError when the field carries no Jacobian.
std::vector<double> shape_sensitivity(std::span<const double> density_sensitivity, const DensityField& field,
                                      int num_slots);

struct GradientRow {
  std::string param;
  double analytic = 0.0;
  double fd = 0.0;
  double rel_err = 0.0;
  bool one_sided = false;
  bool pass = true;
};

struct GradientReport {
  std::vector<GradientRow> rows;
  double tolerance = 1e-4;
  bool differentiable = true;
  std::string note;

  bool passed() const;
  double max_rel_err() const;
};

struct FdOptions {
  double tolerance = 1e-4;
  /// Floor of the relative error denominator as a fraction of the largest
  /// |fd| entry, so that near-zero entries are judged on the common scale.
  double relative_floor = 1e-6;
  int threads = 1;
};

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central differences per parameter; one-sided (and flagged) where a
/// central step would leave [lower, upper].
GradientReport fd_verify(const ScalarFunction& f, std::span<const double> s, std::span<const double> analytic,
                         std::span<const double> lower, std::span<const double> upper,
                         std::span<const double> steps, const std::vector<std::string>& labels,
                         const FdOptions& options = {});

/// |a - fd| / max(|fd|, floor).
double relative_error(double analytic, double fd, double floor);

}  // namespace featmap
