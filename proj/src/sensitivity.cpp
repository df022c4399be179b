#include "featmap/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "featmap/errors.hpp"
#include "featmap/parallel.hpp"

namespace featmap {

double response_value(const FeaSolver& solver, const Solution& s, const Response& r) {
  switch (r.kind) {
    case ResponseKind::compliance: return s.compliance;
    case ResponseKind::volume: return s.volume;
    case ResponseKind::displacement:
      if (r.dof < 0 || r.dof >= solver.problem().num_dofs()) throw ValidationError("response dof out of range");
      return s.u[r.dof];
  }
  return 0.0;
}

Eigen::VectorXd adjoint_vector(const FeaSolver& solver, const Solution& s, const Response& r) {
  switch (r.kind) {
    case ResponseKind::compliance: return -s.u;
    case ResponseKind::volume: return Eigen::VectorXd::Zero(s.u.size());
    case ResponseKind::displacement: {
      if (r.dof < 0 || r.dof >= solver.problem().num_dofs()) throw ValidationError("response dof out of range");
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s.u.size());
      rhs[r.dof] = -1.0;
      return solver.solve_again(rhs);
    }
  }
  return {};
}

std::vector<double> density_sensitivity(const FeaSolver& solver, const Solution& s, const MaterialModel& material,
                                        std::span<const double> rho, const Response& r) {
  const Grid& g = solver.problem().grid;
  const int ne = g.num_elements();
  if (static_cast<int>(rho.size()) != ne) throw ValidationError("one density per element is required");
  std::vector<double> out(ne, 0.0);
  if (r.kind == ResponseKind::volume) {
    std::fill(out.begin(), out.end(), g.element_area() * solver.problem().material.thickness);
    return out;
  }
  const Matrix8& ke = solver.ke();
  if (r.kind == ResponseKind::compliance) {
    for (int e = 0; e < ne; ++e) out[e] = -interpolate(material, rho[e]).dmu * solver.element_energy(s.u, e);
    return out;
  }
  Eigen::VectorXd lambda = adjoint_vector(solver, s, r);
  for (int e = 0; e < ne; ++e) {
    auto dofs = element_dofs(g, e);
    Eigen::Matrix<double, 8, 1> ue, le;
    for (int i = 0; i < 8; ++i) {
      ue[i] = s.u[dofs[i]];
      le[i] = lambda[dofs[i]];
    }
    out[e] = interpolate(material, rho[e]).dmu * le.dot(ke * ue);
  }
  return out;
}

std::vector<double> shape_sensitivity(std::span<const double> dj, const DensityField& field, int num_slots) {
  if (!field.has_jacobian) throw NotDifferentiableError("density field has no Jacobian; use a smooth boundary model");
  std::vector<double> g(num_slots, 0.0);
  for (std::size_t e = 0; e < field.jacobian.size(); ++e) {
    for (const auto& [slot, v] : field.jacobian[e]) {
      if (slot >= 0 && slot < num_slots) g[slot] += dj[e] * v;
    }
  }
  return g;
}

bool GradientReport::passed() const {
  if (!differentiable) return false;
  return std::all_of(rows.begin(), rows.end(), [](const GradientRow& r) { return r.pass; });
}

double GradientReport::max_rel_err() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, r.rel_err);
  return m;
}

double relative_error(double a, double fd, double floor) {
  double diff = std::abs(a - fd);
  if (diff == 0.0) return 0.0;
  double den = std::max(std::abs(fd), floor);
  if (den <= 0.0) return std::numeric_limits<double>::infinity();
  return diff / den;
}

GradientReport fd_verify(const ScalarFunction& f, std::span<const double> s, std::span<const double> analytic,
                         std::span<const double> lower, std::span<const double> upper,
                         std::span<const double> steps, const std::vector<std::string>& labels,
                         const FdOptions& opt) {
  const std::size_t n = s.size();
  if (analytic.size() != n || lower.size() != n || upper.size() != n || steps.size() != n)
    throw ValidationError("fd_verify inputs must have one entry per parameter");
  GradientReport rep;
  rep.tolerance = opt.tolerance;
  rep.rows.resize(n);
  std::vector<double> f0(1, 0.0);
  bool need_f0 = false;
  for (std::size_t i = 0; i < n; ++i)
    if (s[i] - steps[i] < lower[i] || s[i] + steps[i] > upper[i]) need_f0 = true;
  if (need_f0) f0[0] = f(s);
  parallel_for(static_cast<int>(n), opt.threads, [&](int begin, int end) {
    std::vector<double> x(s.begin(), s.end());
    for (int i = begin; i < end; ++i) {
      GradientRow& row = rep.rows[i];
      row.param = i < static_cast<int>(labels.size()) ? labels[i] : "s" + std::to_string(i + 1);
      row.analytic = analytic[i];
      double h = steps[i];
      bool up_ok = s[i] + h <= upper[i], down_ok = s[i] - h >= lower[i];
      if (up_ok && down_ok) {
        x[i] = s[i] + h;
        double fp = f(x);
        x[i] = s[i] - h;
        double fm = f(x);
        row.fd = (fp - fm) / (2.0 * h);
      } else if (up_ok) {
        x[i] = s[i] + h;
        row.fd = (f(x) - f0[0]) / h;
        row.one_sided = true;
      } else {
        x[i] = s[i] - h;
        row.fd = (f0[0] - f(x)) / h;
        row.one_sided = true;
      }
      x[i] = s[i];
    }
  });
  double scale = 0.0;
  for (const auto& r : rep.rows) scale = std::max(scale, std::abs(r.fd));
  for (auto& r : rep.rows) {
    r.rel_err = relative_error(r.analytic, r.fd, opt.relative_floor * scale);
    r.pass = std::isfinite(r.rel_err) && r.rel_err < opt.tolerance;
  }
  return rep;
}

}  // namespace featmap
