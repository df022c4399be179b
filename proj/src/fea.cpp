#include "featmap/fea.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "featmap/errors.hpp"

namespace featmap {

std::array<int, 8> element_dofs(const Grid& g, int e) {
  int ex = e % g.nx, ey = e / g.nx;
  int n[4] = {g.node(ex, ey), g.node(ex + 1, ey), g.node(ex + 1, ey + 1), g.node(ex, ey + 1)};
  std::array<int, 8> d{};
  for (int i = 0; i < 4; ++i) {
    d[2 * i] = node_dof(n[i], 0);
    d[2 * i + 1] = node_dof(n[i], 1);
  }
  return d;
}

Matrix8 element_stiffness(const MaterialModel& m, double l) {
  const double E = m.youngs, nu = m.poisson;
  Eigen::Matrix3d D;
  D << 1.0, nu, 0.0, nu, 1.0, 0.0, 0.0, 0.0, 0.5 * (1.0 - nu);
  D *= E / (1.0 - nu * nu);
  const double gp = 1.0 / std::sqrt(3.0);
  const double xi[4][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  Matrix8 K = Matrix8::Zero();
  for (double gx : {-gp, gp}) {
    for (double gy : {-gp, gp}) {
      Eigen::Matrix<double, 3, 8> B = Eigen::Matrix<double, 3, 8>::Zero();
      for (int a = 0; a < 4; ++a) {
        // derivatives of the bilinear shape functions, mapped by dxi/dx = 2/l
        double dNdx = 0.25 * xi[a][0] * (1.0 + xi[a][1] * gy) * 2.0 / l;
        double dNdy = 0.25 * xi[a][1] * (1.0 + xi[a][0] * gx) * 2.0 / l;
        B(0, 2 * a) = dNdx;
        B(1, 2 * a + 1) = dNdy;
        B(2, 2 * a) = dNdy;
        B(2, 2 * a + 1) = dNdx;
      }
      double detj = 0.25 * l * l;
      K += B.transpose() * D * B * detj * m.thickness;
    }
  }
  return 0.5 * (K + K.transpose());
}

void FeaProblem::validate() const {
  grid.validate();
  material.validate();
  const int n = num_dofs();
  if (loads.size() != n) throw ValidationError("load vector length must equal the dof count");
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(loads[i])) throw ValidationError("loads must be finite");
  std::vector<int> fixed = fixed_dofs;
  std::sort(fixed.begin(), fixed.end());
  fixed.erase(std::unique(fixed.begin(), fixed.end()), fixed.end());
  if (fixed.size() < 3) throw ValidationError("at least 3 constrained dofs are needed to remove rigid body modes");
  for (int d : fixed)
    if (d < 0 || d >= n) throw ValidationError("fixed dof out of range");
}

FeaSolver::FeaSolver(FeaProblem problem) : problem_(std::move(problem)) {
  problem_.validate();
  const Grid& g = problem_.grid;
  ke_ = element_stiffness(problem_.material, g.l_el);
  const int n = problem_.num_dofs();
  free_index_.assign(n, 0);
  for (int d : problem_.fixed_dofs) free_index_[d] = -1;
  for (int d = 0; d < n; ++d) {
    if (free_index_[d] >= 0) {
      free_index_[d] = static_cast<int>(free_dofs_.size());
      free_dofs_.push_back(d);
    }
  }
  const int nf = static_cast<int>(free_dofs_.size());
  const int ne = g.num_elements();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(ne) * 64);
  for (int e = 0; e < ne; ++e) {
    auto dofs = element_dofs(g, e);
    for (int i = 0; i < 8; ++i) {
      int r = free_index_[dofs[i]];
      if (r < 0) continue;
      for (int j = 0; j < 8; ++j) {
        int c = free_index_[dofs[j]];
        if (c < 0) continue;
        trip.emplace_back(r, c, 1.0);
      }
    }
  }
  k_.resize(nf, nf);
  k_.setFromTriplets(trip.begin(), trip.end());
  k_.makeCompressed();
  value_index_.assign(static_cast<std::size_t>(ne) * 64, -1);
  const int* outer = k_.outerIndexPtr();
  const int* inner = k_.innerIndexPtr();
  for (int e = 0; e < ne; ++e) {
    auto dofs = element_dofs(g, e);
    for (int i = 0; i < 8; ++i) {
      int r = free_index_[dofs[i]];
      if (r < 0) continue;
      for (int j = 0; j < 8; ++j) {
        int c = free_index_[dofs[j]];
        if (c < 0) continue;
        const int* begin = inner + outer[c];
        const int* end = inner + outer[c + 1];
        const int* it = std::lower_bound(begin, end, r);
        value_index_[static_cast<std::size_t>(e) * 64 + i * 8 + j] = static_cast<int>(it - inner);
      }
    }
  }
  ldlt_.analyzePattern(k_);
}

void FeaSolver::assemble(std::span<const double> mu) {
  double* values = k_.valuePtr();
  std::fill(values, values + k_.nonZeros(), 0.0);
  const int ne = problem_.grid.num_elements();
  for (int e = 0; e < ne; ++e) {
    const int* idx = &value_index_[static_cast<std::size_t>(e) * 64];
    const double s = mu[e];
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j)
        if (idx[i * 8 + j] >= 0) values[idx[i * 8 + j]] += s * ke_(i, j);
  }
}

Solution FeaSolver::solve(std::span<const double> mu, std::span<const double> rho) {
  const Grid& g = problem_.grid;
  const int ne = g.num_elements();
  if (static_cast<int>(mu.size()) != ne || static_cast<int>(rho.size()) != ne)
    throw ValidationError("one stiffness scale and density per element is required");
  for (int e = 0; e < ne; ++e)
    if (!(mu[e] > 0.0) || !std::isfinite(mu[e]))
      throw AnalysisError("element stiffness scales must be positive and finite");
  assemble(mu);
  ldlt_.factorize(k_);
  factorized_ = ldlt_.info() == Eigen::Success;
  if (factorized_) {
    // a pivot that lost every digit against its own diagonal entry means a
    // mechanism; a non-positive one means the matrix is not definite
    Eigen::VectorXd diag = k_.diagonal();
    Eigen::VectorXd permuted = ldlt_.permutationP() * diag;
    const Eigen::VectorXd& d = ldlt_.vectorD();
    for (Eigen::Index i = 0; i < d.size() && factorized_; ++i)
      factorized_ = d[i] > 1e-12 * permuted[i];
  }
  if (!factorized_) throw AnalysisError("stiffness matrix factorization failed (singular or indefinite system)");

  const int nf = static_cast<int>(free_dofs_.size());
  Eigen::VectorXd f(nf);
  for (int i = 0; i < nf; ++i) f[i] = problem_.loads[free_dofs_[i]];
  Eigen::VectorXd x = ldlt_.solve(f);
  // normwise backward error |r| / (|K| |x| + |f|) in the infinity norm
  double knorm = 0.0;
  for (int c = 0; c < k_.outerSize(); ++c) {
    double sum = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(k_, c); it; ++it) sum += std::abs(it.value());
    knorm = std::max(knorm, sum);
  }
  auto backward = [&](const Eigen::VectorXd& r) {
    double den = knorm * x.lpNorm<Eigen::Infinity>() + f.lpNorm<Eigen::Infinity>();
    return den > 0.0 ? r.lpNorm<Eigen::Infinity>() / den : 0.0;
  };
  Eigen::VectorXd r = f - k_ * x;
  double res = backward(r);
  for (int it = 0; it < 3 && res > 1e-14; ++it) {
    x += ldlt_.solve(r);
    r = f - k_ * x;
    res = backward(r);
  }
  if (!std::isfinite(res) || res > 1e-10) {
    std::ostringstream msg;
    msg << "linear solve backward error " << res << " exceeds 1e-10; the system is ill-conditioned";
    throw AnalysisError(msg.str());
  }
  Solution s;
  s.u = Eigen::VectorXd::Zero(problem_.num_dofs());
  for (int i = 0; i < nf; ++i) s.u[free_dofs_[i]] = x[i];
  s.residual = res;
  auto [J, V] = compliance_and_volume(problem_, s, rho);
  s.compliance = J;
  s.volume = V;
  return s;
}

Eigen::VectorXd FeaSolver::solve_again(const Eigen::VectorXd& rhs) const {
  if (!factorized_) throw AnalysisError("no factorization available");
  const int nf = static_cast<int>(free_dofs_.size());
  Eigen::VectorXd f(nf);
  for (int i = 0; i < nf; ++i) f[i] = rhs[free_dofs_[i]];
  Eigen::VectorXd x = ldlt_.solve(f);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(problem_.num_dofs());
  for (int i = 0; i < nf; ++i) out[free_dofs_[i]] = x[i];
  return out;
}

double FeaSolver::element_energy(const Eigen::VectorXd& u, int e) const {
  auto dofs = element_dofs(problem_.grid, e);
  Eigen::Matrix<double, 8, 1> ue;
  for (int i = 0; i < 8; ++i) ue[i] = u[dofs[i]];
  return ue.dot(ke_ * ue);
}

Solution assemble_and_solve(const FeaProblem& problem, std::span<const double> mu, std::span<const double> rho) {
  FeaSolver solver(problem);
  return solver.solve(mu, rho);
}

std::pair<double, double> compliance_and_volume(const FeaProblem& p, const Solution& s, std::span<const double> rho) {
  double J = p.loads.dot(s.u);
  double V = 0.0;
  for (double r : rho) V += r;
  V *= p.grid.element_area() * p.material.thickness;
  return {J, V};
}

}  // namespace featmap
