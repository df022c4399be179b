#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "featmap/mapping.hpp"
#include "featmap/material.hpp"

namespace featmap {

using Matrix8 = Eigen::Matrix<double, 8, 8>;

/// Global dof of a node component (0 = x, 1 = y).
inline int node_dof(int node, int component) { return 2 * node + component; }

/// Dofs of element e, nodes counter-clockwise from the lower-left corner.
std::array<int, 8> element_dofs(const Grid& grid, int e);

/// Fully solid plane-stress bilinear quad stiffness, 2x2 Gauss.
Matrix8 element_stiffness(const MaterialModel& material, double l_el);

struct FeaProblem {
  Grid grid;
  std::vector<int> fixed_dofs;
  Eigen::VectorXd loads;  // one entry per dof
  MaterialModel material;

  void validate() const;
  int num_dofs() const { return 2 * grid.num_nodes(); }
};

struct Solution {
  Eigen::VectorXd u;
  double compliance = 0.0;
  double volume = 0.0;
  double residual = 0.0;  // |K u - f| / (|K| |u| + |f|), infinity norms
};

/// Sparse direct solver with the sparsity pattern analysed once; each
/// solve refactorizes for new stiffness scales.
class FeaSolver {
 public:
  explicit FeaSolver(FeaProblem problem);

  /// mu: physical stiffness scale per element; rho: unpenalized density for
  /// the volume. Throws AnalysisError when the factorization fails or the
  /// backward error exceeds 1e-10.
  Solution solve(std::span<const double> mu, std::span<const double> rho);

  /// Solves K x = rhs with the last factorization. Entries of rhs on fixed
  /// dofs are ignored; x is zero there.
  Eigen::VectorXd solve_again(const Eigen::VectorXd& rhs) const;

  const FeaProblem& problem() const { return problem_; }
  const Matrix8& ke() const { return ke_; }
  /// u_e^T K_e^0 u_e.
  double element_energy(const Eigen::VectorXd& u, int e) const;

 private:
  void assemble(std::span<const double> mu);

  FeaProblem problem_;
  Matrix8 ke_;
  std::vector<int> free_index_;  // dof -> reduced index or -1
  std::vector<int> free_dofs_;
  std::vector<int> value_index_;  // element * 64 + i * 8 + j -> K value slot or -1
  Eigen::SparseMatrix<double> k_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt_;
  bool factorized_ = false;
};

Solution assemble_and_solve(const FeaProblem& problem, std::span<const double> mu, std::span<const double> rho);

/// (f^T u, sum rho_e l_el^2 t).
std::pair<double, double> compliance_and_volume(const FeaProblem& problem, const Solution& solution,
                                                std::span<const double> rho);

}  // namespace featmap
