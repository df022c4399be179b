#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "featmap/bench.hpp"
#include "featmap/errors.hpp"
#include "featmap/fea.hpp"

using namespace featmap;

namespace {

// Closed-form bilinear square, unit thickness, node order LL, LR, UR, UL.
Matrix8 reference_ke(double E, double nu) {
  double k[8] = {0.5 - nu / 6,       0.125 + nu / 8, -0.25 - nu / 12, -0.125 + 3 * nu / 8,
                 -0.25 + nu / 12,    -0.125 - nu / 8, nu / 6,          0.125 - 3 * nu / 8};
  int idx[8][8] = {{0, 1, 2, 3, 4, 5, 6, 7}, {1, 0, 7, 6, 5, 4, 3, 2}, {2, 7, 0, 5, 6, 3, 4, 1},
                   {3, 6, 5, 0, 7, 2, 1, 4}, {4, 5, 6, 7, 0, 1, 2, 3}, {5, 4, 3, 2, 1, 0, 7, 6},
                   {6, 3, 4, 1, 2, 7, 0, 5}, {7, 2, 1, 4, 3, 6, 5, 0}};
  Matrix8 K;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) K(i, j) = E / (1 - nu * nu) * k[idx[i][j]];
  return K;
}

FeaProblem clamped_left(int nx, int ny, const MaterialModel& m) {
  FeaProblem p;
  p.grid = {nx, ny, 1.0, {0, 0}};
  p.material = m;
  for (int iy = 0; iy <= ny; ++iy) {
    p.fixed_dofs.push_back(node_dof(p.grid.node(0, iy), 0));
    p.fixed_dofs.push_back(node_dof(p.grid.node(0, iy), 1));
  }
  p.loads = Eigen::VectorXd::Zero(p.num_dofs());
  return p;
}

}  // namespace

TEST_SUITE("fea") {

TEST_CASE("element stiffness against the closed form") {
  MaterialModel m;
  CHECK((element_stiffness(m, 1.0) - reference_ke(1.0, 0.3)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((element_stiffness(m, 2.5) - reference_ke(1.0, 0.3)).cwiseAbs().maxCoeff() < 1e-14);
  m.youngs = 210.0;
  m.poisson = 0.25;
  m.thickness = 0.5;
  CHECK((element_stiffness(m, 1.0) - 0.5 * reference_ke(210.0, 0.25)).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("element stiffness symmetry and rigid modes") {
  MaterialModel m;
  Matrix8 K = element_stiffness(m, 1.0);
  CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::Matrix<double, 8, 1> tx, ty, rot;
  double x[4] = {0, 1, 1, 0}, y[4] = {0, 0, 1, 1};
  for (int a = 0; a < 4; ++a) {
    tx(2 * a) = 1, tx(2 * a + 1) = 0;
    ty(2 * a) = 0, ty(2 * a + 1) = 1;
    rot(2 * a) = -(y[a] - 0.5), rot(2 * a + 1) = x[a] - 0.5;
  }
  CHECK((K * tx).norm() < 1e-14);
  CHECK((K * ty).norm() < 1e-14);
  CHECK((K * rot).norm() < 1e-14);
  Eigen::SelfAdjointEigenSolver<Matrix8> es(K);
  double tr = K.trace();
  int zeros = 0;
  for (int i = 0; i < 8; ++i) {
    if (std::abs(es.eigenvalues()(i)) < 1e-10 * tr) ++zeros;
    CHECK(es.eigenvalues()(i) > -1e-10 * tr);
  }
  CHECK(zeros == 3);
}

TEST_CASE("axial patch test") {
  for (int n : {1, 5, 40}) {
    MaterialModel m;
    m.youngs = 3.0;
    FeaProblem p;
    p.grid = {n, 1, 1.0, {0, 0}};
    p.material = m;
    p.fixed_dofs = {node_dof(p.grid.node(0, 0), 0), node_dof(p.grid.node(0, 0), 1), node_dof(p.grid.node(0, 1), 0)};
    p.loads = Eigen::VectorXd::Zero(p.num_dofs());
    double F = 2.0;
    p.loads[node_dof(p.grid.node(n, 0), 0)] = F / 2;
    p.loads[node_dof(p.grid.node(n, 1), 0)] = F / 2;
    std::vector<double> ones(n, 1.0);
    auto s = assemble_and_solve(p, ones, ones);
    double expected = F * n / (m.youngs * 1.0);
    CHECK(std::abs(s.u[node_dof(p.grid.node(n, 0), 0)] - expected) / expected < 1e-8);
    CHECK(std::abs(s.u[node_dof(p.grid.node(n, 1), 0)] - expected) / expected < 1e-8);
    // lateral contraction nu * strain over the unit height
    double lateral = s.u[node_dof(p.grid.node(n, 1), 1)] - s.u[node_dof(p.grid.node(n, 0), 1)];
    CHECK(lateral == doctest::Approx(-0.3 * F / m.youngs).epsilon(1e-8));
  }
}

TEST_CASE("cantilever tip deflection") {
  MaterialModel m;
  auto p = clamped_left(80, 10, m);
  double P = 1.0;
  for (int iy = 0; iy <= 10; ++iy) p.loads[node_dof(p.grid.node(80, iy), 1)] = -P * ((iy == 0 || iy == 10) ? 0.5 : 1.0) / 10;
  std::vector<double> ones(800, 1.0);
  auto s = assemble_and_solve(p, ones, ones);
  double tip = 0;
  for (int iy = 0; iy <= 10; ++iy) tip += s.u[node_dof(p.grid.node(80, iy), 1)];
  tip = -tip / 11;
  double L = 80, h = 10, I = h * h * h / 12, A = h, G = 1.0 / (2 * 1.3);
  double beam = P * L * L * L / (3 * I) + P * L / (5.0 / 6.0 * G * A);
  CHECK(std::abs(tip - beam) / beam < 0.05);
  CHECK(s.residual < 1e-12);
}

TEST_CASE("compliance is inversely proportional to the stiffness scale") {
  MaterialModel m;
  auto p = clamped_left(12, 6, m);
  p.loads[node_dof(p.grid.node(12, 3), 1)] = -1.0;
  std::vector<double> mu(72), mu2(72), rho(72, 1.0);
  for (int e = 0; e < 72; ++e) {
    mu[e] = 0.1 + 0.9 * ((e * 37) % 11) / 10.0;
    mu2[e] = 2 * mu[e];
  }
  auto a = assemble_and_solve(p, mu, rho);
  auto b = assemble_and_solve(p, mu2, rho);
  CHECK(b.compliance == doctest::Approx(a.compliance / 2).epsilon(1e-12));
  CHECK(a.compliance == doctest::Approx(p.loads.dot(a.u)).epsilon(1e-14));
}

TEST_CASE("zero load gives zero compliance") {
  MaterialModel m;
  auto p = clamped_left(4, 4, m);
  std::vector<double> ones(16, 1.0);
  auto s = assemble_and_solve(p, ones, ones);
  CHECK(s.compliance == 0.0);
  CHECK(s.u.norm() == 0.0);
}

TEST_CASE("volume counts the H-shape footprint") {
  auto model = hshape_model({BoundaryKind::exact, 1.0, 6.5, 1e-6}, {QuadratureKind::newton_cotes, 0}, {});
  auto p = model.fea_problem();
  std::vector<double> ones(p.grid.num_elements(), 1.0);
  auto s = assemble_and_solve(p, ones, ones);
  CHECK(s.volume == doctest::Approx(1600.0));
  MaterialModel thick;
  thick.thickness = 0.25;
  p.material = thick;
  CHECK(assemble_and_solve(p, ones, ones).volume == doctest::Approx(400.0));
}

TEST_CASE("repeated solves reuse the pattern") {
  MaterialModel m;
  auto p = clamped_left(10, 5, m);
  p.loads[node_dof(p.grid.node(10, 5), 1)] = -1.0;
  FeaSolver solver(p);
  std::vector<double> a(50, 1.0), b(50, 0.5);
  double ca = solver.solve(a, a).compliance;
  double cb = solver.solve(b, b).compliance;
  CHECK(cb == doctest::Approx(2 * ca).epsilon(1e-12));
  CHECK(solver.solve(a, a).compliance == ca);
}

TEST_CASE("invalid problems") {
  MaterialModel m;
  auto p = clamped_left(3, 3, m);
  p.fixed_dofs = {0, 1};
  CHECK_THROWS_AS(FeaSolver{p}, ValidationError);
  p = clamped_left(3, 3, m);
  p.fixed_dofs.push_back(10000);
  CHECK_THROWS_AS(FeaSolver{p}, ValidationError);
  p = clamped_left(3, 3, m);
  p.loads.resize(4);
  CHECK_THROWS_AS(FeaSolver{p}, ValidationError);
  p = clamped_left(3, 3, m);
  FeaSolver s(p);
  std::vector<double> wrong(5, 1.0);
  CHECK_THROWS_AS(s.solve(wrong, wrong), ValidationError);
}

TEST_CASE("a mechanism is reported as an analysis failure") {
  MaterialModel m;
  FeaProblem p;
  p.grid = {4, 1, 1.0, {0, 0}};
  p.material = m;
  // only x fixed along the left edge: free vertical translation
  p.fixed_dofs = {node_dof(p.grid.node(0, 0), 0), node_dof(p.grid.node(0, 1), 0), node_dof(p.grid.node(4, 0), 0)};
  p.loads = Eigen::VectorXd::Zero(p.num_dofs());
  p.loads[node_dof(p.grid.node(4, 1), 1)] = 1.0;
  std::vector<double> ones(4, 1.0);
  CHECK_THROWS_AS(assemble_and_solve(p, ones, ones), AnalysisError);
}

}
