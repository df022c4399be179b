#include <doctest.h>

#include <cmath>

#include "featmap/bench.hpp"
#include "featmap/errors.hpp"
#include "featmap/pipeline.hpp"
#include "featmap/sensitivity.hpp"

using namespace featmap;

namespace {

FeaProblem small_problem() {
  FeaProblem p;
  p.grid = {4, 4, 1.0, {0, 0}};
  for (int iy = 0; iy <= 4; ++iy) {
    p.fixed_dofs.push_back(node_dof(p.grid.node(0, iy), 0));
    p.fixed_dofs.push_back(node_dof(p.grid.node(0, iy), 1));
  }
  p.loads = Eigen::VectorXd::Zero(p.num_dofs());
  p.loads[node_dof(p.grid.node(4, 2), 1)] = -1.0;
  p.loads[node_dof(p.grid.node(4, 4), 0)] = 0.3;
  return p;
}

std::vector<double> mu_of(const MaterialModel& m, const std::vector<double>& rho) {
  std::vector<double> mu(rho.size());
  for (std::size_t e = 0; e < rho.size(); ++e) mu[e] = interpolate(m, rho[e]).mu;
  return mu;
}

Model two_bar_model(double x_left, double x_right) {
  Model m;
  m.grid = {20, 12, 1.0, {0, 0}};
  m.features = {make_bar({x_left, -1.0}, {x_left, 13.0}, 1.3), make_bar({x_right, -1.0}, {x_right, 13.0}, 1.3)};
  m.design = DesignVector({{0, kOffsetX, -3, 3}, {1, kOffsetX, -3, 3}});
  m.mapping.boundary = {BoundaryKind::poly3, 1.0, 6.5, 1e-6};
  m.mapping.quadrature = {QuadratureKind::newton_cotes, 2};
  m.mapping.combine.extremum = ExtremumKind::ks;
  m.mapping.combine.p = 10;
  for (int ix = 0; ix <= 20; ++ix) {
    m.fixed_dofs.push_back(node_dof(m.grid.node(ix, 0), 0));
    m.fixed_dofs.push_back(node_dof(m.grid.node(ix, 0), 1));
  }
  m.loads = Eigen::VectorXd::Zero(2 * m.grid.num_nodes());
  m.loads[node_dof(m.grid.node(10, 12), 1)] = -1.0;
  return m;
}

}  // namespace

TEST_SUITE("sensitivity") {

TEST_CASE("compliance density sensitivity against finite differences") {
  for (auto k : {InterpolationKind::power, InterpolationKind::ramp, InterpolationKind::hs_bound,
                 InterpolationKind::linear}) {
    auto p = small_problem();
    p.material.kind = k;
    std::vector<double> rho(16);
    for (int e = 0; e < 16; ++e) rho[e] = 0.3 + 0.05 * ((e * 7) % 13);
    FeaSolver solver(p);
    auto sol = solver.solve(mu_of(p.material, rho), rho);
    auto g = density_sensitivity(solver, sol, p.material, rho, {ResponseKind::compliance});
    for (int e = 0; e < 16; ++e) {
      CHECK(g[e] <= 0.0);
      double h = 1e-6;
      auto rp = rho, rm = rho;
      rp[e] += h;
      rm[e] -= h;
      double fd = (assemble_and_solve(p, mu_of(p.material, rp), rp).compliance -
                   assemble_and_solve(p, mu_of(p.material, rm), rm).compliance) /
                  (2 * h);
      CHECK(std::abs(g[e] - fd) / std::abs(fd) < 1e-6);
    }
  }
}

TEST_CASE("volume and displacement sensitivities") {
  auto p = small_problem();
  std::vector<double> rho(16);
  for (int e = 0; e < 16; ++e) rho[e] = 0.4 + 0.03 * e;
  FeaSolver solver(p);
  auto sol = solver.solve(mu_of(p.material, rho), rho);
  auto gv = density_sensitivity(solver, sol, p.material, rho, {ResponseKind::volume});
  for (double v : gv) CHECK(v == doctest::Approx(1.0));
  Response disp{ResponseKind::displacement, node_dof(p.grid.node(4, 2), 1)};
  auto gd = density_sensitivity(solver, sol, p.material, rho, disp);
  for (int e = 0; e < 16; e += 3) {
    double h = 1e-6;
    auto rp = rho, rm = rho;
    rp[e] += h;
    rm[e] -= h;
    double up = assemble_and_solve(p, mu_of(p.material, rp), rp).u[disp.dof];
    double um = assemble_and_solve(p, mu_of(p.material, rm), rm).u[disp.dof];
    double fd = (up - um) / (2 * h);
    CHECK(gd[e] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("unstrained elements have zero sensitivity") {
  FeaProblem p;
  p.grid = {4, 2, 1.0, {0, 0}};
  for (int iy = 0; iy <= 2; ++iy) {
    p.fixed_dofs.push_back(node_dof(p.grid.node(0, iy), 0));
    p.fixed_dofs.push_back(node_dof(p.grid.node(0, iy), 1));
  }
  p.loads = Eigen::VectorXd::Zero(p.num_dofs());
  // load at a node touching only the first column of elements, right side held
  for (int iy = 0; iy <= 2; ++iy) {
    p.fixed_dofs.push_back(node_dof(p.grid.node(2, iy), 0));
    p.fixed_dofs.push_back(node_dof(p.grid.node(2, iy), 1));
  }
  p.loads[node_dof(p.grid.node(1, 1), 1)] = -1.0;
  std::vector<double> rho(8, 0.8);
  FeaSolver solver(p);
  auto sol = solver.solve(mu_of(p.material, rho), rho);
  auto g = density_sensitivity(solver, sol, p.material, rho, {ResponseKind::compliance});
  CHECK(g[p.grid.element(3, 0)] == 0.0);
  CHECK(g[p.grid.element(3, 1)] == 0.0);
  CHECK(g[p.grid.element(0, 0)] < 0.0);
}

TEST_CASE("a feature inside solid passive material has no shape sensitivity") {
  Model m = two_bar_model(6.0, 14.0);
  m.passive.assign(m.grid.num_elements(), Passive::solid);
  // a free strip along the top, away from the circle and the supports
  for (int e = 220; e < 240; ++e) m.passive[e] = Passive::design;
  m.features = {make_circle({10, 7}, 2.0)};
  m.design = DesignVector({{0, 0, 8, 12}, {0, 2, 1, 3}});
  Pipeline pipe(m, 1);
  auto ev = pipe.evaluate(pipe.initial_design(), true);
  for (double g : ev.compliance_grad) CHECK(g == 0.0);
}

TEST_CASE("mirror symmetric bars have opposite position gradients") {
  Model m = two_bar_model(6.0, 14.0);
  Pipeline pipe(m, 1);
  auto ev = pipe.evaluate(pipe.initial_design(), true);
  REQUIRE(ev.compliance_grad.size() == 2);
  CHECK(ev.compliance_grad[0] != 0.0);
  CHECK(ev.compliance_grad[0] == doctest::Approx(-ev.compliance_grad[1]).epsilon(1e-9));
}

TEST_CASE("H-shape gradient against finite differences") {
  auto m = hshape_model({BoundaryKind::poly3, 1.0, 6.5, 1e-6}, {QuadratureKind::newton_cotes, 2}, {});
  Pipeline pipe(m, 1);
  for (double s0 : {16.0, 16.3, 17.75}) {
    std::vector<double> s{s0};
    auto ev = pipe.evaluate(s, true);
    double h = 1e-4;
    double fd = (pipe.compliance(std::vector<double>{s0 + h}) - pipe.compliance(std::vector<double>{s0 - h})) / (2 * h);
    CHECK(std::abs(ev.compliance_grad[0] - fd) / std::abs(fd) < 1e-4);
  }
}

TEST_CASE("finite difference harness") {
  ScalarFunction sq = [](std::span<const double> s) { return s[0] * s[0]; };
  double s[] = {1.0}, an[] = {2.0}, lo[] = {-5.0}, hi[] = {5.0}, step[] = {1e-4};
  auto r = fd_verify(sq, s, an, lo, hi, step, {"s"});
  REQUIRE(r.rows.size() == 1);
  CHECK(std::abs(r.rows[0].fd - 2.0) < 1e-7);
  CHECK(r.passed());
  CHECK_FALSE(r.rows[0].one_sided);
  // at the upper bound the difference is one-sided
  double s2[] = {5.0}, an2[] = {10.0};
  auto r2 = fd_verify(sq, s2, an2, lo, hi, step, {"s"});
  CHECK(r2.rows[0].one_sided);
  CHECK(r2.rows[0].fd == doctest::Approx(10.0).epsilon(1e-4));
  // a wrong gradient fails
  double bad[] = {2.1};
  CHECK_FALSE(fd_verify(sq, s, bad, lo, hi, step, {"s"}).passed());
  CHECK(relative_error(1.0, 0.0, 1e-3) == doctest::Approx(1000.0));
}

TEST_CASE("exact boundary cannot be differentiated") {
  auto m = hshape_model({BoundaryKind::exact, 1.0, 6.5, 1e-6}, {QuadratureKind::newton_cotes, 2}, {});
  Pipeline pipe(m, 1);
  CHECK_THROWS_AS(pipe.evaluate(pipe.initial_design(), true), NotDifferentiableError);
  CHECK_NOTHROW(pipe.evaluate(pipe.initial_design(), false));
  DensityField plain;
  plain.rho = {1.0};
  std::vector<double> g{1.0};
  CHECK_THROWS_AS(shape_sensitivity(g, plain, 8), NotDifferentiableError);
}

TEST_CASE("full pipeline passes the harness") {
  Model m;
  m.grid = {20, 20, 1.0, {0, 0}};
  m.features = {make_bar({-1.0, 4.1}, {20.5, 9.7}, 1.7), make_bar({-1.0, 15.2}, {20.5, 10.3}, 1.9)};
  std::vector<DesignParam> ps;
  for (int f = 0; f < 2; ++f)
    for (int s = 0; s < 5; ++s) {
      double v = get_param(m.features[f], s);
      ps.push_back({f, s, v - 3, v + 3});
    }
  m.design = DesignVector(ps);
  m.mapping.boundary = {BoundaryKind::cosine, 1.0, 6.5, 1e-6};
  m.mapping.quadrature = {QuadratureKind::newton_cotes, 1};
  for (int iy = 0; iy <= 20; ++iy) {
    m.fixed_dofs.push_back(node_dof(m.grid.node(0, iy), 0));
    m.fixed_dofs.push_back(node_dof(m.grid.node(0, iy), 1));
  }
  m.loads = Eigen::VectorXd::Zero(2 * m.grid.num_nodes());
  m.loads[node_dof(m.grid.node(20, 10), 1)] = -1.0;
  Pipeline pipe(m, 1);
  auto s = pipe.initial_design();
  auto ev = pipe.evaluate(s, true);
  auto rep = fd_verify([&](std::span<const double> x) { return pipe.compliance(x); }, s, ev.compliance_grad,
                       pipe.lower(), pipe.upper(), pipe.fd_steps(), pipe.labels());
  CHECK(rep.passed());
  CHECK(rep.max_rel_err() < 1e-4);
  auto rv = fd_verify(
      [&](std::span<const double> x) { return pipe.evaluate(x, false).volume; }, s, ev.volume_grad, pipe.lower(),
      pipe.upper(), pipe.fd_steps(), pipe.labels());
  CHECK(rv.passed());
}

}
