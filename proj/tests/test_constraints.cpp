#include <doctest.h>

#include <cmath>
#include <numbers>

#include "featmap/constraints.hpp"
#include "featmap/errors.hpp"
#include "featmap/sensitivity.hpp"

using namespace featmap;

namespace {

MappingConfig exact_area_mapping() {
  MappingConfig c;
  c.boundary = {BoundaryKind::exact, 1.0, 6.5, 1e-6};
  c.quadrature = {QuadratureKind::quasi_analytic, 0};
  c.combine.strategy = CombineStrategy::combine_then_map;
  c.combine.extremum = ExtremumKind::true_max;
  return c;
}

double overlap_of(const std::vector<Feature>& fs, const Grid& g) {
  auto c = exact_area_mapping();
  auto d = map_features(fs, g, c, false);
  return overlap_integral(fs, d, c.boundary.rho_min);
}

const std::vector<Vec2> kL = {{0, 0}, {20, 0}, {20, 10}, {10, 10}, {10, 20}, {0, 20}};

MappingConfig ghost_mapping() {
  MappingConfig c;
  c.boundary = {BoundaryKind::poly3, 1.0, 6.5, 1e-6};
  return c;
}

}  // namespace

TEST_SUITE("constraints") {

TEST_CASE("finite circle separation values") {
  std::vector<Feature> fs = {make_circle({0, 0}, 1.0), make_circle({3, 0}, 1.0)};
  auto v = fcm_separation(fs, 0.5);
  REQUIRE(v.size() == 1);
  CHECK(v[0].value == doctest::Approx(-0.5));
  fs[1] = make_circle({1.5, 0}, 1.0);
  CHECK(fcm_separation(fs, 0.5)[0].value == doctest::Approx(1.0));
  fs[1] = make_circle({0, 0}, 1.0);
  CHECK(fcm_separation(fs, 0.0)[0].degenerate);
}

TEST_CASE("bar surrogate circles cover the bar") {
  auto b = make_bar({1, 2}, {9, 5}, 0.7);
  auto cs = surrogate_circles(b, 0);
  CHECK(cs.size() >= 2);
  for (int i = 0; i <= 200; ++i)
    for (int j = 0; j <= 40; ++j) {
      Vec2 x(0 + 10.0 * i / 200, 1 + 5.0 * j / 40);
      if (signed_distance(b, x) < 0) continue;
      bool covered = false;
      for (auto& c : cs) covered = covered || (x - c.center).norm() <= c.radius + 1e-12;
      CHECK(covered);
    }
  CHECK_THROWS_AS(surrogate_circles(make_rectangle({0, 0}, {1, 1}), 0), ValidationError);
}

TEST_CASE("finite circle partials against finite differences") {
  std::vector<Feature> fs = {make_bar({1, 2}, {9, 5}, 0.7), make_bar({2, 7}, {8, 1.5}, 0.9), make_circle({5, 8}, 1.2)};
  auto pairs = fcm_separation(fs, 0.3);
  for (std::size_t k = 0; k < pairs.size(); k += 7) {
    for (int fi = 0; fi < 3; ++fi)
      for (int slot = 0; slot < kSlots; ++slot) {
        if (slot_name(kind_of(fs[fi]), slot).empty() || slot == kSizeSlot) continue;
        double h = 1e-6;
        auto p = fs, m = fs;
        set_param(p[fi], slot, get_param(fs[fi], slot) + h);
        set_param(m[fi], slot, get_param(fs[fi], slot) - h);
        double fd = (fcm_separation(p, 0.3)[k].value - fcm_separation(m, 0.3)[k].value) / (2 * h);
        double an = 0;
        for (auto& [s, v] : pairs[k].d)
          if (s == global_slot(fi, slot)) an = v;
        CHECK(an == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
      }
  }
}

TEST_CASE("overlap integral reference cases") {
  Grid g{40, 40, 0.25, {0, 0}};
  CHECK(std::abs(overlap_of({make_circle({3, 5}, 1.0), make_circle({7, 5}, 1.0)}, g)) < 1e-4);
  CHECK(overlap_of({make_circle({5, 5}, 1.0), make_circle({5, 5}, 1.0)}, g) ==
        doctest::Approx(std::numbers::pi).epsilon(1e-4));
  CHECK(overlap_of({make_circle({0, 5}, 1.0)}, g) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-4));
}

TEST_CASE("auxiliary density overlap") {
  Grid g{30, 30, 1.0, {0, 0}};
  MappingConfig c;
  c.boundary = {BoundaryKind::poly3, 1.0, 6.5, 1e-6};
  std::vector<Feature> one = {make_bar({5, 5}, {25, 20}, 2)};
  CHECK(overlap_auxiliary_density(one, g, c, 0.0, 40.0) == 0.0);
  std::vector<Feature> two = {make_bar({5, 5}, {25, 20}, 2), make_bar({5, 5}, {25, 20}, 2)};
  double v = overlap_auxiliary_density(two, g, c, 0.0, 40.0);
  CHECK(v >= 1.0);
  CHECK(v <= std::pow(900.0, 1.0 / 40.0));
  std::vector<Feature> apart = {make_bar({3, 5}, {3, 25}, 1.5), make_bar({10, 5}, {10, 25}, 1.5)};
  CHECK(overlap_auxiliary_density(apart, g, c, 0.0, 40.0) == 0.0);
  // a gap larger than the clearance registers once the fields are dilated
  CHECK(overlap_auxiliary_density(apart, g, c, 6.0, 40.0) > 0.0);
}

TEST_CASE("ghost points sit outside at the offset") {
  auto gs = ghost_points(kL, 0.5, 1.0);
  CHECK(gs.size() > 60);
  for (auto& x : gs) {
    CHECK_FALSE(point_in_polygon(kL, x));
    CHECK(distance_to_polygon(kL, x) == doctest::Approx(0.5).epsilon(1e-9));
  }
  // neighbours along the layer are no farther apart than the spacing allows
  for (auto& x : gs) {
    double nearest = 1e9;
    for (auto& y : gs)
      if (&x != &y) nearest = std::min(nearest, (x - y).norm());
    CHECK(nearest <= 1.0 + 1e-9);
  }
  CHECK_THROWS_AS(ghost_points(std::vector<Vec2>{{0, 0}, {1, 0}}, 0.5, 1.0), ValidationError);
}

TEST_CASE("ghost containment") {
  auto gs = ghost_points(kL, 0.5, 1.0);
  auto c = ghost_mapping();
  std::vector<Feature> inside = {make_bar({3, 3}, {16, 6}, 1.0), make_bar({4, 4}, {5, 16}, 1.0)};
  CHECK(ghost_containment(inside, gs, c, 40.0, 2.0) < 0.0);
  std::vector<Feature> poking = {make_bar({3, 3}, {20.2, 5}, 1.0)};
  CHECK(ghost_containment(poking, gs, c, 40.0, 2.0) > 0.0);
  // reaching from the upper arm into the notch
  std::vector<Feature> notch = {make_bar({4, 15}, {13, 15}, 1.0)};
  CHECK(ghost_containment(notch, gs, c, 40.0, 2.0) > 0.0);
  // entirely inside the notch, clear of the ghost layer: not seen
  std::vector<Feature> away = {make_bar({14, 15}, {17, 16}, 1.0)};
  CHECK(ghost_containment(away, gs, c, 40.0, 2.0) < 0.0);
}

TEST_CASE("constraint gradients pass the harness") {
  Model m;
  m.grid = {24, 16, 1.0, {0, 0}};
  m.features = {make_bar({3.1, 4.2}, {14.3, 9.1}, 1.6), make_bar({9.2, 12.7}, {20.1, 5.3}, 1.4)};
  std::vector<DesignParam> ps;
  for (int f = 0; f < 2; ++f)
    for (int s = 0; s < 5; ++s) {
      double v = get_param(m.features[f], s);
      ps.push_back({f, s, v - 2, v + 2});
    }
  m.design = DesignVector(ps);
  m.mapping.boundary = {BoundaryKind::poly3, 1.0, 6.5, 1e-6};
  m.mapping.combine.extremum = ExtremumKind::ks;
  m.mapping.combine.p = 10.0;
  for (int iy = 0; iy <= 16; ++iy) {
    m.fixed_dofs.push_back(node_dof(m.grid.node(0, iy), 0));
    m.fixed_dofs.push_back(node_dof(m.grid.node(0, iy), 1));
  }
  m.loads = Eigen::VectorXd::Zero(2 * m.grid.num_nodes());
  m.loads[node_dof(m.grid.node(24, 8), 1)] = -1.0;

  std::vector<ConstraintSpec> specs(5);
  specs[0].kind = ConstraintKind::volume;
  specs[0].volume_fraction = 0.3;
  specs[1].kind = ConstraintKind::fcm_separation;
  specs[1].min_gap = 0.5;
  specs[1].p = 10.0;
  specs[2].kind = ConstraintKind::overlap_integral;
  specs[3].kind = ConstraintKind::overlap_auxiliary;
  specs[3].min_gap = 0.5;
  specs[3].p = 8.0;
  specs[4].kind = ConstraintKind::containment;
  specs[4].polygon = {{2, 2}, {22, 2}, {22, 14}, {2, 14}};
  specs[4].p = 8.0;

  Pipeline pipe(m, 1);
  auto s = pipe.initial_design();
  auto ev = pipe.evaluate(s, true);
  auto cv = evaluate_constraints(specs, m, ev, true, 1);
  REQUIRE(cv.size() == 5);
  CHECK(cv[3].value > 0.0);  // the bars cross
  CHECK(cv[4].value > 0.0);  // and reach beyond the inner rectangle
  for (std::size_t k = 0; k < specs.size(); ++k) {
    auto f = [&](std::span<const double> x) {
      auto e = pipe.evaluate(x, false);
      return evaluate_constraints(std::span(specs).subspan(k, 1), m, e, false, 1)[0].value;
    };
    auto rep = fd_verify(f, s, cv[k].grad, pipe.lower(), pipe.upper(), pipe.fd_steps(), pipe.labels());
    INFO(cv[k].name, " max rel err ", rep.max_rel_err());
    CHECK(rep.passed());
  }
}

TEST_CASE("spec validation") {
  ConstraintSpec s;
  s.volume_fraction = 0.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = {};
  s.min_gap = -1;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = {};
  s.threshold_factor = 0.5;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  CHECK(parse_constraint_kind("containment") == ConstraintKind::containment);
}

}
