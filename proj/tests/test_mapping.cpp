#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "featmap/errors.hpp"
#include "featmap/mapping.hpp"

using namespace featmap;

namespace {

const BoundaryKind kSmooth[] = {BoundaryKind::linear, BoundaryKind::poly3, BoundaryKind::cosine, BoundaryKind::tanh,
                                BoundaryKind::circ_sample};

double value_at(const Feature& f, const Grid& g, int e, const BoundaryModel& m, const Quadrature& q) {
  return element_density(FeatureField(f, 0, FieldKind::signed_distance), g, e, m, q);
}

}  // namespace

TEST_SUITE("mapping") {

TEST_CASE("heaviside reference values") {
  CHECK(heaviside_eval({BoundaryKind::exact, 1.0, 6.5, 1e-6}, 0.2).value == 1.0);
  CHECK(heaviside_eval({BoundaryKind::exact, 1.0, 6.5, 1e-6}, -0.2).value == 1e-6);
  CHECK(heaviside_eval({BoundaryKind::linear, 0.5, 6.5, 0.0}, 0.0).value == doctest::Approx(0.5));
  CHECK(heaviside_eval({BoundaryKind::tanh, 1.0, 6.5, 0.0}, 0.0).value == doctest::Approx(0.5));
  BoundaryModel cs{BoundaryKind::circ_sample, 0.7, 6.5, 0.0};
  CHECK(heaviside_eval(cs, 0.0).value == doctest::Approx(0.5));
  CHECK(heaviside_eval(cs, 0.7).value == doctest::Approx(1.0));
  CHECK(heaviside_eval(cs, -0.7).value == doctest::Approx(0.0));
  BoundaryModel p3{BoundaryKind::poly3, 0.8, 6.5, 0.0};
  CHECK(heaviside_eval(p3, 0.8).value == doctest::Approx(1.0));
  CHECK(heaviside_eval(p3, -0.8).value == doctest::Approx(0.0));
  CHECK(heaviside_eval(p3, 0.8).derivative == doctest::Approx(0.0));
  BoundaryModel cosm{BoundaryKind::cosine, 1.0, 6.5, 0.0};
  CHECK(heaviside_eval(cosm, 0.0).value == doctest::Approx(0.5));
  CHECK(heaviside_eval(cosm, 1.0).value == doctest::Approx(1.0));
}

TEST_CASE("heaviside is monotone with consistent derivatives") {
  for (BoundaryKind k : {BoundaryKind::exact, BoundaryKind::linear, BoundaryKind::poly3, BoundaryKind::cosine,
                         BoundaryKind::tanh, BoundaryKind::circ_sample}) {
    BoundaryModel m{k, 0.75, 2.5, 1e-3};
    double prev = -1.0;
    for (int i = 0; i <= 4000; ++i) {
      double d = -2.0 + 4.0 * i / 4000.0;
      auto h = heaviside_eval(m, d);
      CHECK(h.value >= prev);
      CHECK(h.value >= m.rho_min);
      CHECK(h.value <= 1.0);
      prev = h.value;
      if (k == BoundaryKind::exact) continue;
      // stay clear of the band ends where linear and circ_sample kink
      if (std::abs(std::abs(d) - m.half_width) < 1e-3) continue;
      double eps = 1e-6;
      double fd = (heaviside_eval(m, d + eps).value - heaviside_eval(m, d - eps).value) / (2 * eps);
      double err = std::abs(h.derivative - fd) / std::max(std::abs(fd), 1e-3);
      INFO(boundary_kind_name(k), " d=", d);
      CHECK(err < 1e-6);
    }
  }
}

TEST_CASE("boundary model validation") {
  CHECK_THROWS_AS((BoundaryModel{BoundaryKind::poly3, 0.0, 6.5, 1e-6}.validate()), ValidationError);
  CHECK_THROWS_AS((BoundaryModel{BoundaryKind::tanh, 1.0, -1.0, 1e-6}.validate()), ValidationError);
  CHECK_THROWS_AS((BoundaryModel{BoundaryKind::poly3, 1.0, 6.5, 0.0}.validate()), ValidationError);
  CHECK_THROWS_AS((BoundaryModel{BoundaryKind::poly3, 1.0, 6.5, 1.0}.validate()), ValidationError);
  CHECK_THROWS_AS((Quadrature{QuadratureKind::newton_cotes, 4}.validate()), ValidationError);
  CHECK(parse_boundary_kind("poly3") == BoundaryKind::poly3);
  CHECK_FALSE(parse_boundary_kind("blobby").has_value());
}

TEST_CASE("grayness") {
  CHECK(grayness(0.0) == 0.0);
  CHECK(grayness(1.0) == 0.0);
  CHECK(grayness(0.25) == doctest::Approx(0.75));
}

TEST_CASE("quadrature weights sum to one") {
  for (int d = 0; d <= 3; ++d) {
    double s = 0;
    for (auto& q : quadrature_points({QuadratureKind::newton_cotes, d})) s += q.weight;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(quadrature_points({QuadratureKind::newton_cotes, d}).size() == std::size_t((d + 1) * (d + 1)));
  }
  double s = 0;
  for (auto& q : quadrature_points({QuadratureKind::quasi_analytic, 0})) s += q.weight;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("element density reference cases") {
  Grid g{4, 4, 1.0, {0, 0}};
  BoundaryModel exact{BoundaryKind::exact, 1.0, 6.5, 1e-6};
  // fully inside
  auto big = make_rectangle({-1, -1}, {5, 5});
  for (int d = 0; d <= 3; ++d) CHECK(value_at(big, g, 5, exact, {QuadratureKind::newton_cotes, d}) == 1.0);
  CHECK(value_at(big, g, 5, {BoundaryKind::poly3, 0.5, 6.5, 1e-6}, {QuadratureKind::newton_cotes, 2}) == 1.0);
  // an edge through the middle of element (1, 1)
  auto half = make_rectangle({-1, -1}, {1.5, 5});
  CHECK(value_at(half, g, g.element(1, 1), exact, {QuadratureKind::quasi_analytic, 0}) ==
        doctest::Approx((1 + 1e-6) / 2).epsilon(1e-12));
  // centroid inside, 30 % of the element outside: midpoint sees only the centroid
  auto most = make_rectangle({-1, -1}, {1.7, 5});
  CHECK(value_at(most, g, g.element(1, 1), exact, {QuadratureKind::newton_cotes, 0}) == 1.0);
  CHECK(value_at(most, g, g.element(1, 1), exact, {QuadratureKind::quasi_analytic, 0}) ==
        doctest::Approx(0.7 + 0.3e-6).epsilon(1e-9));
}

TEST_CASE("partials vanish outside the transition band") {
  Grid g{6, 6, 1.0, {0, 0}};
  auto c = make_circle({3, 3}, 1.0);
  FeatureField f(c, 0, FieldKind::signed_distance);
  for (BoundaryKind k : {BoundaryKind::linear, BoundaryKind::poly3, BoundaryKind::cosine}) {
    auto d = element_density_jacobian(f, g, g.element(0, 0), {k, 0.5, 6.5, 1e-6}, {QuadratureKind::newton_cotes, 2});
    for (auto& [slot, v] : d) CHECK(v == 0.0);
  }
}

TEST_CASE("growing a circle raises band densities") {
  Grid g{8, 8, 1.0, {0, 0}};
  auto c = make_circle({4.1, 3.9}, 2.2);
  FeatureField f(c, 0, FieldKind::signed_distance);
  BoundaryModel m{BoundaryKind::linear, 0.5, 6.5, 1e-6};
  int band = 0;
  for (int e = 0; e < g.num_elements(); ++e) {
    auto r = element_density(f, g, e, m, {QuadratureKind::newton_cotes, 2}, true);
    double dr = 0;
    for (auto& [slot, v] : r.d)
      if (slot == 2) dr = v;
    if (r.rho > 1e-6 && r.rho < 1.0) {
      ++band;
      CHECK(dr > 0.0);
    }
  }
  CHECK(band > 10);
}

TEST_CASE("exact model has no jacobian") {
  Grid g{2, 2, 1.0, {0, 0}};
  FeatureField f(make_circle({1, 1}, 0.7), 0, FieldKind::signed_distance);
  CHECK_THROWS_AS(element_density_jacobian(f, g, 0, {BoundaryKind::exact, 1.0, 6.5, 1e-6}, {}),
                  NotDifferentiableError);
  CHECK_THROWS_AS(map_field(f, g, {BoundaryKind::exact, 1.0, 6.5, 1e-6}, {}, true), NotDifferentiableError);
}

TEST_CASE("circ_sample rejects non-distance fields") {
  Grid g{2, 2, 1.0, {0, 0}};
  FeatureField f(make_hyperellipse({1, 1}, 0.7, 0.5, 4), 0, FieldKind::implicit);
  CHECK_THROWS_AS(map_field(f, g, {BoundaryKind::circ_sample, 0.5, 6.5, 1e-6}, {}, false), ValidationError);
}

TEST_CASE("element density partials match central differences") {
  Grid g{6, 6, 1.0, {0, 0}};
  std::vector<Feature> fs = {make_bar({0.7, 1.2}, {5.1, 4.3}, 1.1), make_circle({3.2, 2.7}, 1.9),
                             make_hyperellipse({3.1, 2.9}, 2.4, 1.3, 4, 0.3)};
  std::vector<Quadrature> qs = {{QuadratureKind::newton_cotes, 0}, {QuadratureKind::newton_cotes, 1},
                                {QuadratureKind::newton_cotes, 2}, {QuadratureKind::newton_cotes, 3},
                                {QuadratureKind::quasi_analytic, 0}};
  int compared = 0;
  for (auto& base : fs) {
    ShapeKind sk = kind_of(base);
    for (FieldKind fk : {FieldKind::signed_distance, FieldKind::implicit}) {
      for (BoundaryKind bk : kSmooth) {
        if (bk == BoundaryKind::circ_sample && fk == FieldKind::implicit) continue;
        BoundaryModel m{bk, 0.6, 3.0, 1e-6};
        for (auto& q : qs) {
          for (int e = 0; e < g.num_elements(); e += 5) {
            auto r = element_density(FeatureField(base, 0, fk), g, e, m, q, true);
            for (int slot = 0; slot < kSlots; ++slot) {
              if (slot_name(sk, slot).empty() || slot == kSizeSlot) continue;
              double h = 1e-6 * feature_scale(base);
              Feature p = base, n = base;
              set_param(p, slot, get_param(base, slot) + h);
              set_param(n, slot, get_param(base, slot) - h);
              double fd = (element_density(FeatureField(p, 0, fk), g, e, m, q) -
                           element_density(FeatureField(n, 0, fk), g, e, m, q)) /
                          (2 * h);
              double an = 0;
              for (auto& [s, v] : r.d)
                if (s == slot) an = v;
              double err = std::abs(an - fd) / std::max(std::abs(fd), 1e-4);
              INFO(kind_name(sk), " ", boundary_kind_name(bk), " q", q.degree, " e", e, " ", slot_name(sk, slot));
              CHECK(err < 1e-5);
              ++compared;
            }
          }
        }
      }
    }
  }
  CHECK(compared > 1000);
}

TEST_CASE("integer translation permutes densities") {
  Grid g{12, 12, 1.0, {0, 0}};
  auto f = make_bar({2.25, 1.5}, {6.5, 5.75}, 1.125);
  auto moved = f;
  moved.offset = {3.0, 2.0};
  for (int d = 0; d <= 3; ++d) {
    Quadrature q{QuadratureKind::newton_cotes, d};
    BoundaryModel m{BoundaryKind::poly3, 0.75, 6.5, 1e-6};
    auto a = map_field(FeatureField(f, 0, FieldKind::signed_distance), g, m, q, false).rho;
    auto b = map_field(FeatureField(moved, 0, FieldKind::signed_distance), g, m, q, false).rho;
    for (int ey = 0; ey + 2 < g.ny; ++ey)
      for (int ex = 0; ex + 3 < g.nx; ++ex)
        CHECK(std::abs(b[g.element(ex + 3, ey + 2)] - a[g.element(ex, ey)]) < 1e-14);
  }
}

TEST_CASE("map_field does not depend on the thread count") {
  Grid g{30, 20, 0.5, {-1, 2}};
  FeatureField f(make_hyperellipse({6, 7}, 5.0, 2.0, 6, 0.5), 0, FieldKind::signed_distance);
  BoundaryModel m{BoundaryKind::cosine, 0.5, 6.5, 1e-6};
  auto a = map_field(f, g, m, {QuadratureKind::newton_cotes, 2}, true, 1);
  auto b = map_field(f, g, m, {QuadratureKind::newton_cotes, 2}, true, 3);
  CHECK(a.rho == b.rho);
  CHECK(a.jacobian == b.jacobian);
}

TEST_CASE("quasi analytic exact model integrates a circle area") {
  Grid g{20, 20, 0.5, {0, 0}};
  FeatureField f(make_circle({5.1, 4.9}, 3.3), 0, FieldKind::signed_distance);
  auto r = map_field(f, g, {BoundaryKind::exact, 1.0, 6.5, 1e-9}, {QuadratureKind::quasi_analytic, 0}, false);
  double area = 0;
  for (double v : r.rho) area += v * g.element_area();
  // Gauss rows converge slowly where a row is tangent to the circle
  CHECK(area == doctest::Approx(std::numbers::pi * 3.3 * 3.3).epsilon(2e-4));
}

}
