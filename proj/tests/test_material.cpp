#include <doctest.h>

#include <cmath>

#include "featmap/errors.hpp"
#include "featmap/material.hpp"

using namespace featmap;

TEST_SUITE("material") {

TEST_CASE("reference values") {
  MaterialModel m;
  m.kind = InterpolationKind::ramp;
  m.q = 1.0;
  CHECK(interpolate(m, 0.5).mu == doctest::Approx(1.0 / 3.0));
  m.kind = InterpolationKind::power;
  m.p = 3.0;
  CHECK(interpolate(m, 0.5).mu == doctest::Approx(0.125));
  m.kind = InterpolationKind::linear;
  CHECK(interpolate(m, 0.37).mu == 0.37);
  m.kind = InterpolationKind::hs_bound;
  CHECK(interpolate(m, 1.0).mu == doctest::Approx(1.0));
  CHECK(interpolate(m, 0.0).mu == 0.0);
}

TEST_CASE("endpoints, monotonicity and derivatives") {
  for (auto k : {InterpolationKind::linear, InterpolationKind::power, InterpolationKind::ramp,
                 InterpolationKind::hs_bound}) {
    MaterialModel m;
    m.kind = k;
    CHECK(interpolate(m, 1.0).mu == doctest::Approx(1.0));
    double prev = -1;
    for (int i = 1; i < 1000; ++i) {
      double r = i / 1000.0;
      auto v = interpolate(m, r);
      CHECK(v.mu > prev);
      CHECK(v.mu <= r + 1e-15);  // none of the models is stiffer than linear
      prev = v.mu;
      double h = 1e-7;
      double fd = (interpolate(m, r + h).mu - interpolate(m, r - h).mu) / (2 * h);
      CHECK(v.dmu == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("ordering at intermediate density") {
  // SIMP p = 3 penalizes most; the HS bound sits between it and linear
  MaterialModel lin, pw, hs;
  lin.kind = InterpolationKind::linear;
  pw.kind = InterpolationKind::power;
  hs.kind = InterpolationKind::hs_bound;
  for (double r : {0.2, 0.5, 0.8}) {
    CHECK(interpolate(pw, r).mu < interpolate(hs, r).mu);
    CHECK(interpolate(hs, r).mu < interpolate(lin, r).mu);
  }
}

TEST_CASE("validation") {
  MaterialModel m;
  m.poisson = 0.5;
  CHECK_THROWS_AS(m.validate(), ValidationError);
  m = {};
  m.youngs = 0;
  CHECK_THROWS_AS(m.validate(), ValidationError);
  m = {};
  m.kind = InterpolationKind::hs_bound;
  m.poisson = 0.25;
  CHECK_THROWS_AS(m.validate(), ValidationError);
  m = {};
  m.p = 0.5;
  CHECK_THROWS_AS(m.validate(), ValidationError);
  CHECK(parse_interpolation("ramp") == InterpolationKind::ramp);
  CHECK_FALSE(parse_interpolation("simp").has_value());
}

}
