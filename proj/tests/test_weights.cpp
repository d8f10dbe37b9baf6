#include "pclab/weight.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace pclab;

namespace {
Vec sample_in_cone(const Cone& c, Rng& rng) {
  for (;;) {
    Vec v(c.dim());
    for (int i = 0; i < c.dim(); ++i) v(i) = rng.normal();
    v.normalize();
    if (c.strictly_inside(v, 1e-6)) return v * rng.uniform(0.1, 8.0);
  }
}
}  // namespace

TEST_CASE("weights are homogeneous of the declared degree") {
  Cone c = Cone::orthant(2);
  for (const auto& th : {WeightSpec::radial_power(1.5),
                         WeightSpec::directional_power(2.0, vec2(1, 1))}) {
    Rng rng(3);
    for (int k = 0; k < 100; ++k) {
      Vec x = sample_in_cone(c, rng);
      double base = th(x);
      for (double t : {0.5, 2.0, 10.0})
        REQUIRE(th(t * x) == Catch::Approx(std::pow(t, -th.q()) * base).epsilon(1e-12));
    }
  }
}

TEST_CASE("cross-section bounds bracket the weight") {
  Cone c = Cone::orthant(2);
  WeightSpec th = WeightSpec::directional_power(1.0, vec2(1, 1));
  auto b = th.cross_section_bounds(c);
  REQUIRE(b.m > 0);
  REQUIRE(b.m <= b.M);
  Vec u = c.reference_direction();
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    Vec x = sample_in_cone(c, rng);
    double s = std::pow(u.dot(x), -th.q());
    REQUIRE(th(x) >= b.m * s * (1 - 1e-9));
    REQUIRE(th(x) <= b.M * s * (1 + 1e-9));
  }
}

TEST_CASE("smooth weights satisfy the Euler identity") {
  Cone c = Cone::orthant(3);
  Rng rng(17);
  for (const auto& th : {WeightSpec::radial_power(3.0),
                         WeightSpec::directional_power(0.5, vec3(1, 1, 1))}) {
    for (int k = 0; k < 50; ++k) {
      Vec x = sample_in_cone(c, rng);
      double lhs = th.gradient(x).dot(x);
      REQUIRE(lhs == Catch::Approx(-th.q() * th(x)).epsilon(1e-10));
    }
  }
}

TEST_CASE("custom weights are verified, not trusted") {
  Cone c = Cone::orthant(2);
  // correct: q = 1, Theta = 2 / (x + y)
  auto ok = WeightSpec::custom(
      1.0, [](const Vec& x) { return 2.0 / (x(0) + x(1)); },
      [](const Vec& x) {
        double d = x(0) + x(1);
        return Vec(vec2(-2.0 / (d * d), -2.0 / (d * d)));
      },
      c);
  REQUIRE(ok.q() == 1.0);
  REQUIRE(ok.smooth());
  // wrong declared degree must be rejected
  REQUIRE_THROWS_AS(WeightSpec::custom(
                        2.0, [](const Vec& x) { return 2.0 / (x(0) + x(1)); }, nullptr, c),
                    ValidationError);
  // non-positive evaluator must be rejected
  REQUIRE_THROWS_AS(WeightSpec::custom(
                        0.0, [](const Vec& x) { return x(0) - x(1); }, nullptr, c),
                    ValidationError);
}
