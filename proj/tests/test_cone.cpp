#include "pclab/cone.hpp"
#include "pclab/quadrature.hpp"

#include "support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace pclab;

namespace {

Cone quadrant() { return Cone::orthant(2); }

Vec rand_dir(Rng& rng, int dim) {
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.normal();
  return v / v.norm();
}

}  // namespace

TEST_CASE("polar cone of the quadrant is the opposite quadrant") {
  Cone c = quadrant();
  Cone p = c.polar();
  REQUIRE(p.contains(vec2(-1.0, 0.0)));
  REQUIRE(p.contains(vec2(0.0, -2.0)));
  REQUIRE(p.contains(vec2(-0.3, -0.7)));
  REQUIRE_FALSE(p.contains(vec2(0.1, -0.7)));
  REQUIRE_FALSE(p.contains(vec2(0.5, 0.5)));
}

TEST_CASE("polar of a circular cone flips the axis and complements the angle") {
  Cone c = Cone::circular(vec3(0, 0, 1), 30.0 * kPi / 180.0);
  Cone p = c.polar();
  REQUIRE(p.is_circular());
  REQUIRE((p.axis() - vec3(0, 0, -1)).norm() < 1e-14);
  REQUIRE(p.half_angle() == Catch::Approx(60.0 * kPi / 180.0));
}

TEST_CASE("polar of a polyhedral cone via brute-force membership") {
  // C with normals {(-1,0),(0,-1)} is the quadrant; C° must contain exactly
  // the points with <x,y> <= 0 for all x in C, checked on a grid.
  Cone c = Cone::polyhedral(2, {vec2(-1, 0), vec2(0, -1)});
  Cone p = c.polar();
  Rng rng(7);
  for (int k = 0; k < 400; ++k) {
    Vec y = vec2(rng.uniform(-2, 2), rng.uniform(-2, 2));
    bool in_polar_brute = true;
    for (int i = 0; i <= 20 && in_polar_brute; ++i) {
      for (int j = 0; j <= 20 && in_polar_brute; ++j) {
        Vec x = vec2(i * 0.1, j * 0.1);
        if (x.dot(y) > 1e-9) in_polar_brute = false;
      }
    }
    if (std::abs(p.membership_gap(y)) < 1e-6) continue;  // skip boundary band
    REQUIRE(p.contains(y) == in_polar_brute);
  }
  // Generators of C° are the negated coordinate rays.
  bool has1 = false, has2 = false;
  for (const auto& g : p.generators()) {
    if ((g - vec2(-1, 0)).norm() < 1e-12) has1 = true;
    if ((g - vec2(0, -1)).norm() < 1e-12) has2 = true;
  }
  REQUIRE(has1);
  REQUIRE(has2);
}

TEST_CASE("bipolarity on random membership queries") {
  auto check = [](const Cone& c) {
    Cone pp = c.polar().polar();
    Rng rng(11);
    int tested = 0;
    for (int k = 0; k < 2000 && tested < 1000; ++k) {
      Vec x = rand_dir(rng, c.dim()) * rng.uniform(0.1, 5.0);
      if (std::abs(c.membership_gap(x)) < 1e-12 * (1 + x.norm())) continue;
      ++tested;
      REQUIRE(c.contains(x) == pp.contains(x));
    }
    REQUIRE(tested >= 1000);
  };
  check(quadrant());
  check(Cone::circular(vec3(0.3, -0.2, 0.9), 0.6));
  check(Cone::orthant(3));
}

TEST_CASE("reference direction of the quadrant is the diagonal") {
  Cone c = quadrant();
  REQUIRE((c.reference_direction() - vec2(std::sqrt(0.5), std::sqrt(0.5))).norm() < 1e-14);
}

TEST_CASE("reference direction of a circular cone is the axis") {
  Vec a = vec3(1, 2, 2).normalized();
  Cone c = Cone::circular(a, 0.5);
  REQUIRE((c.reference_direction() - a).norm() < 1e-14);
}

TEST_CASE("reference direction is the normalized mean of unit generators and positive on them") {
  // cone generated by the rays (1,0) and (1,1)
  Vec g0 = vec2(1, 0);
  Vec g1 = vec2(1, 1).normalized();
  Cone c = Cone::polyhedral(2, {vec2(0, -1), vec2(-1, 1).normalized()});
  Vec expect = (g0 + g1).normalized();  // mean-of-unit-generators rule
  REQUIRE((c.reference_direction() - expect).norm() < 1e-12);
  for (const auto& g : c.generators()) REQUIRE(c.reference_direction().dot(g) > 0);
}

TEST_CASE("degenerate cones are rejected") {
  REQUIRE_THROWS_AS(Cone::polyhedral(2, {vec2(1, 0), vec2(-1, 0)}), ValidationError);
  REQUIRE_THROWS_AS(Cone::circular(vec2(1, 0), kPi / 2), ValidationError);
  // halfspace: not pointed in 3D
  REQUIRE_THROWS_AS(Cone::polyhedral(3, {vec3(0, 0, -1), vec3(0, -1, 0)}), ValidationError);
  // redundant facet
  REQUIRE_THROWS_AS(
      Cone::polyhedral(3, {vec3(-1, 0, 0), vec3(0, -1, 0), vec3(0, 0, -1),
                           vec3(-1, -1, -1).normalized()}),
      ValidationError);
}

TEST_CASE("cap quadrature integrates constants to the cap measure") {
  SECTION("quadrant: quarter circle") {
    auto q = cap_quadrature(quadrant(), 1e-10, 40);
    double sigma = q.integrate([](const Vec&) { return 1.0; });
    REQUIRE(sigma == Catch::Approx(kPi / 2).margin(1e-10));
    REQUIRE(q.est_error() < 1e-9);
  }
  SECTION("circular 3D cone: 2 pi (1 - cos beta)") {
    double beta = 0.7;
    auto q = cap_quadrature(Cone::circular(vec3(0, 0, 1), beta), 1e-9, 40);
    double sigma = q.integrate([](const Vec&) { return 1.0; });
    REQUIRE(sigma == Catch::Approx(2 * kPi * (1 - std::cos(beta))).margin(1e-8));
  }
  SECTION("octant: one eighth of the sphere") {
    auto q = cap_quadrature(Cone::orthant(3), 1e-9, 40);
    double sigma = q.integrate([](const Vec&) { return 1.0; });
    REQUIRE(sigma == Catch::Approx(4 * kPi / 8).margin(1e-8));
  }
}

TEST_CASE("cap quadrature against a closed-form first moment") {
  // quadrant, f(u) = <u, u_ref>: integral of cos(theta - pi/4) over [0, pi/2]
  Cone c = quadrant();
  auto q = cap_quadrature(c, 1e-10, 40);
  Vec uref = c.reference_direction();
  double got = q.integrate([&](const Vec& u) { return u.dot(uref); });
  REQUIRE(got == Catch::Approx(std::sqrt(2.0)).margin(1e-10));
}

TEST_CASE("quadrature consistency on degree <= 2 spherical polynomials") {
  const double tol = 1e-9;
  SECTION("n = 2") {
    Cone c = quadrant();
    auto q = cap_quadrature(c, tol, 40);
    // f = u_x^2: integral over [0, pi/2] of cos^2 = pi/4
    double m2 = q.integrate([](const Vec& u) { return u(0) * u(0); });
    REQUIRE(std::abs(m2 - kPi / 4) < 10 * tol);
    // f = u_x u_y: integral of cos sin = 1/2
    double mxy = q.integrate([](const Vec& u) { return u(0) * u(1); });
    REQUIRE(std::abs(mxy - 0.5) < 10 * tol);
  }
  SECTION("n = 3 circular, axial symmetry reductions") {
    double beta = 0.9;
    Cone c = Cone::circular(vec3(0, 0, 1), beta);
    auto q = cap_quadrature(c, tol, 40);
    // f = u_z over the cap: 2 pi int_0^beta cos sin = pi sin^2 beta
    double m1 = q.integrate([](const Vec& u) { return u(2); });
    REQUIRE(std::abs(m1 - kPi * std::sin(beta) * std::sin(beta)) < 1e-7);
    // f = u_z^2: 2 pi int_0^beta cos^2 sin = 2 pi (1 - cos^3 beta) / 3
    double m2 = q.integrate([](const Vec& u) { return u(2) * u(2); });
    REQUIRE(std::abs(m2 - 2 * kPi * (1 - std::pow(std::cos(beta), 3)) / 3) < 1e-7);
  }
}

TEST_CASE("all quadrature nodes lie strictly inside the cap") {
  for (const Cone& c : {quadrant(), Cone::orthant(3), Cone::circular(vec3(0, 1, 1).normalized(), 0.4)}) {
    auto q = cap_quadrature(c, 1e-8, 30);
    for (const auto& u : q.nodes()) {
      REQUIRE(std::abs(u.norm() - 1.0) < 1e-12);
      REQUIRE(c.membership_gap(u) < 0.0);
    }
  }
}

TEST_CASE("weights are positive and deterministic across thread counts") {
  auto q = cap_quadrature(Cone::orthant(3), 1e-8, 30);
  for (double w : q.weights()) REQUIRE(w > 0.0);
  auto f = [](const Vec& u) { return std::pow(u(0) + 0.1, -0.3); };
  set_thread_count(1);
  double s1 = q.integrate(f);
  set_thread_count(4);
  double s4 = q.integrate(f);
  set_thread_count(1);
  REQUIRE(s1 == s4);  // bitwise: block-ordered reduction
}

TEST_CASE("boundary directions: quadrant endpoints") {
  auto bd = quadrant().boundary_directions(2);
  REQUIRE(bd.size() == 2);
  bool a = (bd[0] - vec2(-1, 0)).norm() < 1e-12 || (bd[1] - vec2(-1, 0)).norm() < 1e-12;
  bool b = (bd[0] - vec2(0, -1)).norm() < 1e-12 || (bd[1] - vec2(0, -1)).norm() < 1e-12;
  REQUIRE(a);
  REQUIRE(b);
}

TEST_CASE("boundary directions: circular 3D ring at the complementary angle") {
  Cone c = Cone::circular(vec3(0, 0, 1), kPi / 4);
  auto bd = c.boundary_directions(4);
  REQUIRE(bd.size() == 4);
  for (const auto& v : bd) {
    REQUIRE(v(2) == Catch::Approx(std::cos(3 * kPi / 4)).margin(1e-12));
  }
  REQUIRE((bd[0] - vec3(std::sqrt(0.5), 0, -std::sqrt(0.5))).norm() < 1e-12);
  REQUIRE((bd[1] - vec3(0, std::sqrt(0.5), -std::sqrt(0.5))).norm() < 1e-12);
}

TEST_CASE("boundary directions: octant arcs partitioned by arc length") {
  Cone c = Cone::orthant(3);
  int m = 9;
  auto bd = c.boundary_directions(m);
  REQUIRE(static_cast<int>(bd.size()) == m);
  // all on the boundary of the polar cap: in C°, orthogonal to one face
  Cone p = c.polar();
  for (const auto& v : bd) {
    REQUIRE(p.contains(v, 1e-9));
    double m0 = std::max({v(0), v(1), v(2)});
    REQUIRE(std::abs(m0) < 1e-9);  // touches a coordinate plane
  }
  // pairwise distinct
  for (std::size_t i = 0; i < bd.size(); ++i)
    for (std::size_t j = i + 1; j < bd.size(); ++j) REQUIRE((bd[i] - bd[j]).norm() > 1e-9);
}

TEST_CASE("projection onto cones") {
  Cone c = quadrant();
  REQUIRE((c.project(vec2(1, 1)) - vec2(1, 1)).norm() < 1e-14);
  REQUIRE((c.project(vec2(-1, 2)) - vec2(0, 2)).norm() < 1e-12);
  REQUIRE((c.project(vec2(-1, -1)) - vec2(0, 0)).norm() < 1e-12);
  Cone cc = Cone::circular(vec3(0, 0, 1), 0.5);
  Vec x = vec3(3, 0, 0.1);
  Vec px = cc.project(x);
  REQUIRE(cc.contains(px, 1e-9));
  // projection is no farther than any candidate feasible point
  REQUIRE((x - px).norm() <= (x - vec3(0.5, 0, 1)).norm() + 1e-12);
}
