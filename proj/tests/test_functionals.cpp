#include "pclab/functionals.hpp"

#include "support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace pclab;

namespace {

Cone quadrant() { return Cone::orthant(2); }

PseudoCone make_wedge() {
  return PseudoCone::wulff(quadrant(), {vec2(-std::sqrt(0.5), -std::sqrt(0.5))}, {std::sqrt(2.0)});
}
PseudoCone make_shift() { return PseudoCone::shifted_cone(quadrant(), vec2(1, 1)); }
PseudoCone make_hyp() { return PseudoCone::hyperbola(quadrant(), 1.0); }

FunctionalEngine engine2(double q, const char* kind = "radial") {
  WeightSpec w = std::string(kind) == "radial" ? WeightSpec::radial_power(q)
                                               : WeightSpec::directional_power(q, vec2(1, 1));
  return FunctionalEngine(quadrant(), w, {1e-10, 40});
}

std::vector<double> tail_schedule() {
  return {10, 31.6227766, 100, 316.227766, 1000, 3162.27766, 10000};
}

}  // namespace

TEST_CASE("covolume of the wedge with the trivial weight is the triangle area") {
  auto eng = engine2(0.0);
  auto r = eng.covolume(make_wedge());
  REQUIRE(r.value == Catch::Approx(2.0).margin(1e-9));
  REQUIRE(r.error < 1e-9);
}

TEST_CASE("covolume of the hyperbola body at q = 3/2 against two oracles") {
  auto eng = engine2(1.5);
  auto r = eng.covolume(make_hyp());
  // oracle 1: adaptive 1D quadrature of 2 (sin cos)^(-1/4) with endpoint
  // regularization by symmetry (integrand symmetric about pi/4)
  double half = oracle::integrate_sing_lo(
      [](double th) { return 2.0 * std::pow(std::sin(th) * std::cos(th), -0.25); }, 0.0, kPi / 4,
      1e-13);
  double oracle_quad = 2.0 * half;
  // oracle 2: Beta-function closed form  B(3/8, 3/8) = Gamma(3/8)^2/Gamma(3/4)
  double oracle_gamma = std::tgamma(0.375) * std::tgamma(0.375) / std::tgamma(0.75);
  REQUIRE(oracle_quad == Catch::Approx(oracle_gamma).epsilon(1e-9));
  REQUIRE(r.value == Catch::Approx(oracle_gamma).epsilon(1e-8));
}

TEST_CASE("covolume scales like t^(n-q)") {
  auto eng = engine2(0.0);
  auto base = eng.covolume(make_wedge());
  auto scaled = eng.covolume(scale(make_wedge(), 3.0));
  REQUIRE(scaled.value == Catch::Approx(9.0 * base.value).epsilon(1e-12));
  REQUIRE(scaled.value == Catch::Approx(18.0).margin(1e-8));
}

TEST_CASE("covolume rejects q >= n") {
  auto eng = engine2(2.0);
  REQUIRE_THROWS_AS(eng.covolume(make_hyp()), ValidationError);
}

TEST_CASE("volume of the shifted cone at q = 3") {
  auto eng = engine2(3.0);
  auto r = eng.volume(make_shift());
  // closed form of int_0^{pi/2} min(cos, sin) = 2 - sqrt(2); cross-checked by
  // the Cartesian iterated integral int_1^inf int_1^inf (x^2+y^2)^{-3/2}
  double expect = 2.0 - std::sqrt(2.0);
  REQUIRE(r.value == Catch::Approx(expect).epsilon(1e-9));
  // Cartesian oracle: the inner y-integral is [y / (x^2 sqrt(x^2+y^2))]_1^inf;
  // substituting x = 1/t maps the outer integral onto a bounded one
  double cart = oracle::integrate_1d(
      [](double t) { return 1.0 - t / std::sqrt(1.0 + t * t); }, 0.0, 1.0, 1e-13);
  REQUIRE(r.value == Catch::Approx(cart).epsilon(1e-9));
}

TEST_CASE("volume homogeneity and the wedge value") {
  auto eng = engine2(3.0);
  auto base = eng.volume(make_shift());
  auto doubled = eng.volume(scale(make_shift(), 2.0));
  REQUIRE(doubled.value == Catch::Approx(base.value / 2.0).epsilon(1e-12));
  // wedge: 1/(q-n) int rho^{-1} = int (cos+sin)/2 = 1
  auto w = eng.volume(make_wedge());
  REQUIRE(w.value == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("volume rejects q <= n") {
  auto eng = engine2(1.5);
  REQUIRE_THROWS_AS(eng.volume(make_hyp()), ValidationError);
}

TEST_CASE("volume against Monte-Carlo over a truncated region") {
  auto eng = engine2(3.0);
  double R = 5.0;
  auto shift = make_shift();
  double trunc = eng.volume_truncated(shift, R);
  auto mc = oracle::mc_box(
      [&](const Vec& x) {
        if (x(0) < 1.0 || x(1) < 1.0 || x.norm() > R) return 0.0;
        return std::pow(x.squaredNorm(), -1.5);
      },
      vec2(0, 0), vec2(R, R), 2'000'000, 99);
  REQUIRE(std::abs(trunc - mc.value) <= 3.0 * mc.sigma);
}

TEST_CASE("covolume tail against Monte-Carlo") {
  auto eng = engine2(1.5);
  double R = 8.0;
  auto hyp = make_hyp();
  double trunc = eng.covolume_tail_truncated(hyp, R);
  auto mc = oracle::mc_box(
      [&](const Vec& x) {
        double r = x.norm();
        if (r < 1.0 || r > R) return 0.0;
        if (x(0) * x(1) >= 1.0) return 0.0;  // inside the body: not co-volume
        return std::pow(r, -1.5);
      },
      vec2(0, 0), vec2(R, R), 2'000'000, 7);
  REQUIRE(std::abs(trunc - mc.value) <= 3.0 * mc.sigma);
}

TEST_CASE("asymptotic co-volume: limiting cone datum gives zero") {
  auto eng = engine2(3.0);
  auto r = eng.asymptotic_covolume(PseudoCone::full_cone(quadrant()), vec2(1, 1));
  REQUIRE(std::abs(r.value) < 1e-14);
}

TEST_CASE("asymptotic co-volume satisfies the convolution identity") {
  auto eng = engine2(3.0);
  Vec z = vec2(1, 1);
  auto hyp = make_hyp();
  auto T = eng.asymptotic_covolume(hyp, z);
  auto V = eng.volume(translate(hyp, z));
  auto chi = eng.cone_weighted_volume(z);
  REQUIRE(std::abs(T.value + V.value - chi.value) / chi.value < 1e-6);
  // scaled datum: same identity
  auto T2 = eng.asymptotic_covolume(hyp, vec2(2, 2));
  auto V2 = eng.volume(translate(hyp, vec2(2, 2)));
  auto chi2 = eng.cone_weighted_volume(vec2(2, 2));
  REQUIRE(std::abs(T2.value + V2.value - chi2.value) / chi2.value < 1e-6);
}

TEST_CASE("asymptotic co-volume homogeneity") {
  auto eng = engine2(3.0);
  auto hyp = make_hyp();
  double base = eng.asymptotic_covolume(hyp, vec2(1, 1)).value;
  double scaled = eng.asymptotic_covolume(scale(hyp, 2.0), vec2(2, 2)).value;
  REQUIRE(scaled == Catch::Approx(0.5 * base).epsilon(1e-8));
  double scaled10 = eng.asymptotic_covolume(scale(hyp, 10.0), vec2(10, 10)).value;
  REQUIRE(scaled10 == Catch::Approx(0.1 * base).epsilon(1e-8));
}

TEST_CASE("asymptotic co-volume log branch at q = n") {
  auto eng = engine2(2.0);
  auto hyp = make_hyp();
  // T(A, z) finite at q = n for z != o; against a 2D Cartesian Monte-Carlo
  Vec z = vec2(1, 1);
  auto T = eng.asymptotic_covolume(hyp, z);
  auto mc = oracle::mc_box(
      [&](const Vec& p) {
        Vec x = p + vec2(1.0, 1.0);  // region sits inside z + [0, L]^2
        if ((x(0) - 1.0) * (x(1) - 1.0) >= 1.0) return 0.0;
        return std::pow(x.squaredNorm(), -1.0);
      },
      vec2(0, 0), vec2(400, 400), 4'000'000, 21);
  REQUIRE(std::abs(T.value - mc.value) <= std::max(3.0 * mc.sigma, 2e-3));
}

TEST_CASE("asymptotic co-volume singularity guards") {
  auto eng = engine2(3.0);
  REQUIRE_THROWS_AS(eng.asymptotic_covolume(make_hyp(), vec2(0, 0)), NumericError);
  auto eng15 = engine2(1.5);
  REQUIRE_NOTHROW(eng15.asymptotic_covolume(make_hyp(), vec2(0, 0)));
}

TEST_CASE("cone weighted volume") {
  auto eng = engine2(3.0);
  REQUIRE(eng.cone_weighted_volume(vec2(1, 1)).value ==
          Catch::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-9));
  // scaling by 2: factor 2^{n-q} = 1/2
  REQUIRE(eng.cone_weighted_volume(vec2(2, 2)).value ==
          Catch::Approx((2.0 - std::sqrt(2.0)) / 2).epsilon(1e-9));
  // boundary apex (1,0): int_1^inf int_0^inf (x^2+y^2)^{-3/2} dy dx = 1
  REQUIRE(eng.cone_weighted_volume(vec2(1, 0)).value == Catch::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("surface area measure of the wedge") {
  SECTION("constant weight: facet length") {
    auto eng = engine2(0.0);
    auto r = eng.surface_area_measure(make_wedge());
    REQUIRE(r.measure.masses.size() == 1);
    REQUIRE(r.measure.masses[0] == Catch::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-7));
  }
  SECTION("critical directional weight: constant on the facet") {
    auto eng = engine2(1.0, "directional");
    auto r = eng.surface_area_measure(make_wedge());
    REQUIRE(r.measure.masses[0] == Catch::Approx(2.0).epsilon(1e-7));
  }
  SECTION("symmetric two-facet body has equal masses") {
    Cone c = quadrant();
    Cone pol = c.polar();
    auto [plo, phi] = pol.angle_interval();
    double mid = 0.5 * (plo + phi), off = 0.18;
    auto w = PseudoCone::wulff(c, {pol.unit(mid - off), pol.unit(mid + off)}, {1.0, 1.0});
    auto eng = engine2(0.5);
    auto r = eng.surface_area_measure(w);
    REQUIRE(r.measure.masses[0] == Catch::Approx(r.measure.masses[1]).epsilon(1e-9));
    REQUIRE(r.measure.masses[0] > 0);
  }
}

TEST_CASE("surface area measure total mass against the arc-length oracle") {
  // two-facet wulff body; the boundary inside int C is a polyline whose
  // breakpoints are visible to the radial argmax
  Cone c = quadrant();
  Cone pol = c.polar();
  auto [plo, phi] = pol.angle_interval();
  std::vector<Vec> dirs = {pol.unit(plo + 0.35 * (phi - plo)), pol.unit(plo + 0.7 * (phi - plo))};
  std::vector<double> hbar = {1.1, 0.8};
  auto body = PseudoCone::wulff(c, dirs, hbar);
  WeightSpec th = WeightSpec::radial_power(0.5);
  FunctionalEngine eng(c, th, {1e-10, 40});
  auto sam = eng.surface_area_measure(body);

  // oracle: scan the radial argmax to find active arcs, then integrate Theta
  // along each straight facet segment by adaptive Simpson
  auto [lo, hi] = c.angle_interval();
  const int N = 200000;
  auto argmax_at = [&](double t) {
    Vec u = c.unit(lo + (hi - lo) * t);
    double best = -1;
    int bi = -1;
    for (int i = 0; i < 2; ++i) {
      double quo = hbar[i] / (-dirs[i].dot(u));
      if (quo > best) {
        best = quo;
        bi = i;
      }
    }
    return bi;
  };
  auto point_at = [&](double t) {
    Vec u = c.unit(lo + (hi - lo) * t);
    return Vec(radial(body, u) * u);
  };
  double total_oracle = 0.0;
  int cur = argmax_at(0.5 / N);
  double seg_start = 0.5 / N;
  for (int k = 1; k <= N; ++k) {
    double t = (k + 0.5) / N;
    int a = t < 1.0 ? argmax_at(t) : -1;
    if (a != cur || k == N) {
      double t_end = t < 1.0 ? t : 1.0 - 0.5 / N;
      Vec p0 = point_at(seg_start);
      Vec p1 = point_at(t_end);
      double len = (p1 - p0).norm();
      total_oracle += oracle::integrate_1d(
          [&](double s) {
            Vec x = p0 + s * (p1 - p0);
            return th(x) * len;
          },
          0.0, 1.0, 1e-12);
      seg_start = t;
      cur = a;
    }
  }
  double total = sam.measure.total();
  REQUIRE(total == Catch::Approx(total_oracle).margin(1e-6 * (1 + total_oracle)));
}

TEST_CASE("variational consistency: finite differences of the co-volume") {
  Rng rng(13);
  Cone c = quadrant();
  Cone pol = c.polar();
  auto [plo, phi] = pol.angle_interval();
  WeightSpec th = WeightSpec::radial_power(0.5);
  FunctionalEngine eng(c, th, {1e-10, 40});
  for (int trial = 0; trial < 3; ++trial) {
    int m = 2 + trial;
    std::vector<Vec> dirs;
    std::vector<double> hbar;
    for (int i = 0; i < m; ++i) {
      dirs.push_back(pol.unit(plo + (phi - plo) * (i + 0.6 + 0.2 * rng.uniform()) / (m + 1)));
      hbar.push_back(rng.uniform(0.7, 1.6));
    }
    auto body = PseudoCone::wulff(c, dirs, hbar);
    auto sam = eng.surface_area_measure(body);
    for (int i = 0; i < m; ++i) {
      double eps = 1e-6;
      auto hp = hbar, hm = hbar;
      hp[i] += eps;
      hm[i] -= eps;
      double fd = (eng.covolume(PseudoCone::wulff(c, dirs, hp)).value -
                   eng.covolume(PseudoCone::wulff(c, dirs, hm)).value) /
                  (2 * eps);
      if (sam.measure.masses[i] > 1e-12)
        REQUIRE(fd == Catch::Approx(sam.measure.masses[i]).epsilon(1e-3));
    }
  }
}

TEST_CASE("dual volume closed forms") {
  auto eng = engine2(0.0);
  REQUIRE(eng.dual_volume(make_hyp(), -2.0).value == Catch::Approx(0.25).epsilon(1e-10));
  REQUIRE(eng.dual_volume(make_shift(), -1.0).value ==
          Catch::Approx(0.5 * (2.0 - std::sqrt(2.0))).epsilon(1e-9));
  // scaling covariance
  REQUIRE(eng.dual_volume(scale(make_hyp(), 3.0), -2.0).value ==
          Catch::Approx(0.25 / 9.0).epsilon(1e-10));
  REQUIRE_THROWS_AS(eng.dual_volume(make_hyp(), 1.5), ValidationError);
  REQUIRE_THROWS_AS(eng.dual_volume(make_hyp(), 0.0), ValidationError);
}

TEST_CASE("directional derivative integral matches the cone weighted volume") {
  auto eng = engine2(3.0);
  for (Vec z : {vec2(1, 1), vec2(1, 0)}) {
    double lhs = eng.cone_weighted_volume(z).value;
    double rhs = eng.directional_derivative_integral(z).value;
    REQUIRE(std::abs(lhs - rhs) / lhs < 1e-6);
  }
  // doubling z scales both sides by 2^{n-q}
  double v1 = eng.directional_derivative_integral(vec2(1, 1)).value;
  double v2 = eng.directional_derivative_integral(vec2(2, 2)).value;
  REQUIRE(v2 == Catch::Approx(v1 / 2).epsilon(1e-9));
  // gradient requirement
  Cone c = quadrant();
  auto nosmooth = WeightSpec::custom(
      3.0, [](const Vec& x) { return std::pow(x.norm(), -3.0); }, nullptr, c);
  FunctionalEngine engn(c, nosmooth, {1e-10, 40});
  REQUIRE_THROWS_AS(engn.directional_derivative_integral(vec2(1, 1)), ValidationError);
}

TEST_CASE("finiteness probe classifications") {
  SECTION("volume of the hyperbola at q = 1.5 is power divergent with exponent n - q") {
    auto eng = engine2(1.5);
    auto v = eng.finiteness_probe(ProbeTag::Volume, make_hyp(), Vec(), tail_schedule());
    REQUIRE(v.status == FinitenessVerdict::Status::PowerDivergent);
    REQUIRE(v.growth_exponent == Catch::Approx(0.5).margin(0.05));
  }
  SECTION("near-origin co-volume at q = n is log divergent") {
    auto eng = engine2(2.0);
    auto v = eng.finiteness_probe(ProbeTag::CovolumeOrigin, make_hyp(), Vec(), tail_schedule());
    REQUIRE(v.status == FinitenessVerdict::Status::LogDivergent);
  }
  SECTION("asymptotic co-volume at the origin: finite for q = 1.5, divergent for q = 2.5") {
    auto ok = engine2(1.5).finiteness_probe(ProbeTag::Asym, make_hyp(), vec2(0, 0), tail_schedule());
    REQUIRE(ok.status == FinitenessVerdict::Status::Finite);
    REQUIRE(ok.value ==
            Catch::Approx(engine2(1.5).asymptotic_covolume(make_hyp(), vec2(0, 0)).value)
                .epsilon(1e-2));
    auto bad = engine2(2.5).finiteness_probe(ProbeTag::Asym, make_hyp(), vec2(0, 0), tail_schedule());
    REQUIRE(bad.status == FinitenessVerdict::Status::PowerDivergent);
    REQUIRE(bad.growth_exponent == Catch::Approx(0.5).margin(0.05));
  }
  SECTION("schedules must be increasing and long enough") {
    auto eng = engine2(1.5);
    REQUIRE_THROWS_AS(eng.finiteness_probe(ProbeTag::Volume, make_hyp(), Vec(), {10, 5, 100, 200}),
                      ValidationError);
    REQUIRE_THROWS_AS(eng.finiteness_probe(ProbeTag::Volume, make_hyp(), Vec(), {10, 100}),
                      ValidationError);
  }
}

TEST_CASE("results are invariant under the reference-direction choice") {
  // any interior direction is a valid transport axis; the functionals must
  // not depend on it
  Cone c1 = quadrant();
  Cone c2 = c1.with_reference(vec2(0.9, std::sqrt(1 - 0.81)));
  WeightSpec th = WeightSpec::radial_power(1.5);
  FunctionalEngine e1(c1, th, {1e-10, 40});
  FunctionalEngine e2(c2, th, {1e-10, 40});
  auto hyp1 = PseudoCone::hyperbola(c1, 1.0);
  auto hyp2 = PseudoCone::hyperbola(c2, 1.0);
  REQUIRE(e1.covolume(hyp1).value == Catch::Approx(e2.covolume(hyp2).value).epsilon(1e-8));
  REQUIRE(e1.dual_volume(hyp1, -2.0).value ==
          Catch::Approx(e2.dual_volume(hyp2, -2.0).value).epsilon(1e-9));
}
