#pragma once

#include "pclab/cone.hpp"

#include <queue>

namespace pclab {

// Quadrature over the spherical cap Omega_C built through the gnomonic
// transfer onto the cross-section C(1) = {x in C : <x, u_ref> = 1}:
//
//   int_{Omega_C} f(u) du = int_{C(1)} f(y/|y|) |y|^{-n} dH^{n-1}(y).
//
// The flat domain is subdivided with geometric grading (ratio 0.5, depth
// max_depth) toward its boundary so that integrands with integrable power
// singularities at the cap boundary are resolved. Two nested node sets are
// kept; their difference drives the error estimates reported by the
// functional layer.
class SphericalQuadrature {
 public:
  const Cone& cone() const { return cone_; }
  const std::vector<Vec>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Vec>& fine_nodes() const { return fine_nodes_; }
  const std::vector<double>& fine_weights() const { return fine_weights_; }
  double est_error() const { return est_error_; }
  double grading_ratio() const { return grading_ratio_; }
  int grading_depth() const { return max_depth_; }

  double integrate(const std::function<double(const Vec&)>& f) const {
    return block_sum(nodes_.size(), [&](std::size_t i) { return weights_[i] * f(nodes_[i]); });
  }

  double integrate_fine(const std::function<double(const Vec&)>& f) const {
    return block_sum(fine_nodes_.size(),
                     [&](std::size_t i) { return fine_weights_[i] * f(fine_nodes_[i]); });
  }

  struct Eval {
    double value = 0.0;
    double error = 0.0;
  };

  // Fine value with coarse/fine difference as the error estimate.
  Eval evaluate(const std::function<double(const Vec&)>& f) const {
    double a = integrate(f);
    double b = integrate_fine(f);
    return {b, std::abs(a - b) + 1e-15 * std::abs(b)};
  }

  friend SphericalQuadrature cap_quadrature(const Cone& c, double tol, int max_depth,
                                            const std::vector<double>& chart_breaks);

 private:
  Cone cone_ = Cone::orthant(2);
  std::vector<Vec> nodes_, fine_nodes_;
  std::vector<double> weights_, fine_weights_;
  double est_error_ = 0.0;
  double grading_ratio_ = 0.5;
  int max_depth_ = 40;

  static const std::array<double, 4>& gl4_x() {
    static const std::array<double, 4> x = {-0.8611363115940526, -0.3399810435848563,
                                            0.3399810435848563, 0.8611363115940526};
    return x;
  }
  static const std::array<double, 4>& gl4_w() {
    static const std::array<double, 4> w = {0.3478548451374538, 0.6521451548625461,
                                            0.6521451548625461, 0.3478548451374538};
    return w;
  }
  static const std::array<double, 3>& gl3_x() {
    static const std::array<double, 3> x = {-0.7745966692414834, 0.0, 0.7745966692414834};
    return x;
  }
  static const std::array<double, 3>& gl3_w() {
    static const std::array<double, 3> w = {0.5555555555555556, 0.8888888888888888,
                                            0.5555555555555556};
    return w;
  }

  // Breakpoints of [0,1] with base uniform panels and geometric grading of
  // the two end panels.
  static std::vector<double> graded_breaks(int base, int depth, double ratio, bool grade_lo,
                                           bool grade_hi) {
    std::vector<double> b;
    double h = 1.0 / base;
    if (grade_lo) {
      b.push_back(0.0);
      for (int k = depth - 1; k >= 1; --k) b.push_back(h * std::pow(ratio, k));
    } else {
      b.push_back(0.0);
    }
    for (int i = 1; i < base; ++i) b.push_back(i * h);
    if (grade_hi) {
      for (int k = 1; k <= depth - 1; ++k) b.push_back(1.0 - h * std::pow(ratio, k));
    }
    b.push_back(1.0);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
  }

  // one GL4 panel [a, b] on the segment origin + t * dvec
  void emit_panel(const Vec& origin, const Vec& dvec, double a, double b) {
    double len = dvec.norm();
    auto emit = [&](double lo, double hi, std::vector<Vec>& ns, std::vector<double>& ws) {
      double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
      if (!(half > 0)) return;
      for (int k = 0; k < 4; ++k) {
        double t = mid + half * gl4_x()[k];
        Vec y = origin + t * dvec;
        double r2 = y.squaredNorm();
        ns.push_back(y / std::sqrt(r2));
        ws.push_back(gl4_w()[k] * half * len / r2);
      }
    };
    emit(a, b, nodes_, weights_);
    double m = 0.5 * (a + b);
    emit(a, m, fine_nodes_, fine_weights_);
    emit(m, b, fine_nodes_, fine_weights_);
  }

  // One mapped-rectangle cell (s,t) in [a,b]x[c,d] of a sector chart. The
  // chart callback returns the point y and the area element dH^2/(ds dt).
  void emit_cell(const std::function<Vec(double, double, double&)>& chart, double a, double b,
                 double c, double d, std::vector<Vec>& ns, std::vector<double>& ws) {
    double ms = 0.5 * (a + b), hs = 0.5 * (b - a);
    double mt = 0.5 * (c + d), ht = 0.5 * (d - c);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double s = ms + hs * gl3_x()[i];
        double t = mt + ht * gl3_x()[j];
        double jac = 0.0;
        Vec y = chart(s, t, jac);
        double r = y.norm();
        ns.push_back(y / r);
        ws.push_back(gl3_w()[i] * gl3_w()[j] * hs * ht * jac / (r * r * r));
      }
    }
  }

  void emit_sector(const std::function<Vec(double, double, double&)>& chart,
                   const std::vector<double>& sbreaks, const std::vector<double>& tbreaks) {
    for (std::size_t i = 0; i + 1 < sbreaks.size(); ++i) {
      for (std::size_t j = 0; j + 1 < tbreaks.size(); ++j) {
        emit_cell(chart, sbreaks[i], sbreaks[i + 1], tbreaks[j], tbreaks[j + 1], nodes_, weights_);
        double ms = 0.5 * (sbreaks[i] + sbreaks[i + 1]);
        double mt = 0.5 * (tbreaks[j] + tbreaks[j + 1]);
        emit_cell(chart, sbreaks[i], ms, tbreaks[j], mt, fine_nodes_, fine_weights_);
        emit_cell(chart, ms, sbreaks[i + 1], tbreaks[j], mt, fine_nodes_, fine_weights_);
        emit_cell(chart, sbreaks[i], ms, mt, tbreaks[j + 1], fine_nodes_, fine_weights_);
        emit_cell(chart, ms, sbreaks[i + 1], mt, tbreaks[j + 1], fine_nodes_, fine_weights_);
      }
    }
  }
};

// chart_breaks: extra cross-section parameters in (0,1) where the panel
// structure must align (n = 2 only); integrands with kinks at those
// parameters are then resolved panelwise.
inline SphericalQuadrature cap_quadrature(const Cone& c, double tol = 1e-10, int max_depth = 40,
                                          const std::vector<double>& chart_breaks = {}) {
  if (c.dim() != 2 && c.dim() != 3)
    throw unsupported_dimension("cap_quadrature supports n in {2,3}");
  if (!(tol > 0)) throw ValidationError("InvalidArgument", "tol must be positive");
  max_depth = std::max(4, max_depth);

  SphericalQuadrature q;
  q.cone_ = c;
  q.max_depth_ = max_depth;
  const Vec u = c.reference_direction();

  if (c.dim() == 2) {
    const auto& g = c.generators();
    Vec p0 = g[0] / g[0].dot(u);
    Vec p1 = g[1] / g[1].dot(u);
    // Adaptive panelization of the measure integrand, then grading.
    Vec d = p1 - p0;
    double len = d.norm();
    auto measure_panel = [&](double a, double b) {
      // GL4 of |y|^{-2} |d| over [a,b]
      double mid = 0.5 * (a + b), half = 0.5 * (b - a), s = 0;
      for (int k = 0; k < 4; ++k) {
        Vec y = p0 + (mid + half * SphericalQuadrature::gl4_x()[k]) * d;
        s += SphericalQuadrature::gl4_w()[k] * half * len / y.squaredNorm();
      }
      return s;
    };
    struct Panel {
      double a, b, err;
    };
    auto panel_err = [&](double a, double b) {
      double m = 0.5 * (a + b);
      return std::abs(measure_panel(a, b) - measure_panel(a, m) - measure_panel(m, b));
    };
    std::vector<Panel> panels;
    int base = 32;
    for (int i = 0; i < base; ++i) {
      double a = static_cast<double>(i) / base, b = static_cast<double>(i + 1) / base;
      panels.push_back({a, b, panel_err(a, b)});
    }
    auto total_err = [&]() {
      double s = 0;
      for (auto& p : panels) s += p.err;
      return s;
    };
    while (total_err() > tol / 4 && panels.size() < 20000) {
      std::size_t worst = 0;
      for (std::size_t i = 1; i < panels.size(); ++i)
        if (panels[i].err > panels[worst].err) worst = i;
      Panel p = panels[worst];
      double m = 0.5 * (p.a + p.b);
      panels[worst] = {p.a, m, panel_err(p.a, m)};
      panels.push_back({m, p.b, panel_err(m, p.b)});
    }
    std::vector<double> breaks;
    for (auto& p : panels) breaks.push_back(p.a);
    breaks.push_back(1.0);
    std::sort(breaks.begin(), breaks.end());
    // Geometric cascades toward both cap endpoints, then merge with the base
    // breaks and the caller's alignment points. The cascade near the far end
    // is emitted in offsets from p1 so panel positions keep full relative
    // precision there.
    const double h0 = breaks[1];
    const double h1 = 1.0 - breaks[breaks.size() - 2];
    std::vector<double> lo_side;  // global parameters in [0, 1 - h1]
    std::vector<double> hi_off;   // offsets from p1 in [0, h1]
    for (int k = max_depth - 1; k >= 1; --k) lo_side.push_back(h0 * std::pow(q.grading_ratio_, k));
    for (std::size_t i = 1; i + 1 < breaks.size(); ++i) lo_side.push_back(breaks[i]);
    for (int k = max_depth - 1; k >= 1; --k) hi_off.push_back(h1 * std::pow(q.grading_ratio_, k));
    hi_off.push_back(h1);
    for (double b : chart_breaks) {
      if (!(b > 1e-12) || !(b < 1.0 - 1e-12)) continue;
      if (b <= 1.0 - h1)
        lo_side.push_back(b);
      else if (1.0 - b > 1e-16)
        hi_off.push_back(1.0 - b);
    }
    auto tidy = [](std::vector<double>& v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end(),
                          [](double a, double b) { return b - a < 1e-16 * (1.0 + b); }),
              v.end());
    };
    tidy(lo_side);
    tidy(hi_off);
    double prev = 0.0;
    for (double t : lo_side) {
      q.emit_panel(p0, d, prev, t);
      prev = t;
    }
    prev = 0.0;
    for (double t : hi_off) {
      q.emit_panel(p1, -d, prev, t);
      prev = t;
    }
  } else if (c.is_circular()) {
    Vec e1, e2;
    Cone::orthobasis(c.axis(), e1, e2);
    const double R = std::tan(c.half_angle());
    const Vec apex = c.axis();  // cross-section center at <y,axis>=1
    const int mphi = 64;
    const int nr = 24;
    auto tb = SphericalQuadrature::graded_breaks(nr, max_depth, q.grading_ratio_, false, true);
    std::vector<double> sb;
    for (int i = 0; i <= mphi; ++i) sb.push_back(static_cast<double>(i) / mphi);
    auto chart = [&](double s, double t, double& jac) {
      double phi = 2.0 * kPi * s;
      double r = R * t;
      jac = 2.0 * kPi * R * r;  // dH^2 = r dr dphi
      return Vec(apex + r * (std::cos(phi) * e1 + std::sin(phi) * e2));
    };
    q.emit_sector(chart, sb, tb);
  } else {
    // Polyhedral 3D: fan triangulation of the cross-section polygon from its
    // centroid; each triangle is charted so that t = 1 is the boundary edge.
    const auto& gens = c.generators();
    std::vector<Vec> poly;
    for (const auto& g : gens) poly.push_back(g / g.dot(u));
    Vec centroid = Vec::Zero(3);
    for (const auto& p : poly) centroid += p;
    centroid /= static_cast<double>(poly.size());
    const int ns = 8;
    const int nt = 8;
    auto tb = SphericalQuadrature::graded_breaks(nt, max_depth, q.grading_ratio_, false, true);
    auto sb = SphericalQuadrature::graded_breaks(ns, std::min(max_depth, 12), q.grading_ratio_,
                                                 true, true);
    for (std::size_t k = 0; k < poly.size(); ++k) {
      Vec a = poly[k] - centroid;
      Vec b = poly[(k + 1) % poly.size()] - centroid;
      Vec cross = vec3(a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2),
                       a(0) * b(1) - a(1) * b(0));
      double two_area = cross.norm();
      auto chart = [&, a, b, two_area](double s, double t, double& jac) {
        jac = two_area * t;
        return Vec(centroid + t * ((1.0 - s) * a + s * b));
      };
      q.emit_sector(chart, sb, tb);
    }
  }

  double sigma = q.integrate([](const Vec&) { return 1.0; });
  double sigma_exact = c.cap_measure();
  q.est_error_ = std::abs(sigma - sigma_exact) + 1e-15 * std::abs(sigma_exact);
  return q;
}

}  // namespace pclab
