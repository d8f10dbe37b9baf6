#pragma once

#include "pclab/cone.hpp"

#include <cstdio>
#include <map>
#include <memory>

namespace pclab {

// Smallest r >= 0 with r*u - s in C, for u strictly inside the cap. Valid for
// arbitrary shifts s; returns 0 when the ray starts inside.
inline double cone_entry_radius(const Cone& c, const Vec& s, const Vec& u) {
  if (s.squaredNorm() == 0.0) return 0.0;
  if (!c.is_circular()) {
    double r = 0.0;
    for (const auto& w : c.facet_normals()) {
      double du = w.dot(u);  // < 0 strictly inside the cap
      if (du >= 0) throw outside_cap("direction not strictly inside the cap");
      r = std::max(r, w.dot(s) / du);
    }
    return r;
  }
  const Vec& a = c.axis();
  double cb = std::cos(c.half_angle());
  double au = a.dot(u), as = a.dot(s);
  double A = au * au - cb * cb;
  double B = au * as - cb * cb * u.dot(s);
  double C0 = as * as - cb * cb * s.squaredNorm();
  if (A <= 0) throw outside_cap("direction not strictly inside the cap");
  // the ray line always meets the boundary cone; a tiny negative
  // discriminant is roundoff from the tangential case
  double disc = std::max(0.0, B * B - A * C0);
  double sq = std::sqrt(disc);
  double r1 = (B - sq) / A, r2 = (B + sq) / A;
  for (double r : {r1, r2}) {
    if (r >= 0 && a.dot(r * u - s) >= -1e-13 * (1.0 + r)) return r;
  }
  return std::max(0.0, r2);
}

class PseudoCone;
double radial(const PseudoCone& e, const Vec& u);
double support(const PseudoCone& e, const Vec& v);
PseudoCone translate(const PseudoCone& e, const Vec& z);
PseudoCone scale(const PseudoCone& e, double t);
PseudoCone minkowski_sum(const PseudoCone& a, const PseudoCone& b, int sample_count = 0);
PseudoCone radial_sum(const PseudoCone& a, const PseudoCone& b);

// A C-pseudo-cone in one of the stored forms. Values are immutable; every
// operation returns a new handle. Radial and support evaluation are pure.
class PseudoCone {
 public:
  enum class Form {
    WulffLike,    // (shift + C) intersected with facet halfspaces
    PowerProduct, // {x in orthant : prod x_i^alpha_i >= c}; alpha = 1 is the hyperbola
    ShiftedCone,  // z + C
    Sweep,        // segment [a,b] + C (convex hull of two shifted cones)
    SumRadial,    // rho = rho_L + rho_R
    SumMinkowski, // outer Wulff table of sampled support sums
    Translated,   // base + z, radial by root finding
    FullCone      // limit datum A = C, radial identically 0
  };

  struct WulffData {
    std::vector<Vec> dirs;
    std::vector<double> hbar;
    Vec shift;
  };

  static PseudoCone wulff(const Cone& c, std::vector<Vec> dirs, std::vector<double> hbar) {
    if (dirs.size() != hbar.size() || dirs.empty())
      throw empty_wulff("wulff needs matching nonempty directions and offsets");
    Cone pol = c.polar();
    for (auto& v : dirs) {
      v.normalize();
      if (!pol.contains(v, 1e-9)) throw outside_cap("wulff direction outside the polar cap");
    }
    for (double h : hbar)
      if (!(h > 0)) throw empty_wulff("wulff offsets must be positive");
    PseudoCone e(c, Form::WulffLike);
    e.w_.dirs = std::move(dirs);
    e.w_.hbar = std::move(hbar);
    e.w_.shift = Vec::Zero(c.dim());
    return e;
  }

  static PseudoCone hyperbola(const Cone& c, double level) {
    return power_product(c, Vec::Ones(c.dim()), level);
  }

  // {x : prod x_i^alpha_i >= level} in the coordinate orthant. Convex for any
  // alpha > 0, scaling-closed, and asymptotic to the cone boundary; the
  // boundary decay is tunable through alpha.
  static PseudoCone power_product(const Cone& c, const Vec& alpha, double level) {
    if (!c.same_as(Cone::orthant(c.dim())))
      throw ValidationError("InvalidBody", "power products live in the coordinate orthant");
    if (!(level > 0)) throw ValidationError("InvalidBody", "level must be positive");
    for (int i = 0; i < alpha.size(); ++i)
      if (!(alpha(i) > 0)) throw ValidationError("InvalidBody", "alpha must be positive");
    PseudoCone e(c, Form::PowerProduct);
    e.alpha_ = alpha;
    e.level_ = level;
    return e;
  }

  static PseudoCone shifted_cone(const Cone& c, const Vec& z) {
    if (!c.contains(z, 1e-12)) throw not_in_cone("shifted cone apex must lie in C");
    if (!(z.norm() > 0)) throw ValidationError("InvalidBody", "apex must be nonzero");
    PseudoCone e(c, Form::ShiftedCone);
    e.z_ = z;
    return e;
  }

  // [a,b] + C; with a != b on the cone boundary this is the classical
  // degenerate example in R^3.
  static PseudoCone sweep(const Cone& c, const Vec& a, const Vec& b) {
    if (!c.contains(a, 1e-12) || !c.contains(b, 1e-12))
      throw not_in_cone("sweep endpoints must lie in C");
    if (!(a.norm() > 0) || !(b.norm() > 0))
      throw ValidationError("InvalidBody", "sweep endpoints must be nonzero");
    PseudoCone e(c, Form::Sweep);
    e.z_ = a;
    e.z2_ = b;
    return e;
  }

  // The cone itself as a limiting asymptotic datum (o is on its boundary, so
  // it is not a pseudo-cone proper); accepted only where a vanishing
  // asymptotic part is meaningful.
  static PseudoCone full_cone(const Cone& c) { return PseudoCone(c, Form::FullCone); }

  const Cone& cone() const { return cone_; }
  Form form() const { return form_; }
  const WulffData& wulff_data() const {
    if (form_ != Form::WulffLike) throw ValidationError("InvalidBody", "not a wulff shape");
    return w_;
  }
  const WulffData& wulff_table() const { return w_; }
  const Vec& apex() const { return z_; }
  double level() const { return level_; }
  const Vec& alpha() const { return alpha_; }

  bool is_full_cone() const { return form_ == Form::FullCone; }

  // --- evaluation ---------------------------------------------------------

  double radial_at(const Vec& u) const {
    if (cone_.membership_gap(u) >= 0) throw outside_cap("radial needs u strictly inside the cap");
    return radial_unchecked(u);
  }

  bool member(const Vec& x, double tol = 1e-12) const {
    if (!cone_.contains(x, tol)) return false;
    switch (form_) {
      case Form::WulffLike: {
        if (!cone_.contains(x - w_.shift, tol * (1 + x.norm()))) return false;
        for (std::size_t i = 0; i < w_.dirs.size(); ++i)
          if (w_.dirs[i].dot(x) > -w_.hbar[i] + tol * (1 + x.norm())) return false;
        return true;
      }
      case Form::PowerProduct: {
        double p = 0.0;
        for (int i = 0; i < x.size(); ++i) {
          if (x(i) <= 0) return false;
          p += alpha_(i) * std::log(x(i));
        }
        return p >= std::log(level_) - tol;
      }
      case Form::ShiftedCone:
        return cone_.contains(x - z_, tol * (1 + x.norm()));
      case Form::Sweep: {
        Vec d = z2_ - z_;
        auto gap = [&](double lam) { return cone_.membership_gap(x - z_ - lam * d); };
        double g = golden_min(gap, 0.0, 1.0, 80).value;
        g = std::min({g, gap(0.0), gap(1.0)});
        return g <= tol * (1 + x.norm());
      }
      case Form::SumMinkowski: {
        for (std::size_t i = 0; i < w_.dirs.size(); ++i)
          if (w_.dirs[i].dot(x) > -w_.hbar[i] + tol * (1 + x.norm())) return false;
        return true;
      }
      case Form::SumRadial: {
        double gap = cone_.membership_gap(x);
        if (gap >= -1e-14 * (1 + x.norm())) return false;
        double r = x.norm();
        return r >= radial_unchecked(x / r) * (1 - 1e-13);
      }
      case Form::Translated:
        return base_->member(x - z_, tol);
      case Form::FullCone:
        return true;
    }
    return false;
  }

  // Children / internals used by the operation layer.
  const PseudoCone& left() const { return *base_; }
  const PseudoCone& right() const { return *base2_; }
  const Vec& translation() const { return z_; }
  const Vec& right_endpoint() const { return z2_; }

  // Internal: shifted cone with an arbitrary apex (decomposition residue may
  // step outside C); the public factory validates apex membership.
  static PseudoCone shifted_cone_any(const Cone& c, const Vec& z) {
    if (z.norm() == 0.0) return full_cone(c);
    PseudoCone e(c, Form::ShiftedCone);
    e.z_ = z;
    return e;
  }

  friend double radial(const PseudoCone& e, const Vec& u);
  friend double support(const PseudoCone& e, const Vec& v);
  friend PseudoCone translate(const PseudoCone& e, const Vec& z);
  friend PseudoCone translate_any(const PseudoCone& e, const Vec& z);
  friend PseudoCone scale(const PseudoCone& e, double t);
  friend PseudoCone minkowski_sum(const PseudoCone& a, const PseudoCone& b, int sample_count);
  friend PseudoCone radial_sum(const PseudoCone& a, const PseudoCone& b);

 private:
  PseudoCone(const Cone& c, Form f) : cone_(c), form_(f) {}

  double radial_unchecked(const Vec& u) const {
    switch (form_) {
      case Form::WulffLike:
      case Form::SumMinkowski: {
        double r = w_.shift.size() ? cone_entry_radius(cone_, w_.shift, u) : 0.0;
        for (std::size_t i = 0; i < w_.dirs.size(); ++i) {
          double du = -w_.dirs[i].dot(u);
          if (du <= 0) throw outside_cap("direction not strictly inside the cap");
          r = std::max(r, w_.hbar[i] / du);
        }
        return r;
      }
      case Form::PowerProduct: {
        double s = 0.0, asum = 0.0;
        for (int i = 0; i < u.size(); ++i) {
          s += alpha_(i) * std::log(u(i));
          asum += alpha_(i);
        }
        return std::exp((std::log(level_) - s) / asum);
      }
      case Form::ShiftedCone:
        return cone_entry_radius(cone_, z_, u);
      case Form::Sweep: {
        Vec d = z2_ - z_;
        auto f = [&](double lam) { return cone_entry_radius(cone_, z_ + lam * d, u); };
        double r = golden_min(f, 0.0, 1.0, 90).value;
        return std::min({r, f(0.0), f(1.0)});
      }
      case Form::SumRadial:
        return base_->radial_unchecked(u) + base2_->radial_unchecked(u);
      case Form::Translated: {
        // bracket then bisect the membership of base along the shifted ray
        double lo = 0.0;
        double hi = std::max(1.0, z_.norm());
        int guard = 0;
        while (!base_->member(hi * u - z_) && guard++ < 200) {
          lo = hi;
          hi *= 2.0;
        }
        if (guard >= 200) throw numeric_divergence("translated radial bracket failed");
        for (int it = 0; it < 100; ++it) {
          double mid = 0.5 * (lo + hi);
          if (base_->member(mid * u - z_))
            hi = mid;
          else
            lo = mid;
          if (hi - lo <= 1e-15 * hi) break;
        }
        return hi;
      }
      case Form::FullCone:
        return 0.0;
    }
    return 0.0;
  }

  Cone cone_;
  Form form_;
  WulffData w_;            // WulffLike, SumMinkowski (table)
  Vec alpha_;              // PowerProduct
  double level_ = 1.0;     // PowerProduct
  Vec z_, z2_;             // ShiftedCone / Sweep endpoints / Translated shift
  std::shared_ptr<const PseudoCone> base_, base2_;
};

inline double radial(const PseudoCone& e, const Vec& u) { return e.radial_at(u); }

namespace detail {

// 2D chart of the cap through the cross-section plane <y, u_ref> = 1. For
// n = 2 the chart is one-dimensional (the segment parameter).
struct CapChart {
  Cone cone = Cone::orthant(2);
  Vec origin;       // chart center (cross-section centroid / apex point)
  Vec e1, e2;       // in-plane basis (n = 3)
  Vec p0, d;        // segment (n = 2)
  double radius = 0.0;  // circular cross-section radius

  Vec point(double a, double b) const {
    if (cone.dim() == 2) return p0 + a * d;
    return origin + a * e1 + b * e2;
  }
  bool inside(double a, double b) const {
    Vec y = point(a, b);
    return cone.membership_gap(y) < 0.0;
  }
  Vec dir(double a, double b) const {
    Vec y = point(a, b);
    return y / y.norm();
  }
};

inline CapChart cap_chart(const Cone& c) {
  CapChart ch;
  ch.cone = c;
  const Vec u = c.reference_direction();
  if (c.dim() == 2) {
    const auto& g = c.generators();
    ch.p0 = g[0] / g[0].dot(u);
    ch.d = g[1] / g[1].dot(u) - ch.p0;
    return ch;
  }
  if (c.is_circular()) {
    ch.origin = c.axis();
    Cone::orthobasis(c.axis(), ch.e1, ch.e2);
    ch.radius = std::tan(c.half_angle());
    return ch;
  }
  const auto& gens = c.generators();
  Vec centroid = Vec::Zero(3);
  for (const auto& g : gens) centroid += g / g.dot(u);
  centroid /= static_cast<double>(gens.size());
  ch.origin = centroid;
  Cone::orthobasis(u, ch.e1, ch.e2);
  return ch;
}

// Probe directions strictly inside the cap, graded toward the boundary; used
// by the generic support evaluation and by infimum searches.
inline const std::vector<Vec>& support_grid(const Cone& c) {
  static std::mutex mtx;
  static std::map<std::string, std::shared_ptr<std::vector<Vec>>> cache;
  auto num = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  std::string key;
  {
    key += std::to_string(c.dim()) + (c.is_circular() ? "c" : "p");
    if (c.is_circular()) {
      for (int i = 0; i < c.dim(); ++i) key += ":" + num(c.axis()(i));
      key += ":" + num(c.half_angle());
    } else {
      for (const auto& w : c.facet_normals())
        for (int i = 0; i < c.dim(); ++i) key += ":" + num(w(i));
    }
    for (int i = 0; i < c.dim(); ++i) key += ";" + num(c.reference_direction()(i));
  }
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(key);
  if (it != cache.end()) return *it->second;

  auto grid = std::make_shared<std::vector<Vec>>();
  auto graded01 = [](int base, int depth) {
    std::vector<double> t;
    double h = 1.0 / base;
    for (int k = depth; k >= 1; --k) t.push_back(h * std::pow(0.5, k));
    for (int i = 0; i < base; ++i) t.push_back((i + 0.5) * h);
    for (int k = 1; k <= depth; ++k) t.push_back(1.0 - h * std::pow(0.5, k));
    std::sort(t.begin(), t.end());
    return t;
  };
  if (c.dim() == 2) {
    // anchor graded offsets at each endpoint so the small components keep
    // full relative precision instead of collapsing onto the boundary
    CapChart ch = cap_chart(c);
    Vec p1 = ch.p0 + ch.d;
    const double h = 1.0 / 256;
    auto push = [&](const Vec& y) { grid->push_back(y / y.norm()); };
    for (int k = 48; k >= 1; --k) push(ch.p0 + (h * std::pow(0.5, k)) * ch.d);
    for (int i = 0; i < 256; ++i) push(ch.p0 + ((i + 0.5) * h) * ch.d);
    for (int k = 1; k <= 48; ++k) push(p1 - (h * std::pow(0.5, k)) * ch.d);
  } else if (c.is_circular()) {
    CapChart ch = cap_chart(c);
    std::vector<double> rs;
    for (double t : graded01(16, 30)) rs.push_back(ch.radius * t);
    for (double r : rs)
      for (int j = 0; j < 48; ++j) {
        double phi = 2 * kPi * (j + 0.5) / 48;
        grid->push_back(ch.dir(r * std::cos(phi), r * std::sin(phi)));
      }
    grid->push_back(c.axis());
  } else {
    const Vec u = c.reference_direction();
    const auto& gens = c.generators();
    std::vector<Vec> poly;
    for (const auto& g : gens) poly.push_back(g / g.dot(u));
    Vec centroid = Vec::Zero(3);
    for (const auto& p : poly) centroid += p;
    centroid /= static_cast<double>(poly.size());
    auto ts = graded01(12, 30);
    auto ss = graded01(10, 16);
    for (std::size_t k = 0; k < poly.size(); ++k) {
      Vec a = poly[k] - centroid;
      Vec b = poly[(k + 1) % poly.size()] - centroid;
      for (double s : ss)
        for (double t : ts) {
          Vec y = centroid + t * ((1 - s) * a + s * b);
          grid->push_back(y / y.norm());
        }
    }
  }
  cache[key] = grid;
  return *grid;
}

// Quasi-uniform interior directions of the polar cap for sampled Minkowski
// sums. Boundary directions are appended by the caller.
inline std::vector<Vec> polar_direction_sample(const Cone& c, int count) {
  Cone p = c.polar();
  std::vector<Vec> out;
  if (c.dim() == 2) {
    auto [lo, hi] = p.angle_interval();
    for (int j = 0; j < count; ++j) out.push_back(p.unit(lo + (hi - lo) * (j + 0.5) / count));
    return out;
  }
  if (p.is_circular()) {
    // equal-area spiral on the cap
    Vec e1, e2;
    Cone::orthobasis(p.axis(), e1, e2);
    double cb = std::cos(p.half_angle());
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int j = 0; j < count; ++j) {
      double cz = 1.0 - (1.0 - cb) * (j + 0.5) / count;
      double sz = std::sqrt(std::max(0.0, 1.0 - cz * cz));
      double phi = golden * j;
      out.push_back(cz * p.axis() + sz * (std::cos(phi) * e1 + std::sin(phi) * e2));
    }
    return out;
  }
  CapChart ch = cap_chart(p);
  const auto& gens = p.generators();
  const Vec u = p.reference_direction();
  std::vector<Vec> poly;
  for (const auto& g : gens) poly.push_back(g / g.dot(u));
  Vec centroid = Vec::Zero(3);
  for (const auto& q : poly) centroid += q;
  centroid /= static_cast<double>(poly.size());
  int per_sector = std::max(1, static_cast<int>(std::round(
                                    std::sqrt(static_cast<double>(count) / poly.size()))));
  for (std::size_t k = 0; k < poly.size(); ++k) {
    Vec a = poly[k] - centroid;
    Vec b = poly[(k + 1) % poly.size()] - centroid;
    for (int i = 0; i < per_sector; ++i)
      for (int j = 0; j < per_sector; ++j) {
        double s = (i + 0.5) / per_sector;
        double t = (j + 0.5) / per_sector;
        Vec y = centroid + t * ((1 - s) * a + s * b);
        out.push_back(y / y.norm());
      }
  }
  return out;
}

struct SupRefineResult {
  double value;
  double err;
};

// Extrapolate g along a path approaching the cap boundary. Useful only when
// g increases toward the boundary and approaches its supremum like
// L - c * delta^alpha; a decreasing tail means the supremum is elsewhere.
inline SupRefineResult boundary_extrapolate(const std::function<double(double)>& g_of_delta,
                                            double d0) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> vals;
  double delta = d0;
  for (int k = 0; k < 24 && delta > 1e-14; ++k) {
    vals.push_back(g_of_delta(delta));
    delta *= 0.25;
  }
  const std::size_t n = vals.size();
  if (n < 5) return {neg_inf, 0.0};
  for (std::size_t i = n - 4; i < n; ++i) {
    if (!std::isfinite(vals[i])) return {neg_inf, 0.0};
    if (vals[i] < vals[i - 1] - 1e-13 * (1 + std::abs(vals[i]))) return {neg_inf, 0.0};
  }
  double e1 = aitken(vals[n - 3], vals[n - 2], vals[n - 1]);
  double e2 = aitken(vals[n - 4], vals[n - 3], vals[n - 2]);
  double err = std::abs(e1 - e2);
  if (!std::isfinite(e1) || e1 < vals[n - 1]) return {vals[n - 1], err};
  return {e1, err};
}

inline double generic_support(const PseudoCone& e, const Vec& v) {
  const Cone& c = e.cone();
  auto g = [&](const Vec& u) { return e.radial_at(u) * u.dot(v); };

  const auto& grid = support_grid(c);
  std::size_t best = 0;
  double bestv = -std::numeric_limits<double>::infinity();
  std::vector<double> vals(grid.size()), height(grid.size());
  const Vec uref = c.reference_direction();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double rho = e.radial_at(grid[i]);
    vals[i] = rho * grid[i].dot(v);
    height[i] = rho * grid[i].dot(uref);
    if (vals[i] > bestv) {
      bestv = vals[i];
      best = i;
    }
  }

  if (e.form() == PseudoCone::Form::WulffLike) {
    // monotone truncation cross-check: sup over E with <x,u_ref> <= t must
    // increase to the full grid supremum as t grows
    double t0 = *std::min_element(height.begin(), height.end());
    double prev = -std::numeric_limits<double>::infinity();
    double trunc = prev;
    for (int k = 1; k <= 16; ++k) {
      double t = t0 * std::pow(2.0, k);
      trunc = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < grid.size(); ++i)
        if (height[i] <= t) trunc = std::max(trunc, vals[i]);
      if (trunc < prev - 1e-12 * (1 + std::abs(trunc)))
        throw numeric_divergence("truncation trace not monotone");
      prev = trunc;
    }
    if (bestv < trunc - 1e-12 * (1 + std::abs(bestv)))
      throw numeric_divergence("support refinement inconsistent with truncation");
  }

  double refined = bestv;
  CapChart ch = cap_chart(c);
  double boundary_est = -std::numeric_limits<double>::infinity();
  double boundary_err = 0.0;

  // Boundary points are snapped exactly onto the cross-section boundary and
  // approached by convex blending with an interior anchor; this keeps the
  // small coordinate components at full relative precision.
  auto g_of_point = [&](const Vec& y) {
    if (c.membership_gap(y) >= 0) return -std::numeric_limits<double>::infinity();
    Vec u = y / y.norm();
    return e.radial_at(u) * u.dot(v);
  };
  auto blend_path = [&](const Vec& yb, const Vec& yin) {
    auto path = [&](double delta) { return g_of_point((1.0 - delta) * yb + delta * yin); };
    return boundary_extrapolate(path, 1.0 / 64.0);
  };

  if (c.dim() == 2) {
    Vec p0 = ch.p0, p1 = ch.p0 + ch.d;
    auto gt = [&](double t) { return g_of_point(ch.point(t, 0.0)); };
    // chart parameter of the best node
    double tb = ch.d.dot(grid[best] / grid[best].dot(c.reference_direction()) - p0) /
                ch.d.squaredNorm();
    double a = std::max(1e-16, tb - 1.0 / 64);
    double b = std::min(1.0 - 1e-16, tb + 1.0 / 64);
    refined = std::max(refined, golden_max(gt, a, b, 140).value);
    Vec mid = 0.5 * (p0 + p1);
    for (const Vec& end : {p0, p1}) {
      auto ext = blend_path(end, mid);
      if (ext.value > boundary_est) {
        boundary_est = ext.value;
        boundary_err = ext.err;
      }
    }
  } else {
    // locate the best grid node in chart coordinates
    Vec y = grid[best] / grid[best].dot(c.reference_direction());
    double a0 = ch.e1.dot(y - ch.origin);
    double b0 = ch.e2.dot(y - ch.origin);
    auto gc = [&](double a, double b) {
      if (!ch.inside(a, b)) return -std::numeric_limits<double>::infinity();
      return g(ch.dir(a, b));
    };
    // compass search
    double step = 0.05 * (1.0 + std::hypot(a0, b0));
    double fa = gc(a0, b0);
    for (int it = 0; it < 220 && step > 1e-15; ++it) {
      bool moved = false;
      const double dirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      for (auto& d : dirs) {
        double na = a0 + step * d[0], nb = b0 + step * d[1];
        double fn = gc(na, nb);
        if (fn > fa) {
          a0 = na;
          b0 = nb;
          fa = fn;
          moved = true;
        }
      }
      if (!moved) step *= 0.5;
    }
    refined = std::max(refined, fa);

    Vec ystar = ch.point(a0, b0);
    if (c.is_circular()) {
      // snap by radius: boundary distance is computed exactly as R - r
      Vec w = ystar - ch.origin;
      double wn = w.norm();
      if (wn > 1e-14) {
        Vec what = w / wn;
        auto path = [&](double delta) {
          return g_of_point(ch.origin + (ch.radius * (1.0 - delta)) * what);
        };
        auto ext = boundary_extrapolate(path, 1.0 / 64.0);
        boundary_est = ext.value;
        boundary_err = ext.err;
      }
    } else {
      // candidate boundary anchors: the nearest edge point (clamped to an
      // exact vertex when the projection lands near one, then re-projected
      // onto the cone facet plane so the active constraint vanishes to
      // roundoff) plus every polygon vertex
      const Vec u = c.reference_direction();
      const auto& gens = c.generators();
      std::vector<Vec> poly;
      for (const auto& gg : gens) poly.push_back(gg / gg.dot(u));
      std::vector<Vec> anchors = poly;
      double bestd = std::numeric_limits<double>::infinity();
      Vec yb;
      for (std::size_t k = 0; k < poly.size(); ++k) {
        const Vec& qa = poly[k];
        const Vec& qb = poly[(k + 1) % poly.size()];
        Vec dq = qb - qa;
        double t = std::clamp((ystar - qa).dot(dq) / dq.squaredNorm(), 0.0, 1.0);
        if (t < 1e-7) t = 0.0;
        if (t > 1.0 - 1e-7) t = 1.0;
        Vec cand = qa + t * dq;
        double dd = (ystar - cand).norm();
        if (dd < bestd) {
          bestd = dd;
          yb = cand;
        }
      }
      {
        const auto& normals = c.facet_normals();
        double bestw = std::numeric_limits<double>::infinity();
        Vec wfacet = normals[0];
        for (const auto& w : normals)
          if (std::abs(w.dot(yb)) < bestw) {
            bestw = std::abs(w.dot(yb));
            wfacet = w;
          }
        Vec dcorr = wfacet - wfacet.dot(u) * u;
        double denom = wfacet.dot(dcorr);
        if (std::abs(denom) > 1e-14) yb -= (wfacet.dot(yb) / denom) * dcorr;
        anchors.push_back(yb);
      }
      for (const auto& anchor : anchors) {
        auto ext = blend_path(anchor, ch.origin);
        if (ext.value > boundary_est) {
          boundary_est = ext.value;
          boundary_err = ext.err;
        }
      }
    }
  }

  double out = std::max(refined, boundary_est);
  if (boundary_est > refined && boundary_err > 1e-2 * (1.0 + std::abs(boundary_est)))
    throw numeric_divergence("support refinement failed to stabilize");
  // bodies reaching this path are contained in C, so their support against
  // any polar direction is nonpositive; extrapolation may overshoot by eps
  return std::min(out, 0.0);
}

}  // namespace detail

inline double support(const PseudoCone& e, const Vec& v) {
  const Cone& c = e.cone();
  Vec vn = v / v.norm();
  if (!c.polar().contains(vn, 1e-9)) throw outside_cap("support direction outside the polar cap");
  using Form = PseudoCone::Form;
  switch (e.form()) {
    case Form::ShiftedCone:
      return e.apex().dot(vn);
    case Form::FullCone:
      return 0.0;
    case Form::Sweep:
      return std::max(e.translation().dot(vn), e.right_endpoint().dot(vn));
    case Form::Translated:
      return support(e.left(), vn) + e.translation().dot(vn);
    case Form::SumMinkowski:
      return support(e.left(), vn) + support(e.right(), vn);
    default:
      return detail::generic_support(e, vn);
  }
}

// Translation by an arbitrary vector; used by the decomposition to peel off
// the starting point. The public translate() checks z in C.
inline PseudoCone translate_any(const PseudoCone& e, const Vec& z) {
  using Form = PseudoCone::Form;
  if (z.norm() == 0.0) return e;
  switch (e.form_) {
    case Form::WulffLike: {
      PseudoCone out(e.cone_, Form::WulffLike);
      out.w_ = e.w_;
      out.w_.shift = e.w_.shift + z;
      std::vector<Vec> dirs;
      std::vector<double> hbar;
      for (std::size_t i = 0; i < out.w_.dirs.size(); ++i) {
        double h = out.w_.hbar[i] - z.dot(out.w_.dirs[i]);
        // drop constraints implied by the shifted cone part
        if (out.w_.shift.dot(out.w_.dirs[i]) <= -h + 1e-15 * (1 + std::abs(h))) continue;
        dirs.push_back(out.w_.dirs[i]);
        hbar.push_back(h);
      }
      out.w_.dirs = std::move(dirs);
      out.w_.hbar = std::move(hbar);
      return out;
    }
    case Form::SumMinkowski: {
      PseudoCone out(e.cone_, Form::SumMinkowski);
      out.w_ = e.w_;
      for (std::size_t i = 0; i < out.w_.dirs.size(); ++i)
        out.w_.hbar[i] -= z.dot(out.w_.dirs[i]);
      out.base_ = std::make_shared<PseudoCone>(translate_any(*e.base_, z));
      out.base2_ = std::make_shared<PseudoCone>(translate_any(*e.base2_, Vec(Vec::Zero(z.size()))));
      return out;
    }
    case Form::ShiftedCone:
      return PseudoCone::shifted_cone_any(e.cone_, e.z_ + z);
    case Form::FullCone:
      return PseudoCone::shifted_cone_any(e.cone_, z);
    case Form::Sweep: {
      Vec a = e.z_ + z, b = e.z2_ + z;
      if (e.cone_.contains(a, 1e-12) && e.cone_.contains(b, 1e-12) && a.norm() > 0 && b.norm() > 0)
        return PseudoCone::sweep(e.cone_, a, b);
      break;
    }
    case Form::Translated: {
      PseudoCone out(e.cone_, Form::Translated);
      out.base_ = e.base_;
      out.z_ = e.z_ + z;
      if (out.z_.norm() == 0.0) return *e.base_;
      return out;
    }
    default:
      break;
  }
  PseudoCone out(e.cone_, Form::Translated);
  out.base_ = std::make_shared<PseudoCone>(e);
  out.z_ = z;
  return out;
}

inline PseudoCone translate(const PseudoCone& e, const Vec& z) {
  if (!e.cone().contains(z, 1e-12)) throw not_in_cone("translation vector must lie in C");
  return translate_any(e, z);
}

inline PseudoCone scale(const PseudoCone& e, double t) {
  if (!(t > 0)) throw ValidationError("InvalidArgument", "scale factor must be positive");
  using Form = PseudoCone::Form;
  switch (e.form()) {
    case Form::WulffLike:
    case Form::SumMinkowski: {
      PseudoCone out = e;
      for (auto& h : out.w_.hbar) h *= t;
      if (out.w_.shift.size()) out.w_.shift *= t;
      if (out.base_) out.base_ = std::make_shared<PseudoCone>(scale(*out.base_, t));
      if (out.base2_) out.base2_ = std::make_shared<PseudoCone>(scale(*out.base2_, t));
      return out;
    }
    case Form::PowerProduct: {
      PseudoCone out = e;
      out.level_ *= std::pow(t, e.alpha_.sum());
      return out;
    }
    case Form::ShiftedCone:
      return PseudoCone::shifted_cone_any(e.cone(), t * e.apex());
    case Form::Sweep:
      return PseudoCone::sweep(e.cone(), t * e.translation(), t * e.right_endpoint());
    case Form::SumRadial:
      return radial_sum(scale(e.left(), t), scale(e.right(), t));
    case Form::Translated: {
      PseudoCone out(e.cone(), Form::Translated);
      out.base_ = std::make_shared<PseudoCone>(scale(e.left(), t));
      out.z_ = t * e.translation();
      return out;
    }
    case Form::FullCone:
      return e;
  }
  return e;
}

// Outer Wulff evaluation of the support sum over a dense sampled direction
// set (plus the polar cap boundary). The table underestimates the true
// radial function of E + F by the direction-sampling error.
inline void collect_facet_directions(const PseudoCone& e, std::vector<Vec>& out) {
  using Form = PseudoCone::Form;
  switch (e.form()) {
    case Form::WulffLike:
    case Form::SumMinkowski:
      for (const auto& v : e.wulff_table().dirs) out.push_back(v);
      if (e.form() == Form::SumMinkowski) {
        collect_facet_directions(e.left(), out);
        collect_facet_directions(e.right(), out);
      }
      break;
    case Form::SumRadial:
      collect_facet_directions(e.left(), out);
      collect_facet_directions(e.right(), out);
      break;
    case Form::Translated:
      collect_facet_directions(e.left(), out);
      break;
    default:
      break;
  }
}

inline PseudoCone minkowski_sum(const PseudoCone& a, const PseudoCone& b, int sample_count) {
  if (!a.cone().same_as(b.cone())) throw cone_mismatch("minkowski sum needs a common cone");
  const Cone& c = a.cone();
  if (sample_count <= 0) sample_count = c.dim() == 2 ? 512 : 4096;
  std::vector<Vec> dirs = detail::polar_direction_sample(c, sample_count);
  auto bdry = c.boundary_directions(c.dim() == 2 ? 2 : 64);
  dirs.insert(dirs.end(), bdry.begin(), bdry.end());
  // kinks of the summed support sit at the children's own facet directions;
  // sampling them removes the first-order table error there
  collect_facet_directions(a, dirs);
  collect_facet_directions(b, dirs);
  PseudoCone out(c, PseudoCone::Form::SumMinkowski);
  out.w_.dirs = std::move(dirs);
  out.w_.hbar.resize(out.w_.dirs.size());
  for (std::size_t i = 0; i < out.w_.dirs.size(); ++i)
    out.w_.hbar[i] = -(support(a, out.w_.dirs[i]) + support(b, out.w_.dirs[i]));
  out.base_ = std::make_shared<PseudoCone>(a);
  out.base2_ = std::make_shared<PseudoCone>(b);
  return out;
}

inline PseudoCone radial_sum(const PseudoCone& a, const PseudoCone& b) {
  if (!a.cone().same_as(b.cone())) throw cone_mismatch("radial sum needs a common cone");
  PseudoCone out(a.cone(), PseudoCone::Form::SumRadial);
  out.base_ = std::make_shared<PseudoCone>(a);
  out.base2_ = std::make_shared<PseudoCone>(b);
  return out;
}

// E = z + A with A asymptotic: detected from the boundary trace of the
// support function. degenerate is a verdict, not an error.
struct Decomposition {
  Vec z;
  PseudoCone asymptotic_part;
  double residual = 0.0;
  bool degenerate = false;
};

struct StartingPointOptions {
  int boundary_samples = 64;
  double degeneracy_scale = 1e-6;
};

inline Decomposition starting_point(const PseudoCone& e, const StartingPointOptions& opts = {}) {
  const Cone& c = e.cone();
  auto dirs = c.boundary_directions(std::max(opts.boundary_samples, c.dim()));
  std::vector<double> h(dirs.size());
  for (std::size_t i = 0; i < dirs.size(); ++i) h[i] = support(e, dirs[i]);
  Mat A = Mat::Zero(c.dim(), c.dim());
  Vec rhs = Vec::Zero(c.dim());
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    A += dirs[i] * dirs[i].transpose();
    rhs += h[i] * dirs[i];
  }
  Vec z = A.ldlt().solve(rhs);
  z = c.project(z);
  double residual = 0.0;
  for (std::size_t i = 0; i < dirs.size(); ++i)
    residual = std::max(residual, std::abs(h[i] - z.dot(dirs[i])));
  Decomposition d{z, translate_any(e, -z), residual, false};
  d.degenerate = residual > opts.degeneracy_scale * (1.0 + z.norm());
  return d;
}

// b(E): infimum of the radial function, by grid scan plus local refinement.
inline double distance_from_origin(const PseudoCone& e) {
  const Cone& c = e.cone();
  const auto& grid = detail::support_grid(c);
  std::size_t best = 0;
  double bestv = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double r = e.radial_at(grid[i]);
    if (r < bestv) {
      bestv = r;
      best = i;
    }
  }
  if (c.dim() == 2) {
    auto [lo, hi] = c.angle_interval();
    double th = std::atan2(grid[best](1), grid[best](0));
    double span = hi - lo;
    double a = std::max(lo + 1e-14 * span, th - span / 32);
    double b = std::min(hi - 1e-14 * span, th + span / 32);
    return std::min(bestv, golden_min([&](double t) { return e.radial_at(c.unit(t)); }, a, b, 140).value);
  }
  detail::CapChart ch = detail::cap_chart(c);
  Vec y = grid[best] / grid[best].dot(c.reference_direction());
  double a0 = ch.e1.dot(y - ch.origin), b0 = ch.e2.dot(y - ch.origin);
  auto f = [&](double aa, double bb) {
    if (!ch.inside(aa, bb)) return std::numeric_limits<double>::infinity();
    return e.radial_at(ch.dir(aa, bb));
  };
  double fa = f(a0, b0);
  double step = 0.05 * (1.0 + std::hypot(a0, b0));
  for (int it = 0; it < 200 && step > 1e-14; ++it) {
    bool moved = false;
    const double dd[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (auto& d : dd) {
      double na = a0 + step * d[0], nb = b0 + step * d[1];
      double fn = f(na, nb);
      if (fn < fa) {
        a0 = na;
        b0 = nb;
        fa = fn;
        moved = true;
      }
    }
    if (!moved) step *= 0.5;
  }
  return std::min(bestv, fa);
}

}  // namespace pclab
