#pragma once

#include "pclab/core.hpp"

#include <optional>

namespace pclab {

// A pointed n-dimensional closed convex cone, circular or polyhedral, with a
// cached interior reference direction u_ref such that <u_ref, x> > 0 on
// C \ {o}. Types are dimension-generic; the quadrature engine restricts
// itself to n in {2, 3}.
class Cone {
 public:
  enum class Kind { Circular, Polyhedral };

  static Cone circular(const Vec& axis, double half_angle) {
    if (axis.size() < 2) throw unsupported_dimension("cone dimension must be >= 2");
    if (!(half_angle > 0.0 && half_angle < kPi / 2))
      throw degenerate_cone("circular cone needs half angle in (0, pi/2)");
    double na = axis.norm();
    if (!(na > 0)) throw degenerate_cone("zero axis");
    Cone c;
    c.dim_ = static_cast<int>(axis.size());
    c.kind_ = Kind::Circular;
    c.axis_ = axis / na;
    c.half_angle_ = half_angle;
    c.u_ref_ = c.axis_;
    if (c.dim_ == 2) c.init_gens_2d(c.axis_angle() - half_angle, c.axis_angle() + half_angle);
    return c;
  }

  static Cone polyhedral(int dim, std::vector<Vec> normals) {
    if (dim < 2) throw unsupported_dimension("cone dimension must be >= 2");
    Cone c;
    c.dim_ = dim;
    c.kind_ = Kind::Polyhedral;
    for (auto& w : normals) {
      if (w.size() != dim) throw degenerate_cone("normal dimension mismatch");
      double n = w.norm();
      if (!(n > 0)) throw degenerate_cone("zero facet normal");
      Vec u = w / n;
      bool dup = false;
      for (const auto& v : c.normals_)
        if ((u - v).norm() <= 1e-12) dup = true;  // dedup within 1e-12
      if (!dup) c.normals_.push_back(u);
    }
    if (static_cast<int>(c.normals_.size()) < dim)
      throw degenerate_cone("pointed cone needs at least dim facet normals");
    c.build_polyhedral();
    return c;
  }

  // Coordinate orthant {x_i >= 0}; the workhorse fixture cone.
  static Cone orthant(int dim) {
    std::vector<Vec> normals;
    for (int i = 0; i < dim; ++i) {
      Vec w = Vec::Zero(dim);
      w(i) = -1.0;
      normals.push_back(w);
    }
    return polyhedral(dim, normals);
  }

  Cone with_reference(const Vec& u) const {
    Vec un = u / u.norm();
    Cone c = *this;
    c.verify_reference(un);
    c.u_ref_ = un;
    if (c.kind_ == Kind::Polyhedral || c.dim_ == 2) {
      // generator order is reference-independent; nothing else cached
    }
    return c;
  }

  int dim() const { return dim_; }
  Kind kind() const { return kind_; }
  bool is_circular() const { return kind_ == Kind::Circular; }
  const Vec& axis() const { return axis_; }
  double half_angle() const { return half_angle_; }
  const std::vector<Vec>& facet_normals() const { return normals_; }
  const std::vector<Vec>& generators() const { return gens_; }
  const Vec& reference_direction() const { return u_ref_; }

  bool same_as(const Cone& other, double tol = 1e-12) const {
    if (dim_ != other.dim_ || kind_ != other.kind_) return false;
    if (kind_ == Kind::Circular)
      return (axis_ - other.axis_).norm() <= tol && std::abs(half_angle_ - other.half_angle_) <= tol;
    if (normals_.size() != other.normals_.size()) return false;
    for (std::size_t i = 0; i < normals_.size(); ++i) {
      bool found = false;
      for (std::size_t j = 0; j < normals_.size(); ++j)
        if ((normals_[i] - other.normals_[j]).norm() <= tol) found = true;
      if (!found) return false;
    }
    return true;
  }

  // Signed violation: <= 0 inside, grows positive outside.
  double membership_gap(const Vec& x) const {
    if (kind_ == Kind::Circular) return x.norm() * std::cos(half_angle_) - axis_.dot(x);
    double g = -std::numeric_limits<double>::infinity();
    for (const auto& w : normals_) g = std::max(g, w.dot(x));
    return g;
  }

  bool contains(const Vec& x, double tol = 1e-12) const {
    return membership_gap(x) <= tol * (1.0 + x.norm());
  }

  bool strictly_inside(const Vec& x, double margin) const { return membership_gap(x) <= -margin; }

  Cone polar() const {
    if (kind_ == Kind::Circular) return circular(-axis_, kPi / 2 - half_angle_);
    // The facet normals of the polar cone are the unit generators of C.
    return polyhedral(dim_, gens_);
  }

  // Metric projection onto the cone.
  Vec project(const Vec& x) const {
    if (contains(x, 0.0)) return x;
    if (kind_ == Kind::Circular) {
      double s = axis_.dot(x);
      Vec w = x - s * axis_;
      double wn = w.norm();
      double t = std::tan(half_angle_);
      if (wn <= -s * t) return Vec::Zero(dim_);  // inside the polar of the cone
      double alpha = (s + t * wn) / (1.0 + t * t);
      if (alpha <= 0) return Vec::Zero(dim_);
      return alpha * axis_ + alpha * t * (w / wn);
    }
    Vec best = Vec::Zero(dim_);
    double bestd = x.norm();
    auto consider = [&](const Vec& c) {
      if (!contains(c, 1e-10)) return;
      double d = (x - c).norm();
      if (d < bestd) {
        bestd = d;
        best = c;
      }
    };
    for (const auto& w : normals_) consider(x - w.dot(x) * w);
    for (const auto& g : gens_) consider(std::max(0.0, g.dot(x)) * g);
    return best;
  }

  // --- spherical cap geometry -------------------------------------------

  // n = 2: angles [lo, hi] of the cap arc, measured by atan2 in the plane.
  std::pair<double, double> angle_interval() const {
    if (dim_ != 2) throw unsupported_dimension("angle_interval is 2D only");
    return {theta_lo_, theta_hi_};
  }

  Vec unit(double theta) const { return vec2(std::cos(theta), std::sin(theta)); }

  // Exact cap measure sigma(Omega_C) for n in {2,3}.
  double cap_measure() const {
    if (dim_ == 2) return theta_hi_ - theta_lo_;
    if (dim_ == 3) {
      if (kind_ == Kind::Circular) return 2.0 * kPi * (1.0 - std::cos(half_angle_));
      // Girard spherical excess over the ordered generator polygon.
      const std::size_t k = gens_.size();
      double sum = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const Vec& g = gens_[i];
        const Vec& gp = gens_[(i + k - 1) % k];
        const Vec& gn = gens_[(i + 1) % k];
        Vec tp = gp - gp.dot(g) * g;
        Vec tn = gn - gn.dot(g) * g;
        sum += std::acos(std::clamp(tp.normalized().dot(tn.normalized()), -1.0, 1.0));
      }
      return sum - (static_cast<double>(k) - 2.0) * kPi;
    }
    throw unsupported_dimension("cap_measure supports n in {2,3}");
  }

  // m distinct directions on the boundary of the polar cap.
  std::vector<Vec> boundary_directions(int m) const {
    if (m < dim_) throw ValidationError("InvalidArgument", "need m >= dim boundary directions");
    std::vector<Vec> out;
    if (dim_ == 2) {
      Cone p = polar();
      out.push_back(p.generators()[0]);
      out.push_back(p.generators()[1]);
      return out;  // the polar arc has exactly two endpoints
    }
    if (dim_ != 3) throw unsupported_dimension("boundary_directions supports n in {2,3}");
    if (kind_ == Kind::Circular) {
      Vec e1, e2;
      orthobasis(axis_, e1, e2);
      double c = std::cos(kPi / 2 - half_angle_), s = std::sin(kPi / 2 - half_angle_);
      for (int j = 0; j < m; ++j) {
        double phi = 2.0 * kPi * j / m;
        out.push_back(-c * axis_ + s * (std::cos(phi) * e1 + std::sin(phi) * e2));
      }
      return out;
    }
    // Polyhedral: the polar cap is a geodesic polygon whose vertices are the
    // facet normals of C; sample each edge arc uniformly by arc length.
    Cone p = polar();
    const auto& v = p.generators();
    const std::size_t k = v.size();
    std::vector<double> len(k);
    double total = 0;
    for (std::size_t i = 0; i < k; ++i) {
      len[i] = std::acos(std::clamp(v[i].dot(v[(i + 1) % k]), -1.0, 1.0));
      total += len[i];
    }
    std::vector<int> counts(k, 1);
    int assigned = static_cast<int>(k);
    while (assigned < m) {
      std::size_t best = 0;
      double bestgap = -1;
      for (std::size_t i = 0; i < k; ++i) {
        double gap = len[i] / counts[i];
        if (gap > bestgap) {
          bestgap = gap;
          best = i;
        }
      }
      ++counts[best];
      ++assigned;
    }
    for (std::size_t i = 0; i < k; ++i) {
      const Vec& a = v[i];
      const Vec& b = v[(i + 1) % k];
      double ang = len[i];
      for (int j = 0; j < counts[i]; ++j) {
        double t = (j + 0.5) / counts[i] * ang;
        Vec dir = (std::sin(ang - t) * a + std::sin(t) * b) / std::sin(ang);
        out.push_back(dir.normalized());
      }
    }
    out.resize(m);
    return out;
  }

  // Deterministic orthonormal basis of the plane orthogonal to a unit vector.
  static void orthobasis(const Vec& a, Vec& e1, Vec& e2) {
    int imin = 0;
    for (int i = 1; i < a.size(); ++i)
      if (std::abs(a(i)) < std::abs(a(imin))) imin = i;
    Vec t = Vec::Zero(a.size());
    t(imin) = 1.0;
    e1 = (t - t.dot(a) * a).normalized();
    if (a.size() == 3) {
      e2 = vec3(a(1) * e1(2) - a(2) * e1(1), a(2) * e1(0) - a(0) * e1(2),
                a(0) * e1(1) - a(1) * e1(0));
    } else {
      e2 = Vec();
    }
  }

 private:
  Cone() = default;

  double axis_angle() const { return std::atan2(axis_(1), axis_(0)); }

  void init_gens_2d(double lo, double hi) {
    theta_lo_ = lo;
    theta_hi_ = hi;
    gens_ = {unit(lo), unit(hi)};
  }

  void verify_reference(const Vec& u) const {
    if (kind_ == Kind::Circular) {
      if (!(axis_.dot(u) > std::cos(half_angle_)))
        throw degenerate_cone("reference direction not interior");
      return;
    }
    for (const auto& g : gens_)
      if (!(u.dot(g) > 1e-12)) throw degenerate_cone("reference direction fails on a generator");
  }

  void build_polyhedral() {
    if (dim_ == 2) {
      if (normals_.size() != 2) {
        // keep only an irredundant pair; more than two distinct normals in
        // the plane either make the cone non-pointed-with-interior or are
        // redundant, both rejected
        throw degenerate_cone("2D pointed cone has exactly two facet normals");
      }
      const Vec& w0 = normals_[0];
      const Vec& w1 = normals_[1];
      double cross = w0(0) * w1(1) - w0(1) * w1(0);
      if (std::abs(cross) <= 1e-12) throw degenerate_cone("facet normals are collinear");
      auto gen_for = [&](const Vec& w, const Vec& other) {
        Vec g = vec2(-w(1), w(0));
        if (other.dot(g) > 0) g = -g;
        return g;
      };
      Vec g0 = gen_for(w0, w1);
      Vec g1 = gen_for(w1, w0);
      double a0 = std::atan2(g0(1), g0(0));
      double a1 = std::atan2(g1(1), g1(0));
      if (a1 < a0) {
        std::swap(a0, a1);
        std::swap(g0, g1);
      }
      if (a1 - a0 > kPi) {  // wrap: take the short side consistently
        std::swap(a0, a1);
        a0 -= 2 * kPi;
        std::swap(g0, g1);
      }
      if (!(a1 - a0 > 1e-12) || !(a1 - a0 < kPi - 1e-12))
        throw degenerate_cone("cone aperture must lie in (0, pi)");
      theta_lo_ = a0;
      theta_hi_ = a1;
      // keep the exact rotated normals as generators: support evaluation is
      // sqrt-sensitive to perturbations of boundary directions
      gens_ = {g0, g1};
      u_ref_ = ((g0 + g1) / (g0 + g1).norm());
      verify_reference(u_ref_);
      return;
    }
    if (dim_ != 3) throw unsupported_dimension("polyhedral cones implemented for n in {2,3}");
    // Candidate extreme rays: pairwise facet intersections that satisfy all
    // other constraints.
    std::vector<Vec> cand;
    const std::size_t m = normals_.size();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        Vec g = vec3(normals_[i](1) * normals_[j](2) - normals_[i](2) * normals_[j](1),
                     normals_[i](2) * normals_[j](0) - normals_[i](0) * normals_[j](2),
                     normals_[i](0) * normals_[j](1) - normals_[i](1) * normals_[j](0));
        double n = g.norm();
        if (n <= 1e-12) continue;
        g /= n;
        for (int sign = 0; sign < 2; ++sign) {
          Vec cg = sign ? Vec(-g) : g;
          bool ok = true;
          for (std::size_t k = 0; k < m; ++k)
            if (normals_[k].dot(cg) > 1e-10) ok = false;
          if (ok) {
            bool dup = false;
            for (const auto& e : cand)
              if ((e - cg).norm() <= 1e-9) dup = true;
            if (!dup) cand.push_back(cg);
          }
        }
      }
    }
    if (cand.size() < 3) throw degenerate_cone("cone has no 3D interior");
    Vec mean = Vec::Zero(3);
    for (const auto& g : cand) mean += g;
    double mn = mean.norm();
    if (mn <= 1e-12) throw degenerate_cone("cone is not pointed");
    mean /= mn;
    for (const auto& g : cand)
      if (!(mean.dot(g) > 1e-10)) throw degenerate_cone("cone is not pointed");
    // Order generators by azimuth around the mean direction.
    Vec e1, e2;
    orthobasis(mean, e1, e2);
    std::sort(cand.begin(), cand.end(), [&](const Vec& a, const Vec& b) {
      return std::atan2(e2.dot(a), e1.dot(a)) < std::atan2(e2.dot(b), e1.dot(b));
    });
    gens_ = cand;
    u_ref_ = mean;
    // Irredundancy: every facet must carry a 2-face, i.e. contain at least
    // two extreme rays.
    for (std::size_t k = 0; k < m; ++k) {
      int on = 0;
      for (const auto& g : gens_)
        if (std::abs(normals_[k].dot(g)) <= 1e-9) ++on;
      if (on < 2) throw degenerate_cone("redundant facet normal");
    }
  }

  int dim_ = 0;
  Kind kind_ = Kind::Polyhedral;
  Vec axis_;
  double half_angle_ = 0.0;
  std::vector<Vec> normals_;
  std::vector<Vec> gens_;
  Vec u_ref_;
  double theta_lo_ = 0.0, theta_hi_ = 0.0;
};

inline Cone polar_cone(const Cone& c) { return c.polar(); }

// The fixed interior direction with <u, x> > 0 on C \ {o}; mean of unit
// generators for polyhedral cones, the axis for circular ones.
inline Vec reference_direction(const Cone& c) { return c.reference_direction(); }

}  // namespace pclab
