#pragma once

#include "pclab/cone.hpp"

namespace pclab {

// A positive continuous (-q)-homogeneous weight on C \ {o}. Built-in kinds
// are the radial power |x|^{-q} and the directional power <a,x>^{-q}; custom
// evaluators declare their q and have homogeneity verified at construction
// rather than trusted.
class WeightSpec {
 public:
  enum class Kind { RadialPower, DirectionalPower, Custom };

  using Evaluator = std::function<double(const Vec&)>;
  using GradEvaluator = std::function<Vec(const Vec&)>;

  static WeightSpec radial_power(double q) {
    WeightSpec w;
    w.kind_ = Kind::RadialPower;
    w.q_ = q;
    w.smooth_ = true;
    return w;
  }

  static WeightSpec directional_power(double q, const Vec& direction) {
    WeightSpec w;
    w.kind_ = Kind::DirectionalPower;
    w.q_ = q;
    w.dir_ = direction / direction.norm();
    w.smooth_ = true;
    return w;
  }

  static WeightSpec custom(double q, Evaluator eval, GradEvaluator grad, const Cone& c,
                           std::uint64_t seed = 2024) {
    WeightSpec w;
    w.kind_ = Kind::Custom;
    w.q_ = q;
    w.eval_ = std::move(eval);
    w.grad_ = std::move(grad);
    w.smooth_ = static_cast<bool>(w.grad_);
    w.verify(c, seed);
    return w;
  }

  Kind kind() const { return kind_; }
  double q() const { return q_; }
  bool smooth() const { return smooth_; }
  const Vec& direction() const { return dir_; }

  double operator()(const Vec& x) const {
    switch (kind_) {
      case Kind::RadialPower:
        return std::pow(x.norm(), -q_);
      case Kind::DirectionalPower: {
        double s = dir_.dot(x);
        if (!(s > 0)) throw not_in_cone("directional weight needs <a,x> > 0");
        return std::pow(s, -q_);
      }
      case Kind::Custom:
        return eval_(x);
    }
    return 0.0;
  }

  Vec gradient(const Vec& x) const {
    if (!smooth_) throw gradient_unavailable("weight has no gradient");
    switch (kind_) {
      case Kind::RadialPower: {
        double r = x.norm();
        return -q_ * std::pow(r, -q_ - 2.0) * x;
      }
      case Kind::DirectionalPower: {
        double s = dir_.dot(x);
        return -q_ * std::pow(s, -q_ - 1.0) * dir_;
      }
      case Kind::Custom:
        return grad_(x);
    }
    return Vec();
  }

  // min/max of Theta over the cross-section C(1), by dense sampling plus
  // golden refinement in 2D; these realize the two-sided bound
  // m <x,u>^{-q} <= Theta(x) <= M <x,u>^{-q}.
  struct Bounds {
    double m;
    double M;
  };

  Bounds cross_section_bounds(const Cone& c, int samples = 2048) const {
    const Vec u = c.reference_direction();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    auto consider = [&](const Vec& dir) {
      Vec y = dir / dir.dot(u);
      double v = (*this)(y);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    };
    if (c.dim() == 2) {
      auto [a, b] = c.angle_interval();
      for (int i = 0; i <= samples; ++i)
        consider(c.unit(a + (b - a) * (i + 0.5) / (samples + 1)));
    } else {
      Rng rng(99);
      int kept = 0;
      while (kept < samples) {
        Vec v(c.dim());
        for (int i = 0; i < c.dim(); ++i) v(i) = rng.normal();
        v.normalize();
        if (c.strictly_inside(v, 1e-6)) {
          consider(v);
          ++kept;
        }
      }
      for (const auto& g : c.generators()) consider((0.98 * c.reference_direction() + 0.02 * g).normalized());
    }
    return {lo, hi};
  }

  void verify(const Cone& c, std::uint64_t seed) const {
    Rng rng(seed);
    const Vec uref = c.reference_direction();
    int kept = 0;
    while (kept < 100) {
      Vec v(c.dim());
      for (int i = 0; i < c.dim(); ++i) v(i) = rng.normal();
      v.normalize();
      if (!c.strictly_inside(v, 1e-8)) continue;
      ++kept;
      Vec x = v * rng.uniform(0.2, 5.0);
      double base = (*this)(x);
      if (!(base > 0)) throw ValidationError("InvalidWeight", "weight must be positive on C");
      for (double t : {0.5, 2.0, 10.0}) {
        double scaled = (*this)(t * x);
        if (std::abs(scaled - std::pow(t, -q_) * base) > 1e-12 * (scaled + base))
          throw ValidationError("InvalidWeight", "declared homogeneity degree fails");
      }
      if (smooth_) {
        double euler = gradient(x).dot(x) + q_ * base;
        if (std::abs(euler) > 1e-10 * (1.0 + std::abs(base)))
          throw ValidationError("InvalidWeight", "gradient violates the Euler identity");
      }
    }
    (void)uref;
  }

 private:
  WeightSpec() = default;
  Kind kind_ = Kind::RadialPower;
  double q_ = 0.0;
  Vec dir_;
  Evaluator eval_;
  GradEvaluator grad_;
  bool smooth_ = false;
};

}  // namespace pclab
