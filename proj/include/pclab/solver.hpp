#pragma once

#include "pclab/functionals.hpp"

namespace pclab {

struct SolverConfig {
  int max_iters = 400;
  double grad_tol = 1e-6;  // target for ||S([h~]) - mu||_inf / ||mu||_inf
  double step0 = 1.0;
  double backtrack = 0.5;
  enum class Normalization { CovolumeOne, MassOne };
  Normalization normalization = Normalization::CovolumeOne;
  std::uint64_t seed = 0;  // nonzero: multiplicative perturbation of the init

  void validate() const {
    if (max_iters <= 0 || !(grad_tol > 0) || !(step0 > 0) ||
        !(backtrack > 0 && backtrack < 1))
      throw ValidationError("InvalidConfig", "solver configuration out of range");
  }
};

struct SolverReport {
  std::vector<double> h_tilde;
  double lambda = 0.0;
  double residual = 0.0;
  std::vector<double> objective_trace;
  std::vector<double> b_trace;  // iterate distance from the origin
  int iterations = 0;
  bool converged = false;
};

// Discrete weighted Minkowski problem for q in [0, n-1): given mu on
// finitely many polar directions, find the Wulff shape whose weighted
// surface-area measure is mu, by maximizing
//   F(h) = Vbar([h])^{-1/(n-q)} * sum_i h_i mu_i
// with the variational formula as the gradient. The Euler-Lagrange scale
// turns the maximizer into the solution.
class MinkowskiProblem {
 public:
  MinkowskiProblem(const FunctionalEngine& engine, DiscreteMeasure mu)
      : eng_(engine), mu_(std::move(mu)) {
    mu_.validate();
    const double qq = eng_.q(), n = eng_.dim();
    if (!(qq >= 0.0 && qq < n - 1.0))
      throw exponent_out_of_range("minkowski solver needs q in [0, n-1)");
    if (!(mu_.total() > 0))
      throw ValidationError("InvalidMeasure", "measure must be nonzero");
    Cone pol = eng_.cone().polar();
    for (auto& v : mu_.directions) {
      v.normalize();
      if (!pol.strictly_inside(v, 1e-9))
        throw outside_cap("measure directions must lie inside the polar cap");
    }
  }

  const DiscreteMeasure& mu() const { return mu_; }

  PseudoCone body(const std::vector<double>& h) const {
    return PseudoCone::wulff(eng_.cone(), mu_.directions, h);
  }

  double objective(const std::vector<double>& h) const {
    double vbar = eng_.covolume(body(h)).value;
    if (!(vbar > 0)) throw empty_wulff("wulff shape has empty co-volume");
    return std::pow(vbar, -1.0 / (eng_.dim() - eng_.q())) * mass_pairing(h);
  }

  // dF/dh_i assembled from dVbar/dh_i = S^Theta([h], {v_i}) and mu_i
  std::vector<double> variational_gradient(const std::vector<double>& h) const {
    const double p = eng_.dim() - eng_.q();
    PseudoCone e = body(h);
    double vbar = eng_.covolume(e).value;
    auto sam = eng_.surface_area_measure(e);
    double pairing = mass_pairing(h);
    double vpow = std::pow(vbar, -1.0 / p);
    std::vector<double> g(h.size());
    for (std::size_t i = 0; i < h.size(); ++i)
      g[i] = vpow * (mu_.masses[i] - pairing * sam.measure.masses[i] / (p * vbar));
    return g;
  }

  // h_i <- hbar_[h](v_i): idempotent, never decreases the mass pairing,
  // leaves the body unchanged
  std::vector<double> support_consistent_projection(const std::vector<double>& h) const {
    PseudoCone e = body(h);
    std::vector<double> out(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) out[i] = -support(e, mu_.directions[i]);
    return out;
  }

  SolverReport solve(const SolverConfig& cfg = {}) const {
    cfg.validate();
    const double p = eng_.dim() - eng_.q();         // n - q > 1
    const double hom = eng_.dim() - 1.0 - eng_.q();  // n - 1 - q > 0
    std::vector<double> h(mu_.directions.size(), 1.0);
    if (cfg.seed) {
      Rng rng(cfg.seed);
      for (auto& x : h) x *= std::exp(0.5 * rng.normal());
    }
    h = normalize(support_consistent_projection(h), cfg);

    SolverReport rep;
    double step = cfg.step0;
    double fcur = objective(h);
    rep.objective_trace.push_back(fcur);
    rep.b_trace.push_back(distance_from_origin(body(h)));

    auto residual_of = [&](const std::vector<double>& hh, double& lambda_out,
                           std::vector<double>& htilde_out) {
      PseudoCone e = body(hh);
      double vbar = eng_.covolume(e).value;
      auto sam = eng_.surface_area_measure(e);
      double lambda = mass_pairing(hh) / (p * vbar);
      double t = std::pow(lambda, 1.0 / hom);
      htilde_out.resize(hh.size());
      for (std::size_t i = 0; i < hh.size(); ++i) htilde_out[i] = t * hh[i];
      lambda_out = lambda;
      // S is (n-1-q)-homogeneous: S([t h]) = t^{n-1-q} S([h]) = lambda S([h])
      double mumax = 0.0;
      for (double m : mu_.masses) mumax = std::max(mumax, m);
      double res = 0.0;
      for (std::size_t i = 0; i < hh.size(); ++i)
        res = std::max(res, std::abs(lambda * sam.measure.masses[i] - mu_.masses[i]));
      return res / mumax;
    };

    int it = 0;
    for (; it < cfg.max_iters; ++it) {
      double lambda;
      std::vector<double> htilde;
      double res = residual_of(h, lambda, htilde);
      if (res <= cfg.grad_tol) {
        rep.h_tilde = htilde;
        rep.lambda = lambda;
        rep.converged = true;
        break;
      }
      std::vector<double> g = variational_gradient(h);
      // remove the radial component; F is 0-homogeneous
      double gh = 0, hh2 = 0;
      for (std::size_t i = 0; i < h.size(); ++i) {
        gh += g[i] * h[i];
        hh2 += h[i] * h[i];
      }
      for (std::size_t i = 0; i < h.size(); ++i) g[i] -= gh / hh2 * h[i];

      // ascent on F; once F-differences sink below rounding, the same
      // direction is accepted on a residual-decrease merit (the stopping
      // criterion is the measure residual, not the objective)
      bool accepted = false;
      const double fnoise = 1e-13 * (1 + std::abs(fcur));
      for (double s = step; s > 1e-15; s *= cfg.backtrack) {
        std::vector<double> trial(h.size());
        bool ok = true;
        for (std::size_t i = 0; i < h.size(); ++i) {
          trial[i] = h[i] + s * g[i];
          if (!(trial[i] > 1e-12 * h[i])) ok = false;
        }
        if (!ok) continue;
        trial = normalize(support_consistent_projection(trial), cfg);
        double ftrial = objective(trial);
        bool improves_f = ftrial > fcur + fnoise;
        bool keeps_f = ftrial > fcur - 1e-12 * (1 + std::abs(fcur));
        bool better = improves_f;
        if (!better && keeps_f) {
          double l2;
          std::vector<double> ht2;
          double res2 = residual_of(trial, l2, ht2);
          better = res2 < res * (1.0 - 1e-3);
        }
        if (better) {
          if (improves_f) step = std::min(s * 2.0, 1e6);
          h = trial;
          fcur = std::max(fcur, ftrial);
          accepted = true;
          break;
        }
      }
      rep.objective_trace.push_back(fcur);
      rep.b_trace.push_back(distance_from_origin(body(h)));
      if (!accepted) {
        // stalled line search: report the current iterate
        double l2;
        std::vector<double> ht;
        double res2 = residual_of(h, l2, ht);
        rep.h_tilde = ht;
        rep.lambda = l2;
        rep.residual = res2;
        rep.iterations = it + 1;
        rep.converged = res2 <= cfg.grad_tol;
        return rep;
      }
    }
    if (!rep.converged) {
      double lambda;
      std::vector<double> htilde;
      rep.residual = residual_of(h, lambda, htilde);
      rep.h_tilde = htilde;
      rep.lambda = lambda;
      rep.converged = rep.residual <= cfg.grad_tol;
    } else {
      // recompute the certificate on the returned (rescaled) body
      PseudoCone e = body(rep.h_tilde);
      auto sam = eng_.surface_area_measure(e);
      double mumax = 0.0;
      for (double m : mu_.masses) mumax = std::max(mumax, m);
      double res = 0.0;
      for (std::size_t i = 0; i < rep.h_tilde.size(); ++i)
        res = std::max(res, std::abs(sam.measure.masses[i] - mu_.masses[i]));
      rep.residual = res / mumax;
    }
    rep.iterations = it;
    return rep;
  }

 private:
  double mass_pairing(const std::vector<double>& h) const {
    NeumaierSum s;
    for (std::size_t i = 0; i < h.size(); ++i) s.add(h[i] * mu_.masses[i]);
    return s.value();
  }

  std::vector<double> normalize(std::vector<double> h, const SolverConfig& cfg) const {
    const double p = eng_.dim() - eng_.q();
    double t = 1.0;
    if (cfg.normalization == SolverConfig::Normalization::CovolumeOne) {
      double vbar = eng_.covolume(body(h)).value;
      t = std::pow(vbar, -1.0 / p);
    } else {
      t = 1.0 / mass_pairing(h);
    }
    for (auto& x : h) x *= t;
    return h;
  }

  const FunctionalEngine& eng_;
  DiscreteMeasure mu_;
};

}  // namespace pclab
