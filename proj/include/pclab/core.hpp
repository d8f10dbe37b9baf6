#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pclab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Errors. ValidationError maps to CLI exit code 2, NumericError to exit 3.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

inline ValidationError degenerate_cone(const std::string& w) { return {"DegenerateCone", w}; }
inline ValidationError unsupported_dimension(const std::string& w) { return {"UnsupportedDimension", w}; }
inline ValidationError outside_cap(const std::string& w) { return {"OutsideCap", w}; }
inline ValidationError not_in_cone(const std::string& w) { return {"NotInCone", w}; }
inline ValidationError cone_mismatch(const std::string& w) { return {"ConeMismatch", w}; }
inline ValidationError exponent_out_of_range(const std::string& w) { return {"ExponentOutOfRange", w}; }
inline ValidationError gradient_unavailable(const std::string& w) { return {"GradientUnavailable", w}; }
inline ValidationError unknown_case(const std::string& w) { return {"UnknownCase", w}; }
inline ValidationError empty_wulff(const std::string& w) { return {"EmptyWulff", w}; }
inline ValidationError bad_schedule(const std::string& w) { return {"InconclusiveFit", w}; }
inline NumericError numeric_divergence(const std::string& w) { return {"NumericDivergence", w}; }
inline NumericError divergent_measure(const std::string& w) { return {"DivergentMeasure", w}; }
inline NumericError singular_at_origin(const std::string& w) { return {"SingularAtOrigin", w}; }
inline NumericError inconclusive_fit(const std::string& w) { return {"InconclusiveFit", w}; }

// ---------------------------------------------------------------------------
// Deterministic RNG. std::mt19937_64 has a pinned sequence, but the standard
// distributions do not; we derive uniforms from raw output so that identical
// seeds give identical streams on every platform.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next_u64() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {
    // Box-Muller, cached second value.
    if (have_cache_) {
      have_cache_ = false;
      return cache_;
    }
    double u1 = std::max(uniform(), 1e-300);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    cache_ = r * std::sin(2.0 * kPi * u2);
    have_cache_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

 private:
  std::uint64_t state_;
  double cache_ = 0.0;
  bool have_cache_ = false;
};

// ---------------------------------------------------------------------------
// Compensated summation (Neumaier). Node sums are always accumulated in a
// fixed block order so results do not depend on the thread count.
// ---------------------------------------------------------------------------

class NeumaierSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline int& thread_count_ref() {
  static int n = 1;
  return n;
}
inline void set_thread_count(int n) { thread_count_ref() = std::max(1, n); }
inline int thread_count() { return thread_count_ref(); }

// Deterministic map-reduce: f(i) is summed per fixed-size block, block sums
// are combined in index order regardless of how blocks were scheduled.
inline double block_sum(std::size_t count, const std::function<double(std::size_t)>& f) {
  constexpr std::size_t kBlock = 2048;
  const std::size_t nblocks = (count + kBlock - 1) / kBlock;
  std::vector<double> partial(nblocks, 0.0);
  auto run_block = [&](std::size_t b) {
    NeumaierSum s;
    const std::size_t lo = b * kBlock;
    const std::size_t hi = std::min(count, lo + kBlock);
    for (std::size_t i = lo; i < hi; ++i) s.add(f(i));
    partial[b] = s.value();
  };
  const int threads = thread_count();
  if (threads <= 1 || nblocks <= 1) {
    for (std::size_t b = 0; b < nblocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    std::size_t next = 0;
    std::mutex mtx;
    auto worker = [&]() {
      for (;;) {
        std::size_t b;
        {
          std::lock_guard<std::mutex> lock(mtx);
          if (next >= nblocks) return;
          b = next++;
        }
        run_block(b);
      }
    };
    int nw = static_cast<int>(std::min<std::size_t>(threads, nblocks));
    pool.reserve(nw);
    for (int t = 0; t < nw; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  NeumaierSum total;
  for (double p : partial) total.add(p);
  return total.value();
}

// ---------------------------------------------------------------------------
// 1D golden-section maximization on [a, b] for unimodal f.
// ---------------------------------------------------------------------------

struct GoldenResult {
  double x;
  double value;
};

inline GoldenResult golden_max(const std::function<double(double)>& f, double a, double b,
                               int iters = 120) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters && (b - a) > 0; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    }
  }
  return f1 > f2 ? GoldenResult{x1, f1} : GoldenResult{x2, f2};
}

inline GoldenResult golden_min(const std::function<double(double)>& f, double a, double b,
                               int iters = 120) {
  auto neg = [&](double x) { return -f(x); };
  GoldenResult r = golden_max(neg, a, b, iters);
  return {r.x, -r.value};
}

// ---------------------------------------------------------------------------
// Least-squares line fit, used by the divergence classifiers.
// ---------------------------------------------------------------------------

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return {};
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  if (syy <= 0) {
    f.r2 = 1.0;
  } else {
    double ssr = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double e = y[i] - (f.intercept + f.slope * x[i]);
      ssr += e * e;
    }
    f.r2 = 1.0 - ssr / syy;
  }
  return f;
}

// Aitken extrapolation of a power-law approach g_k -> L - c * h_k^alpha on a
// geometric schedule h_k. Exact when the approach is a clean power law.
inline double aitken(double g0, double g1, double g2) {
  double d1 = g1 - g0, d2 = g2 - g1;
  double denom = d2 - d1;
  if (std::abs(denom) < 1e-300) return g2;
  double l = g2 - d2 * d2 / denom;
  return l;
}

// Adaptive Simpson integration on [a, b].
namespace detail_simpson {
inline double rec(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                  double fb, double whole, double tol, int depth) {
  double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return rec(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         rec(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}
}  // namespace detail_simpson

inline double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                 double tol = 1e-12) {
  double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail_simpson::rec(f, a, b, fa, fm, fb, whole, tol, 60);
}

inline Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

inline Vec vec3(double x, double y, double z) {
  Vec v(3);
  v << x, y, z;
  return v;
}

}  // namespace pclab
