#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace smoothcal {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

//! Composite Simpson rule on [a,b] with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, int panels) {
  if (panels < 2 || panels % 2 != 0)
    throw std::invalid_argument("simpson: panel count must be even and >= 2");
  if (!(a <= b) || !std::isfinite(a) || !std::isfinite(b))
    throw std::invalid_argument("simpson: bad interval");
  if (a == b) return 0.0;
  const double h = (b - a) / panels;
  // Kahan-compensated accumulation; the Gram-matrix checks downstream want
  // every last digit out of this rule.
  double sum = 0.0, comp = 0.0;
  auto add = [&](double term) {
    double y = term - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  };
  add(f(a));
  add(f(b));
  for (int i = 1; i < panels; ++i) {
    const double w = (i % 2 == 1) ? 4.0 : 2.0;
    add(w * f(a + i * h));
  }
  if (!std::isfinite(sum))
    throw std::runtime_error("simpson: integrand produced non-finite values");
  return sum * h / 3.0;
}

//! Piecewise-linear function on an explicit strictly increasing grid.
//! Evaluation outside the grid throws; this is deliberate, tabulated
//! functions in this library always know their own domain.
class TabulatedFn {
 public:
  TabulatedFn() = default;
  TabulatedFn(std::vector<double> xs, std::vector<double> ys)
      : xs_(std::move(xs)), ys_(std::move(ys)) {
    if (xs_.size() != ys_.size() || xs_.size() < 2)
      throw std::invalid_argument("TabulatedFn: need >= 2 matching nodes");
    for (std::size_t i = 1; i < xs_.size(); ++i)
      if (!(xs_[i] > xs_[i - 1]))
        throw std::invalid_argument("TabulatedFn: grid must be increasing");
  }

  double front_x() const { return xs_.front(); }
  double back_x() const { return xs_.back(); }
  const std::vector<double>& grid() const { return xs_; }
  const std::vector<double>& values() const { return ys_; }

  double operator()(double x) const {
    if (!(x >= xs_.front() && x <= xs_.back()))
      throw std::domain_error("TabulatedFn: evaluation outside grid");
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    std::size_t hi = std::min<std::size_t>(it - xs_.begin(), xs_.size() - 1);
    if (hi == 0) hi = 1;
    const std::size_t lo = hi - 1;
    const double t = (x - xs_[lo]) / (xs_[hi] - xs_[lo]);
    return ys_[lo] + t * (ys_[hi] - ys_[lo]);
  }

 private:
  std::vector<double> xs_, ys_;
};

//! Golden-section search for the maximum of a unimodal function on [a,b].
//! Used only to polish a bracket found by grid scan, so unimodality on the
//! bracket is a reasonable assumption and failure degrades gracefully to
//! the best evaluated point.
inline double golden_max(const std::function<double(double)>& f, double a,
                         double b, double* arg = nullptr) {
  static const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  const double tol = 1e-13 * std::max(1.0, std::abs(a) + std::abs(b));
  for (int it = 0; it < 200 && (b - a) > tol; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    }
  }
  const double xm = 0.5 * (a + b);
  const double fm = f(xm);
  double best = std::max(fm, std::max(f1, f2));
  if (arg) *arg = (best == fm) ? xm : (best == f1 ? x1 : x2);
  return best;
}

namespace detail {

// Scan objective on a uniform grid over [lo,hi], then polish the best
// bracket.  Non-finite objective values are treated as -inf (outside the
// effective domain).  `arg` (optional) receives the best evaluated point.
inline double grid_then_golden(const std::function<double(double)>& obj,
                               double lo, double hi, int grid_pts,
                               double* arg = nullptr) {
  double best = -kInf;
  int best_i = -1;
  const double step = (hi - lo) / (grid_pts - 1);
  for (int i = 0; i < grid_pts; ++i) {
    const double x = (i == grid_pts - 1) ? hi : lo + i * step;
    double v = obj(x);
    if (std::isnan(v) || v == kInf) v = -kInf;  // outside effective domain
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  if (best_i < 0) {
    if (arg) *arg = lo;
    return -kInf;
  }
  if (arg) *arg = std::min(hi, lo + best_i * step);
  const double bl = lo + std::max(0, best_i - 1) * step;
  const double bh = std::min(hi, lo + (best_i + 1) * step);
  auto safe = [&obj](double x) {
    double v = obj(x);
    return (std::isnan(v) || v == kInf) ? -kInf : v;
  };
  double garg = 0.0;
  const double gbest = golden_max(safe, bl, bh, &garg);
  if (gbest > best) {
    best = gbest;
    if (arg) *arg = garg;
  }
  return best;
}

}  // namespace detail

//! Legendre transform sup_{x in [lo,hi]} (v*x - g(x)).
//!
//! `hi` may be +inf, in which case the window is grown geometrically until
//! the supremum is bracketed or declared divergent (+inf is returned).
//! Points where g is non-finite count as outside the domain.  The result is
//! a grid+golden approximation: a certified lower bound of the true sup up
//! to the local curvature over one grid cell.
inline double young_fenchel(const std::function<double(double)>& g, double v,
                            double lo, double hi, int grid_pts = 513) {
  if (!(lo < hi)) throw std::invalid_argument("young_fenchel: empty domain");
  if (!std::isfinite(v))
    throw std::invalid_argument("young_fenchel: non-finite slope");
  auto obj = [&](double x) {
    const double gx = g(x);
    if (!std::isfinite(gx)) return -kInf;
    return v * x - gx;
  };
  constexpr double kDiverge = 1e12;
  if (std::isfinite(hi))
    return detail::grid_then_golden(obj, lo, hi, grid_pts);

  // Nested windows make the running sup nondecreasing; two consecutive
  // doublings without growth mean the sup is attained (or the objective is
  // flat), while sustained growth past kDiverge is declared divergence.
  double window = std::max(1.0, std::abs(lo) * 2.0);
  double best = -kInf;
  int stable = 0;
  for (int round = 0; round < 80; ++round) {
    const double cur =
        detail::grid_then_golden(obj, lo, lo + window, grid_pts);
    if (cur > kDiverge) return kInf;
    if (cur <= best + 1e-10 * std::max(1.0, std::abs(cur))) {
      if (++stable >= 2) return std::max(best, cur);
    } else {
      stable = 0;
    }
    best = std::max(best, cur);
    window *= 2.0;
  }
  return kInf;
}

}  // namespace smoothcal
