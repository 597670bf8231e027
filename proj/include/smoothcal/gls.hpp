#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "smoothcal/numerics.hpp"

namespace smoothcal {

namespace detail {
inline constexpr int kPsiGridSize = 512;
inline constexpr double kPsiGridEdgeGap = 1e-6;   // relative gap kept to b
inline constexpr double kPsiGridTop = 1024.0;     // initial top for b = inf
inline constexpr double kPsiGridCap = 1 << 30;    // divergence declared past

inline std::vector<double> make_psi_grid(double b) {
  std::vector<double> g(kPsiGridSize);
  if (std::isfinite(b)) {
    // Geometric refinement toward the endpoint: p_i = b - (b-1)*s^i keeps
    // half the budget in the last decades before b, where sup_p ratios for
    // bounded-exponent spaces live.
    const double s =
        std::pow(kPsiGridEdgeGap, 1.0 / (kPsiGridSize - 1));
    double f = 1.0;
    for (int i = 0; i < kPsiGridSize; ++i, f *= s)
      g[static_cast<std::size_t>(i)] = b - (b - 1.0) * f;
  } else {
    const double r =
        std::pow(kPsiGridTop, 1.0 / (kPsiGridSize - 1));
    double p = 1.0;
    for (int i = 0; i < kPsiGridSize; ++i, p *= r)
      g[static_cast<std::size_t>(i)] = p;
  }
  return g;
}
}  // namespace detail

//! Generating function of a Grand Lebesgue Space: psi on [1, b) with
//! inf psi > 0.  Carries its own evaluation grid for the sup-type norm.
//! A degenerate instance is supported: psi finite at a single exponent r,
//! which turns the space into plain L_r.
class GeneratingPsi {
 public:
  GeneratingPsi(std::function<double(double)> eval, double b)
      : eval_(std::move(eval)), b_(b), grid_(detail::make_psi_grid(b)) {
    if (!(b_ > 1.0)) throw std::domain_error("GeneratingPsi: b must be > 1");
    for (double p : grid_) {
      const double v = eval_(p);
      if (!std::isfinite(v) || !(v > 0.0))
        throw std::domain_error(
            "GeneratingPsi: psi must be finite and positive on [1, b)");
    }
  }

  //! L_r as a degenerate Grand Lebesgue Space: psi = 1 at p = r only.
  static GeneratingPsi lebesgue_riesz(double r) {
    if (!(r >= 1.0) || !std::isfinite(r))
      throw std::domain_error("lebesgue_riesz: r must be finite and >= 1");
    GeneratingPsi out(
        [r](double p) { return p == r ? 1.0 : kInf; }, kInf,
        std::vector<double>{r});
    out.degenerate_p_ = r;
    return out;
  }

  //! psi(p) = p^(1/m); m = 2 gives the subgaussian generating function.
  static GeneratingPsi power(double m) {
    if (!(m > 0.0)) throw std::domain_error("power: m must be > 0");
    return GeneratingPsi([m](double p) { return std::pow(p, 1.0 / m); },
                         kInf);
  }

  double b() const { return b_; }
  const std::vector<double>& grid() const { return grid_; }
  std::optional<double> degenerate_p() const { return degenerate_p_; }

  double operator()(double p) const {
    if (degenerate_p_) return eval_(p);
    if (!(p >= 1.0) || !(p < b_))
      throw std::domain_error("GeneratingPsi: p outside [1, b)");
    return eval_(p);
  }

 private:
  GeneratingPsi(std::function<double(double)> eval, double b,
                std::vector<double> grid)
      : eval_(std::move(eval)), b_(b), grid_(std::move(grid)) {}

  std::function<double(double)> eval_;
  double b_;
  std::vector<double> grid_;
  std::optional<double> degenerate_p_;
};

//! Norm of a Grand Lebesgue Space element given its moment profile
//! p |-> ||f||_p: the sup of ||f||_p / psi(p) over the evaluation grid,
//! polished by golden-section inside the best bracket.  The result is a
//! lower bound of the true sup (grid semantics).  When b = +inf and the
//! ratio keeps growing as the grid is extended, +inf is returned.
inline double gls_norm(const std::function<double(double)>& moment_fn,
                       const GeneratingPsi& psi) {
  if (psi.degenerate_p()) {
    const double r = *psi.degenerate_p();
    return moment_fn(r) / psi(r);
  }
  // On the base grid a non-finite moment violates the caller's contract;
  // past it (the divergence probe for b = +inf) it just means the sup is
  // infinite.
  auto ratio = [&](double p, bool base_grid) {
    const double m = moment_fn(p);
    if (!std::isfinite(m)) {
      if (base_grid)
        throw std::domain_error(
            "gls_norm: moment function not finite at p = " +
            std::to_string(p));
      return kInf;
    }
    return m / psi(p);
  };

  auto scan = [&](const std::vector<double>& grid, bool base_grid) {
    double best = 0.0;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double v = ratio(grid[i], base_grid && i < detail::kPsiGridSize);
      if (v > best) {
        best = v;
        best_i = i;
      }
    }
    return std::make_pair(best, best_i);
  };

  std::vector<double> grid = psi.grid();
  auto [best, best_i] = scan(grid, true);

  if (!std::isfinite(psi.b())) {
    // Extend while the sup sits at the top of the window.
    while (std::isfinite(best) && best_i + 8 >= grid.size() &&
           grid.back() < detail::kPsiGridCap) {
      const double lo = grid.back();
      std::vector<double> ext(64);
      const double r = std::pow(16.0, 1.0 / 63.0);
      double p = lo;
      for (auto& g : ext) {
        p *= r;
        g = p;
      }
      grid.insert(grid.end(), ext.begin(), ext.end());
      std::tie(best, best_i) = scan(grid, true);
    }
    if (!std::isfinite(best) || best_i + 8 >= grid.size())
      return kInf;  // still growing at the cap, or moments overflowed
  }

  const double lo = grid[best_i > 0 ? best_i - 1 : 0];
  const double hi = grid[std::min(best_i + 1, grid.size() - 1)];
  if (hi > lo)
    best = std::max(
        best, golden_max([&](double p) { return ratio(p, false); }, lo, hi));
  return best;
}

//! Tail bound for a unit-norm Grand Lebesgue Space element:
//! T(t) <= exp(-h*(ln t)) with h(p) = p ln psi(p), valid for t >= e.
inline double tail_from_gls(const GeneratingPsi& psi, double t) {
  if (!(t >= std::exp(1.0)))
    throw std::domain_error("tail_from_gls: bound valid for t >= e only");
  const double lt = std::log(t);
  if (psi.degenerate_p()) {
    const double r = *psi.degenerate_p();
    return std::exp(-(r * lt - r * std::log(psi(r))));
  }
  auto h = [&psi](double p) {
    if (!(p >= 1.0) || !(p < psi.b())) return kInf;  // outside [1, b)
    return p * std::log(psi(p));
  };
  const double conj = young_fenchel(h, lt, 1.0, psi.b());
  return std::exp(-conj);
}

//! Degree-m transform psi^(m)(p) = psi(mp)^m on [1, b/m): the generating
//! function of |xi|^m when xi has generating function psi.
inline GeneratingPsi psi_power_transform(const GeneratingPsi& psi,
                                         double m) {
  if (!(m > 1.0))
    throw std::domain_error("psi_power_transform: m must be > 1");
  if (!(psi.b() / m > 1.0))
    throw std::domain_error("psi_power_transform: b/m must exceed 1");
  if (psi.degenerate_p())
    throw std::domain_error(
        "psi_power_transform: degenerate generating function");
  // Copy psi by value into the closure; GeneratingPsi is immutable.
  auto base = psi;
  return GeneratingPsi(
      [base, m](double p) { return std::pow(base(m * p), m); },
      psi.b() / m);
}

}  // namespace smoothcal
