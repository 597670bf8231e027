#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

#include "smoothcal/gls.hpp"
#include "smoothcal/numerics.hpp"
#include "smoothcal/rng.hpp"

namespace smoothcal {

//! Exact cumulant generating function of Z^2 - 1 for standard normal Z:
//! upsilon(lambda) = -0.5 ln(1 - 2|lambda|) - |lambda|, finite for
//! |lambda| < 1/2.
inline double upsilon(double lam) {
  const double a = std::abs(lam);
  if (!(a < 0.5))
    throw std::domain_error(
        "upsilon: |lambda| must be below 1/2 (MGF infinite beyond)");
  return -0.5 * std::log(1.0 - 2.0 * a) - a;
}

//! Closed-form Young-Fenchel conjugate of upsilon (test oracle):
//! upsilon*(t) = t/2 - 0.5 ln(1 + t) for t >= 0.
inline double upsilon_conjugate(double t) {
  if (t < 0.0) throw std::domain_error("upsilon_conjugate: t must be >= 0");
  return 0.5 * t - 0.5 * std::log1p(t);
}

//! Generating-function evaluator with a symmetric domain (-lambda0,
//! lambda0), without shape validation.  Pipeline intermediates (the chi
//! transform in particular) are genuinely non-even, so they live here;
//! YoungOrliczPhi below adds the axioms.  Evaluation outside the open
//! domain yields +inf, the natural convention for conjugation.
struct PhiFn {
  std::function<double(double)> eval;
  double lambda0 = kInf;

  double operator()(double lam) const {
    if (!(std::abs(lam) < lambda0)) return kInf;
    return eval(lam);
  }
};

//! Young-Orlicz generating function: even, zero and flat at the origin,
//! strictly curved there, convex.  The axioms are enforced numerically on
//! a grid at construction.
class YoungOrliczPhi {
 public:
  YoungOrliczPhi(std::function<double(double)> eval, double lambda0)
      : fn_{std::move(eval), lambda0} {
    if (!(lambda0 > 0.0))
      throw std::domain_error("YoungOrliczPhi: lambda0 must be positive");
    validate();
  }

  double lambda0() const { return fn_.lambda0; }
  const PhiFn& fn() const { return fn_; }
  double operator()(double lam) const { return fn_(lam); }

  //! phi2(lambda) = lambda^2 / 2, the subgaussian generating function.
  static YoungOrliczPhi quadratic(double scale = 1.0) {
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw std::domain_error("quadratic: scale must be positive");
    return YoungOrliczPhi(
        [scale](double lam) { return 0.5 * scale * scale * lam * lam; },
        kInf);
  }

  //! upsilon as a validated generating function on (-1/2, 1/2).
  static YoungOrliczPhi chi_square_cgf() {
    return YoungOrliczPhi([](double lam) { return upsilon(lam); }, 0.5);
  }

 private:
  void validate() const {
    const double top = std::min(fn_.lambda0, 8.0) * (1.0 - 1e-9);
    const int m = 65;  // odd count keeps 0 on the grid
    std::vector<double> v(m);
    double scale = 0.0;
    for (int i = 0; i < m; ++i) {
      const double lam = -top + 2.0 * top * i / (m - 1);
      v[static_cast<std::size_t>(i)] = fn_(lam);
      if (!std::isfinite(v[static_cast<std::size_t>(i)]))
        throw std::domain_error(
            "YoungOrliczPhi: non-finite value inside the domain");
      scale = std::max(scale, std::abs(v[static_cast<std::size_t>(i)]));
    }
    scale = std::max(scale, 1.0);
    for (int i = 0; i < m / 2; ++i)
      if (std::abs(v[static_cast<std::size_t>(i)] -
                   v[static_cast<std::size_t>(m - 1 - i)]) >
          1e-12 * scale)
        throw std::domain_error("YoungOrliczPhi: not even");
    if (std::abs(fn_(0.0)) > 1e-14)
      throw std::domain_error("YoungOrliczPhi: phi(0) must be 0");
    const double h = std::min(1e-4, top / 4.0);
    if (std::abs(fn_(h) - fn_(-h)) / (2.0 * h) > 1e-8)
      throw std::domain_error("YoungOrliczPhi: phi'(0) must vanish");
    if (!((fn_(h) - 2.0 * fn_(0.0) + fn_(-h)) / (h * h) > 0.0))
      throw std::domain_error("YoungOrliczPhi: phi''(0) must be positive");
    for (int i = 1; i + 1 < m; ++i) {
      const double second = v[static_cast<std::size_t>(i - 1)] -
                            2.0 * v[static_cast<std::size_t>(i)] +
                            v[static_cast<std::size_t>(i + 1)];
      if (second < -1e-10 * scale)
        throw std::domain_error("YoungOrliczPhi: not convex on the grid");
    }
  }

  PhiFn fn_;
};

//! Conjugate sup_{lam in [0, lambda0)} (u lam - phi(lam)) for u >= 0.
//! For generating functions that are nonnegative with phi(0) = 0 (all
//! pipeline cases, even the non-even chi composites) the two-sided sup over
//! the full domain coincides with this one-sided one.
inline double phi_conjugate(const PhiFn& phi, double u) {
  if (u < 0.0) throw std::domain_error("phi_conjugate: u must be >= 0");
  return young_fenchel([&phi](double lam) { return phi(lam); }, u, 0.0,
                       phi.lambda0);
}

inline double phi_conjugate(const YoungOrliczPhi& phi, double u) {
  return phi_conjugate(phi.fn(), u);
}

//! Tchernov tail estimate for ||xi||_{B(phi)} <= norm_v:
//! P(|xi| >= t) <= min(2, 2 exp(-phi*(t / norm_v))).
template <typename Phi>
inline double b_phi_tail(const Phi& phi, double norm_v, double t) {
  if (!(norm_v > 0.0))
    throw std::domain_error("b_phi_tail: norm must be positive");
  if (!(t > 0.0)) throw std::domain_error("b_phi_tail: t must be positive");
  const double conj = phi_conjugate(phi, t / norm_v);
  return std::min(2.0, 2.0 * std::exp(-conj));
}

namespace detail {

// Even envelope max(phi(x), phi(-x)); the sphere sup below ranges over
// signed gamma, so each term may pick its better sign.
inline double even_env(const PhiFn& phi, double x) {
  return std::max(phi(x), phi(-x));
}

// Euclidean projection onto the probability simplex (Duchi et al. style).
inline void project_simplex(std::vector<double>& u) {
  std::vector<double> s = u;
  std::sort(s.begin(), s.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  int rho = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    cum += s[i];
    const double t = (cum - 1.0) / static_cast<double>(i + 1);
    if (s[i] - t > 0.0) {
      rho = static_cast<int>(i + 1);
      theta = t;
    }
  }
  if (rho == 0) {  // all mass collapsed; fall back to uniform
    const double uv = 1.0 / static_cast<double>(u.size());
    for (double& x : u) x = uv;
    return;
  }
  for (double& x : u) x = std::max(x - theta, 0.0);
  double tot = 0.0;
  for (double x : u) tot += x;
  for (double& x : u) x /= tot;
}

}  // namespace detail

//! Sphere transform: sup of sum_j phi(gamma_j lambda) over gamma with
//! sum gamma_j^2 = 1, at most m_terms nonzero entries.  When
//! s |-> phi(sqrt(s)) is convex on (0, lambda^2] the sup sits at a vertex
//! and equals phi(lambda) (fixed-point case, returned exactly); otherwise
//! the sup over the simplex of gamma_j^2 is approached by projected
//! gradient ascent from random restarts and the best evaluated point is
//! returned, a certified lower bound.  Nondecreasing in m_terms by
//! construction (the m-1 result is folded in).
template <typename Phi>
inline double overline_phi(const Phi& phi, double lam, int m_terms) {
  if (m_terms < 1 || m_terms > 8)
    throw std::domain_error("overline_phi: m_terms must lie in [1, 8]");
  const PhiFn& f = [&]() -> const PhiFn& {
    if constexpr (std::is_same_v<Phi, PhiFn>)
      return phi;
    else
      return phi.fn();
  }();
  const double a = std::abs(lam);
  const double vertex = detail::even_env(f, a);
  if (m_terms == 1 || a == 0.0 || !std::isfinite(vertex)) return vertex;

  // Shape shortcuts on s |-> phi(sqrt(s)): convex puts the sphere sup at a
  // vertex (fixed point, value phi(lambda)); concave puts it at uniform
  // weights (Jensen), value m phi(lambda / sqrt(m)).  Either way the
  // returned point is feasible, so the lower-bound semantics are intact.
  {
    const int pts = 33;
    bool finite = true;
    std::vector<double> w(pts);
    for (int i = 0; i < pts; ++i) {
      const double s = a * a * (i + 1) / pts;
      w[static_cast<std::size_t>(i)] = detail::even_env(f, std::sqrt(s));
      if (!std::isfinite(w[static_cast<std::size_t>(i)])) finite = false;
    }
    if (finite) {
      const double scale = std::max(std::abs(vertex), 1e-12);
      bool convex = true, concave = true;
      for (int i = 1; i + 1 < pts; ++i) {
        const double second = w[static_cast<std::size_t>(i - 1)] -
                              2.0 * w[static_cast<std::size_t>(i)] +
                              w[static_cast<std::size_t>(i + 1)];
        if (second < -1e-9 * scale) convex = false;
        if (second > 1e-9 * scale) concave = false;
      }
      if (convex) return vertex;
      if (concave) {
        const double uniform =
            m_terms * detail::even_env(f, a / std::sqrt(double(m_terms)));
        return std::max(vertex, uniform);
      }
    }
  }

  const int m = m_terms;
  auto objective = [&](const std::vector<double>& u) {
    double s = 0.0;
    for (double uj : u)
      s += uj > 0.0 ? detail::even_env(f, std::sqrt(uj) * a) : 0.0;
    return s;
  };
  auto gradient = [&](const std::vector<double>& u, std::vector<double>& g) {
    const double h = 1e-7;
    for (std::size_t j = 0; j < u.size(); ++j) {
      const double up = std::min(u[j] + h, 1.0);
      const double dn = std::max(u[j] - h, 0.0);
      const double fp = detail::even_env(f, std::sqrt(up) * a);
      const double fd = detail::even_env(f, std::sqrt(dn) * a);
      g[j] = (up > dn) ? (fp - fd) / (up - dn) : 0.0;
    }
  };

  double best = vertex;
  std::vector<double> u(static_cast<std::size_t>(m)), g(u.size());
  // Deterministic restarts: seed from the argument bits.
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(lam));
  std::memcpy(&bits, &lam, sizeof(bits));
  RngStream rng(bits ^ 0x5bd1e995u, static_cast<std::uint64_t>(m));
  for (int restart = 0; restart < 32; ++restart) {
    if (restart == 0) {
      std::fill(u.begin(), u.end(), 1.0 / m);  // uniform start
    } else {
      double tot = 0.0;
      for (double& x : u) {
        x = -std::log(std::max(rng.uniform01(), 1e-300));
        tot += x;
      }
      for (double& x : u) x /= tot;
    }
    double cur = objective(u);
    for (int it = 0; it < 250; ++it) {
      gradient(u, g);
      double gn = 0.0;
      for (double x : g) gn = std::max(gn, std::abs(x));
      if (gn == 0.0) break;
      const double step = 0.25 / (gn * std::sqrt(it + 1.0));
      std::vector<double> cand = u;
      for (std::size_t j = 0; j < u.size(); ++j) cand[j] += step * g[j];
      detail::project_simplex(cand);
      const double cv = objective(cand);
      if (cv >= cur) {
        u = cand;
        cur = cv;
      } else {
        break;  // ascent stalled; simplex projection makes this a max
      }
    }
    best = std::max(best, cur);
  }
  if (m > 1) best = std::max(best, overline_phi(phi, lam, m - 1));
  return best;
}

namespace detail {
inline constexpr double kSharpDivergeValue = 1e10;
inline constexpr int kSharpMaxDoubling = 60;
}

//! Core of the sharp transform given the conjugate phi* as a callable:
//! sup_{v >= 0} (|lambda| v - phi*(sqrt(v))).
//!
//! Whether the sup is finite hinges on how c(v) = phi*(sqrt(v)) grows:
//! the objective |lambda| v - c(v) stays bounded iff the slope of c
//! eventually dominates |lambda|.  A window [0, W] certifies its interior
//! max as the global sup only when the chord slopes of c near W (a) sit
//! above |lambda| and (b) are not decreasing -- then any convex
//! continuation of phi* keeps the objective falling past W.  Decreasing
//! chords mean c grows sublinearly (phi* sublinear in v, e.g. any phi
//! with a bounded domain) and the objective escapes: +inf.  With
//! v_wall = +inf the window doubles until one side is settled; a finite
//! v_wall marks the horizon beyond which phi* is not known (tabulated
//! conjugates), and a sup pressing against the wall or an uncertified
//! interior max yields +inf.  For the quadratic family c is exactly
//! linear, reproducing the 0 / +inf dichotomy at |lambda| = 1/2.
inline double phi_sharp_from_conjugate(
    const std::function<double(double)>& phi_star, double lam,
    double v_wall = kInf) {
  const double a = std::abs(lam);
  if (a == 0.0) return 0.0;  // sup_v -phi*(sqrt v), attained at v = 0
  auto conj_v = [&](double v) { return phi_star(std::sqrt(v)); };
  auto obj = [&](double v) {
    const double c = conj_v(v);
    if (!std::isfinite(c)) return -kInf;
    return a * v - c;
  };
  // +1 certified finite, -1 certified divergent, 0 undecided at this W.
  auto slope_verdict = [&](double W) {
    const double w = W * (1.0 - 1e-6);  // dodge wall rounding
    const double c4 = conj_v(w);
    if (!std::isfinite(c4)) return +1;  // phi* infinite past here: trapped
    const double c3 = conj_v(0.75 * w), c2 = conj_v(0.5 * w);
    const double s1 = (c4 - c3) / (0.25 * w);
    const double s0 = (c3 - c2) / (0.25 * w);
    const double slack = 1e-3 * std::max(std::abs(s0), std::abs(s1)) + 1e-12;
    if (a <= s1 * (1.0 - 1e-9) && s1 >= s0 - slack) return +1;
    if (a > s1 * (1.0 + 1e-9) && s1 < s0 - slack) return -1;
    return 0;
  };
  if (std::isfinite(v_wall)) {
    double arg = 0.0;
    const double best =
        std::max(0.0, detail::grid_then_golden(obj, 0.0, v_wall, 513, &arg));
    if (best > detail::kSharpDivergeValue || arg > 0.95 * v_wall) return kInf;
    return slope_verdict(v_wall) > 0 ? best : kInf;
  }
  double vmax = 4.0;
  double best = 0.0;  // v = 0 gives -phi*(0) = 0
  for (int round = 0; round < detail::kSharpMaxDoubling; ++round) {
    best = std::max(best, detail::grid_then_golden(obj, 0.0, vmax, 257));
    if (best > detail::kSharpDivergeValue) return kInf;
    const int verdict = slope_verdict(vmax);
    if (verdict < 0) return kInf;
    const double edge = obj(vmax);
    if (verdict > 0 &&
        edge < best - 1e-12 * std::max(1.0, std::abs(best)))
      return best;
    vmax *= 2.0;
  }
  return kInf;
}

//! Sharp transform phi^(s)(lambda) = sup_v (|lambda||v| - phi*(sqrt|v|)).
//! Direct evaluation (conjugate computed on the fly); pipelines tabulate
//! the conjugate first and call phi_sharp_from_conjugate.
template <typename Phi>
inline double phi_sharp(const Phi& phi, double lam) {
  return phi_sharp_from_conjugate(
      [&phi](double y) { return phi_conjugate(phi, y); }, lam);
}

//! chi transform: chi(lambda) = phi^(s)(lambda) - lambda beta^2, the
//! generating function controlling xi^2 - beta^2 when ||xi||_{B(phi)} = 1.
//! Genuinely non-even (the linear recentering term breaks symmetry).
template <typename Phi>
inline double chi(const Phi& phi, double beta_sq, double lam) {
  if (!(beta_sq >= 0.0))
    throw std::domain_error("chi: beta^2 must be >= 0");
  const double sharp = phi_sharp(phi, lam);
  if (!std::isfinite(sharp)) return kInf;
  return sharp - lam * beta_sq;
}

//! Pointwise max of two generating functions on the intersection domain;
//! the generating function of a sum via Remark-type subadditivity.
inline PhiFn combine_max(const PhiFn& a, const PhiFn& b) {
  const double lam0 = std::min(a.lambda0, b.lambda0);
  if (!(lam0 > 0.0))
    throw std::domain_error("combine_max: empty domain intersection");
  return PhiFn{[a, b](double lam) { return std::max(a(lam), b(lam)); },
               lam0};
}

inline YoungOrliczPhi combine_max(const YoungOrliczPhi& a,
                                  const YoungOrliczPhi& b) {
  PhiFn c = combine_max(a.fn(), b.fn());
  return YoungOrliczPhi(c.eval, c.lambda0);
}

// ---------------------------------------------------------------------
// Rosenthal moment bounds for sums of independent centered variables.
// ---------------------------------------------------------------------

//! Best-known constant prefactor R(p) = r p / (e ln p), r = 1.77638...
inline constexpr double kRosenthalR = 1.77638;

inline double rosenthal_constant(double p) {
  if (!(p >= 2.0))
    throw std::domain_error("rosenthal_constant: p must be >= 2");
  return kRosenthalR * p / (std::exp(1.0) * std::log(p));
}

//! ||sum xi_i||_p <= R(p) max(l2_part, lp_part) where l2_part =
//! ||sum||_2 = sqrt(sum Var) and lp_part = (sum E|xi_i|^p)^(1/p).
inline double rosenthal_bound(double p, double l2_part, double lp_part) {
  if (!(l2_part >= 0.0) || !(lp_part >= 0.0))
    throw std::domain_error("rosenthal_bound: norms must be >= 0");
  return rosenthal_constant(p) * std::max(l2_part, lp_part);
}

//! i.i.d. specialization: both arguments collapse into sqrt(n) ||xi_1||_p.
inline double rosenthal_bound_iid(double p, std::size_t n, double lp_norm) {
  if (n < 1) throw std::domain_error("rosenthal_bound_iid: n must be >= 1");
  return rosenthal_constant(p) * std::sqrt(static_cast<double>(n)) * lp_norm;
}

//! Weighted form ||sum q_i eta_i||_p <= R(p) ||q||_2 ||eta_1||_p for
//! i.i.d. centered eta with unit variance.
inline double rosenthal_bound_weighted(double p, double q_l2,
                                       double eta_lp) {
  if (!(q_l2 >= 0.0) || !(eta_lp >= 0.0))
    throw std::domain_error("rosenthal_bound_weighted: norms must be >= 0");
  return rosenthal_constant(p) * q_l2 * eta_lp;
}

// ---------------------------------------------------------------------
// Norm-equivalence transforms between B(phi) and Grand Lebesgue scales.
// ---------------------------------------------------------------------

//! Generating psi induced by a B(phi) membership:
//! beta(y) = phi(e^y), psi_phi(p) = p exp(-beta*(p)/p).
template <typename Phi>
inline GeneratingPsi psi_from_phi(const Phi& phi) {
  const PhiFn f = [&]() -> PhiFn {
    if constexpr (std::is_same_v<Phi, PhiFn>)
      return phi;
    else
      return phi.fn();
  }();
  const double y_hi =
      std::isfinite(f.lambda0) ? std::log(f.lambda0) : kInf;
  auto beta = [f](double y) { return f(std::exp(y)); };
  auto eval = [beta, y_hi](double p) {
    // beta(y) -> 0 as y -> -inf, so the objective p*y - beta(y) falls off
    // to -inf on the left; -60 is effectively the boundary.
    const double conj = young_fenchel(beta, p, -60.0, y_hi);
    if (!std::isfinite(conj)) return kInf;
    return p * std::exp(-conj / p);
  };
  return GeneratingPsi(eval, kInf);
}

//! Generating phi induced by a Grand Lebesgue membership with
//! psi_Delta(p) = p exp(-Delta(p)/p): phi_Delta(lambda) =
//! Delta*(|ln|lambda||).  Implemented literally; for degenerate Delta
//! (e.g. Delta = 0) the conjugate is a 0/+inf indicator and the result is
//! a sentinel-valued evaluator, not a validated Young-Orlicz function.
inline PhiFn phi_from_psi_delta(const std::function<double(double)>& delta) {
  auto eval = [delta](double lam) {
    const double a = std::abs(lam);
    if (a == 0.0) return kInf;  // |ln 0| diverges; documented sentinel
    const double y = std::abs(std::log(a));
    return young_fenchel(delta, y, 0.0, kInf);
  };
  return PhiFn{eval, kInf};
}

}  // namespace smoothcal
