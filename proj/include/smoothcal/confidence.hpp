#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "smoothcal/bphi.hpp"
#include "smoothcal/estimate.hpp"
#include "smoothcal/numerics.hpp"

namespace smoothcal {

//! Asymptotic standard deviation of the tail-energy estimate:
//! Theta(n, N, rho) = sqrt(4 rho / n + 9 N / n^2).
inline double theta(long n, int N, double rho) {
  if (n < 1) throw std::domain_error("theta: n must be >= 1");
  if (N < 1 || N > n) throw std::domain_error("theta: need 1 <= N <= n");
  if (!(rho >= 0.0) || !std::isfinite(rho))
    throw std::domain_error("theta: rho must be finite and >= 0 "
                            "(clamp rho-hat before plugging in)");
  const double dn = static_cast<double>(n);
  return std::sqrt(4.0 * rho / dn + 9.0 * static_cast<double>(N) / (dn * dn));
}

//! Two-sided standard normal mass (2 pi)^{-1/2} int_{-v}^{v} e^{-x^2/2} dx,
//! by Simpson integration (the quantile below is defined against this
//! integral, not against a closed-form erf).
inline double normal_cdf_mass(double v) {
  if (!(v >= 0.0)) throw std::domain_error("normal_cdf_mass: v must be >= 0");
  if (v == 0.0) return 0.0;
  const int panels = 2048 * std::max(1, static_cast<int>(std::ceil(v / 4.0)));
  const double integral = simpson(
      [](double x) { return std::exp(-0.5 * x * x); }, 0.0, v, panels);
  return 2.0 * integral / std::sqrt(kTwoPi);
}

namespace detail {

// Rational approximation to the standard normal quantile (Acklam).
// Absolute error below 1.2e-9; one Newton step against the integrated CDF
// pushes it past the 1e-9 contract.
inline double inv_normal_cdf(double q) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  if (!(q > 0.0 && q < 1.0))
    throw std::domain_error("inv_normal_cdf: q must lie in (0,1)");
  if (q < p_low) {
    const double r = std::sqrt(-2.0 * std::log(q));
    return (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r +
            c[5]) /
           ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
  }
  if (q <= 1.0 - p_low) {
    const double r = q - 0.5;
    const double s = r * r;
    return (((((a[0] * s + a[1]) * s + a[2]) * s + a[3]) * s + a[4]) * s +
            a[5]) *
           r /
           (((((b[0] * s + b[1]) * s + b[2]) * s + b[3]) * s + b[4]) * s +
            1.0);
  }
  const double r = std::sqrt(-2.0 * std::log(1.0 - q));
  return -(((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r +
           c[5]) /
         ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
}

}  // namespace detail

//! Two-sided normal quantile: the v with
//! (2 pi)^{-1/2} int_{-v}^{v} e^{-x^2/2} dx = alpha.  Note alpha is the
//! coverage mass here (0.95 -> 1.96), not a tail probability.
inline double normal_quantile_two_sided(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error(
        "normal_quantile_two_sided: alpha must lie in (0,1)");
  const double v0 = detail::inv_normal_cdf(0.5 * (1.0 + alpha));
  const double pdf = std::exp(-0.5 * v0 * v0) / std::sqrt(kTwoPi);
  return v0 - (normal_cdf_mass(v0) - alpha) / (2.0 * pdf);
}

enum class CiMethod { kPlugIn, kQuadraticSolve };

//! Two-sided interval for the tail energy rho(N).
struct ConfidenceInterval {
  long n = 0;
  int N = 0;
  double alpha = 0.0;
  double lower = 0.0;  //!< raw lower endpoint (may be negative, plug-in)
  double upper = 0.0;
  CiMethod method = CiMethod::kPlugIn;

  //! Reported form: the parameter is a tail energy, so negative lower
  //! endpoints are truncated at 0.
  double clamped_lower() const { return std::max(lower, 0.0); }
  bool covers(double rho) const { return rho >= lower && rho <= upper; }
};

//! Interval from the Gaussian approximation
//! (rho-hat - rho) / Theta(n, N, rho) ~ N(0, 1).
//!
//! plug-in: rho-hat (clamped at 0) replaces rho inside Theta and the
//! interval is rho-hat +- v(alpha) Theta.  quadratic-solve: the exact set
//! {rho >= 0 : (rho-hat - rho)^2 <= v^2 (4 rho/n + 9 N/n^2)}, whose
//! boundary is a quadratic in rho; an empty intersection with [0, inf)
//! degenerates to the point {0}.
inline ConfidenceInterval asymptotic_ci(double rho_hat_raw, long n, int N,
                                        double alpha, CiMethod method) {
  if (!std::isfinite(rho_hat_raw))
    throw std::domain_error("asymptotic_ci: rho-hat must be finite");
  const double v = normal_quantile_two_sided(alpha);
  ConfidenceInterval ci;
  ci.n = n;
  ci.N = N;
  ci.alpha = alpha;
  ci.method = method;
  if (method == CiMethod::kPlugIn) {
    const double half =
        v * theta(n, N, std::max(rho_hat_raw, 0.0));
    ci.lower = rho_hat_raw - half;
    ci.upper = rho_hat_raw + half;
    return ci;
  }
  const double dn = static_cast<double>(n);
  const double v2 = v * v;
  // (rho-hat - rho)^2 <= v^2 (4 rho/n + 9 N/n^2), rewritten as
  // rho^2 - 2 (rho-hat + 2 v^2/n) rho + (rho-hat^2 - 9 v^2 N/n^2) <= 0.
  const double half_b = rho_hat_raw + 2.0 * v2 / dn;
  const double c = rho_hat_raw * rho_hat_raw -
                   9.0 * v2 * static_cast<double>(N) / (dn * dn);
  const double disc = half_b * half_b - c;
  if (disc < 0.0 || (v == 0.0 && rho_hat_raw < 0.0)) {
    ci.lower = ci.upper = 0.0;
    return ci;
  }
  const double root = std::sqrt(std::max(disc, 0.0));
  const double lo = half_b - root;
  const double hi = half_b + root;
  if (hi < 0.0) {
    ci.lower = ci.upper = 0.0;
    return ci;
  }
  ci.lower = std::max(lo, 0.0);
  ci.upper = hi;
  return ci;
}

//! Quadratic generating function matching a subgaussian noise family of
//! standard deviation sigma, normalized so ||xi||_{B(phi)} = 1.
inline YoungOrliczPhi noise_phi(const NoiseSpec& noise) {
  if (!(noise.sigma > 0.0))
    throw std::domain_error("noise_phi: sigma must be positive");
  return YoungOrliczPhi::quadratic(noise.sigma);
}

namespace detail {
inline constexpr int kZetaTabSize = 129;
inline constexpr double kZetaLambdaCap = 8.0;
}

//! Non-asymptotic tail machinery for the normalized deviation
//! mu = (rho-hat - rho) / (sqrt(2) Theta).  One combined generating
//! function zeta per problem:
//!
//!   regression: zeta = max(chi[phibar], phibar) with phibar the sphere
//!               transform of the (caller-normalized) noise generating
//!               function and chi its recentered sharp transform;
//!   density:    the same composite built from phi2 (the basis functions
//!               are bounded by sqrt(2), making the coefficient noise
//!               subgaussian);
//!   spectral:   zeta = sphere transform of chi[phi2], with the norm scale
//!               Delta^2 = Var(xi_1) entering the Tchernov argument.
//!
//! All transforms are tabulated once at construction; bounds at arbitrary
//! (n, N, rho, t) are then cheap.
class TailPipeline {
 public:
  static TailPipeline regression(const YoungOrliczPhi& noise,
                                 int m_terms = 8) {
    return TailPipeline(ProblemTag::kRegression, noise.fn(), 1.0, m_terms);
  }
  static TailPipeline density(int m_terms = 8) {
    return TailPipeline(ProblemTag::kDensity,
                        YoungOrliczPhi::quadratic().fn(), 1.0, m_terms);
  }
  static TailPipeline spectral(double delta_sq, int m_terms = 8) {
    if (!(delta_sq > 0.0))
      throw std::domain_error("TailPipeline: Delta^2 must be positive");
    return TailPipeline(ProblemTag::kSpectral,
                        YoungOrliczPhi::quadratic().fn(), delta_sq, m_terms);
  }

  ProblemTag tag() const { return tag_; }
  double norm_scale() const { return norm_scale_; }

  //! Combined generating function (tabulated, +inf outside its domain).
  double zeta(double lam) const {
    if (std::abs(lam) > zeta_tab_.back_x()) return kInf;
    // chi-type composites are non-even only through a linear term, which
    // the table stores explicitly for both signs via the split below.
    return lam >= 0.0 ? zeta_tab_(lam) : zeta_neg_tab_(-lam);
  }

  //! Conjugate of zeta at u >= 0 (only nonnegative u arises: the bound is
  //! evaluated at positive thresholds).
  double zeta_conjugate(double u) const {
    if (!(u >= 0.0))
      throw std::domain_error("zeta_conjugate: u must be >= 0");
    // zeta >= 0 with zeta(0) = 0, so negative lambda cannot beat lambda=0.
    return young_fenchel([this](double l) { return zeta_tab_(l); }, u, 0.0,
                         zeta_tab_.back_x());
  }

  //! Tail bound P(|mu| > u) for the normalized deviation mu.
  double bound_normalized(double u) const {
    if (!(u > 0.0))
      throw std::domain_error("bound_normalized: u must be positive");
    return std::min(2.0, 2.0 * std::exp(-zeta_conjugate(u / norm_scale_)));
  }

  //! Tail bound P(|rho-hat - rho| > t) at raw scale t, plugging rho into
  //! Theta.
  double bound(long n, int N, double rho_plug, double t) const {
    if (!(t > 0.0)) throw std::domain_error("bound: t must be positive");
    const double scale = std::sqrt(2.0) * theta(n, N, rho_plug);
    return bound_normalized(t / scale);
  }

 private:
  TailPipeline(ProblemTag tag, const PhiFn& phi, double norm_scale,
               int m_terms)
      : tag_(tag), norm_scale_(norm_scale) {
    if (m_terms < 1 || m_terms > 8)
      throw std::domain_error("TailPipeline: m_terms must lie in [1, 8]");
    const int pts = detail::kZetaTabSize;

    // Stage 1: sphere transform of phi on a coarse nonnegative grid.
    const double lam_top =
        std::min(phi.lambda0 * (1.0 - 1e-9), detail::kZetaLambdaCap);
    auto phibar_at = [&phi, m_terms](double l) {
      return l == 0.0 ? 0.0 : overline_phi(phi, l, m_terms);
    };
    std::vector<double> cl(pts), cv(pts);
    for (int i = 0; i < pts; ++i) {
      cl[static_cast<std::size_t>(i)] = lam_top * i / (pts - 1);
      cv[static_cast<std::size_t>(i)] =
          phibar_at(cl[static_cast<std::size_t>(i)]);
      if (!std::isfinite(cv[static_cast<std::size_t>(i)]))
        throw std::domain_error(
            "TailPipeline: sphere transform diverges inside the domain");
    }
    TabulatedFn phibar_tab(cl, cv);

    // Stage 2: tabulated conjugate of phibar.  The table only certifies
    // the conjugate up to the largest slope it has seen; the sharp
    // transform below treats everything past that as unknown (+inf wall).
    const double slope_top =
        (cv[static_cast<std::size_t>(pts - 1)] -
         cv[static_cast<std::size_t>(pts - 2)]) /
        (cl[static_cast<std::size_t>(pts - 1)] -
         cl[static_cast<std::size_t>(pts - 2)]);
    const double y_top = std::max(slope_top * 0.999, 1.0);
    std::vector<double> yj(257), yv(257);
    for (int i = 0; i < 257; ++i) {
      yj[static_cast<std::size_t>(i)] = y_top * i / 256.0;
      yv[static_cast<std::size_t>(i)] = young_fenchel(
          [&phibar_tab](double l) { return phibar_tab(l); },
          yj[static_cast<std::size_t>(i)], 0.0, phibar_tab.back_x());
    }
    TabulatedFn conj_tab(std::move(yj), std::move(yv));
    auto conj_fn = [&conj_tab](double y) {
      return y <= conj_tab.back_x() ? conj_tab(y) : kInf;
    };
    const double v_wall = conj_tab.back_x() * conj_tab.back_x();
    auto sharp_at = [&conj_fn, v_wall](double l) {
      return phi_sharp_from_conjugate(conj_fn, l, v_wall);
    };

    // Stage 3: locate the divergence cut of the sharp transform (it is
    // nondecreasing in |lambda|, so bisection applies).
    double cut = lam_top;
    if (!std::isfinite(sharp_at(lam_top))) {
      double lo = 0.0, hi = lam_top;
      for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        (std::isfinite(sharp_at(mid)) ? lo : hi) = mid;
      }
      cut = lo;
    }
    if (!(cut > 0.0))
      throw std::domain_error(
          "TailPipeline: combined generating function diverges immediately");

    // Stage 4: fine tables of the combined zeta on [0, cut], both signs.
    std::vector<double> lams(pts), zp(pts), zn(pts);
    for (int i = 0; i < pts; ++i) {
      const double l = cut * i / (pts - 1);
      lams[static_cast<std::size_t>(i)] = l;
      const double sharp = sharp_at(l);
      const double s = std::isfinite(sharp) ? sharp : kInf;
      const double beta_sq = 1.0;
      if (tag_ == ProblemTag::kSpectral) {
        zp[static_cast<std::size_t>(i)] = s + l * beta_sq;  // chi envelope
        zn[static_cast<std::size_t>(i)] = zp[static_cast<std::size_t>(i)];
      } else {
        const double pb = phibar_at(l);
        zp[static_cast<std::size_t>(i)] = std::max(s - l * beta_sq, pb);
        zn[static_cast<std::size_t>(i)] = std::max(s + l * beta_sq, pb);
      }
    }

    std::size_t keep = lams.size();
    for (std::size_t i = 0; i < lams.size(); ++i)
      if (!std::isfinite(zp[i])) {
        keep = i;
        break;
      }
    if (keep < 2)
      throw std::domain_error(
          "TailPipeline: combined generating function diverges immediately");
    lams.resize(keep);
    zp.resize(keep);
    zn.resize(keep);

    if (tag_ == ProblemTag::kSpectral) {
      // zeta_C = sphere transform of the chi envelope (even, so one table
      // serves both signs).
      TabulatedFn chi_env(lams, zp);
      PhiFn chi_fn{[&chi_env](double l) {
                     const double a = std::abs(l);
                     return a <= chi_env.back_x() ? chi_env(a) : kInf;
                   },
                   chi_env.back_x() * (1.0 + 1e-12)};
      std::vector<double> zc(keep);
      for (std::size_t i = 0; i < keep; ++i)
        zc[i] = i == 0 ? 0.0 : overline_phi(chi_fn, lams[i], m_terms);
      zp = zc;
      zn = std::move(zc);
    }

    zeta_tab_ = TabulatedFn(lams, zp);
    zeta_neg_tab_ = TabulatedFn(std::move(lams), std::move(zn));
  }

  ProblemTag tag_;
  double norm_scale_;
  TabulatedFn zeta_tab_;      // zeta on [0, lam_cut], lambda >= 0
  TabulatedFn zeta_neg_tab_;  // zeta(-lambda) on the same grid
};

//! One-call form of the pipeline bound.  delta_sq is Var(xi_1) for the
//! spectral problem and ignored otherwise; noise supplies the regression
//! noise generating function (unit-ball normalized).
inline double nonasymptotic_tail(ProblemTag tag, long n, int N,
                                 double rho_plug, double t, double delta_sq,
                                 const YoungOrliczPhi* noise = nullptr) {
  switch (tag) {
    case ProblemTag::kRegression: {
      if (!noise)
        throw std::domain_error(
            "nonasymptotic_tail: regression needs a noise generating "
            "function");
      return TailPipeline::regression(*noise).bound(n, N, rho_plug, t);
    }
    case ProblemTag::kDensity:
      return TailPipeline::density().bound(n, N, rho_plug, t);
    case ProblemTag::kSpectral:
      return TailPipeline::spectral(delta_sq).bound(n, N, rho_plug, t);
  }
  throw std::logic_error("unknown problem tag");
}

enum class UnionBoundKind { kGaussian, kBPhi };

//! Simultaneous statement over a cut-off range.
struct ConfidenceRegion {
  int a = 0;
  int b = 0;
  std::vector<double> thresholds;  //!< per-N thresholds in mu units
  double Q = 0.0;                  //!< union bound on the miss probability
  UnionBoundKind kind = UnionBoundKind::kGaussian;
};

//! Union bound Q = min(1, sum_N P(|mu(N)| > v(N))) over N in [a, b].
//! Thresholds are in units of the normalized deviation
//! mu = (rho-hat - rho)/(sqrt(2) Theta); the Gaussian flavor uses
//! mu ~ N(0, 1/2), the B(phi) flavor the pipeline bound.
inline ConfidenceRegion union_region(const RhoHatTrajectory& traj, int a,
                                     int b,
                                     const std::vector<double>& thresholds,
                                     UnionBoundKind kind,
                                     const TailPipeline* pipeline = nullptr) {
  if (traj.ns.empty()) throw std::domain_error("union_region: empty trajectory");
  if (a > b) throw std::domain_error("union_region: empty range");
  if (a < traj.ns.front() || b > traj.ns.back())
    throw std::domain_error("union_region: range outside trajectory domain");
  const std::size_t count = static_cast<std::size_t>(b - a + 1);
  if (thresholds.size() != 1 && thresholds.size() != count)
    throw std::invalid_argument(
        "union_region: need one threshold or one per cut-off");
  if (kind == UnionBoundKind::kBPhi && !pipeline)
    throw std::invalid_argument("union_region: B(phi) flavor needs pipeline");
  ConfidenceRegion out;
  out.a = a;
  out.b = b;
  out.kind = kind;
  out.thresholds.resize(count);
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double v = thresholds.size() == 1 ? thresholds[0] : thresholds[i];
    if (!(v > 0.0))
      throw std::domain_error("union_region: thresholds must be positive");
    out.thresholds[i] = v;
    // mu ~ N(0, 1/2) under the Gaussian approximation, so
    // P(|mu| > v) = erfc(v).
    total += kind == UnionBoundKind::kGaussian
                 ? std::erfc(v)
                 : pipeline->bound_normalized(v);
  }
  out.Q = std::min(1.0, total);
  return out;
}

//! Tabulates the often-quoted comparison "2 exp(-nu*(t)) <= sqrt(t)
//! e^{-t/2}" for t >= 1, with nu* the conjugate of the chi-square
//! generating function.  With the closed form upsilon*(t) =
//! t/2 - ln(1+t)/2 the left side is 2 sqrt(1+t) e^{-t/2}, which exceeds
//! the right side everywhere; report-only, nothing is asserted.
struct NuStarComparison {
  double t = 0.0;
  double lhs = 0.0;  //!< 2 exp(-upsilon*(t))
  double rhs = 0.0;  //!< sqrt(t) e^{-t/2}
  bool printed_inequality_holds = false;
};

inline NuStarComparison nu_star_comparison(double t) {
  if (!(t >= 1.0))
    throw std::domain_error("nu_star_comparison: stated for t >= 1");
  NuStarComparison out;
  out.t = t;
  out.lhs = 2.0 * std::exp(-upsilon_conjugate(t));
  out.rhs = std::sqrt(t) * std::exp(-0.5 * t);
  out.printed_inequality_holds = out.lhs <= out.rhs;
  return out;
}

}  // namespace smoothcal
