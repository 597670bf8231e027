#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <variant>

#include "smoothcal/numerics.hpp"

namespace smoothcal {

//! Tail-energy model c1 * N^(-alpha) * ln(N+1)^gamma.
struct QuasiPower {
  double c1 = 1.0;
  double alpha = 1.0;
  double gamma = 0.0;
};

//! Tail-energy model c2 * N^kappa * q^N with 0 < q < 1.
struct QuasiExp {
  double c2 = 1.0;
  double kappa = 0.0;
  double q = 0.5;
};

using RhoModel = std::variant<QuasiPower, QuasiExp>;

inline void validate(const QuasiPower& m) {
  if (!(m.c1 > 0.0) || !std::isfinite(m.c1))
    throw std::domain_error("QuasiPower: c1 must be positive");
  if (!(m.alpha > 0.0) || !std::isfinite(m.alpha))
    throw std::domain_error("QuasiPower: alpha must be positive");
  if (!(m.gamma >= 0.0) || !std::isfinite(m.gamma))
    throw std::domain_error("QuasiPower: gamma must be >= 0");
}

inline void validate(const QuasiExp& m) {
  if (!(m.c2 > 0.0) || !std::isfinite(m.c2))
    throw std::domain_error("QuasiExp: c2 must be positive");
  if (!std::isfinite(m.kappa))
    throw std::domain_error("QuasiExp: kappa must be finite");
  if (!(m.q > 0.0) || !(m.q < 1.0))
    throw std::domain_error("QuasiExp: q must lie in (0,1)");
}

inline void validate(const RhoModel& m) {
  std::visit([](const auto& v) { validate(v); }, m);
}

//! Evaluate the modelled tail energy at index N >= 1.
inline double eval_rho_model(const RhoModel& model, double N) {
  if (!(N >= 1.0))
    throw std::domain_error("eval_rho_model: N must be >= 1");
  validate(model);
  if (const auto* p = std::get_if<QuasiPower>(&model)) {
    return p->c1 * std::pow(N, -p->alpha) *
           std::pow(std::log(N + 1.0), p->gamma);
  }
  const auto& e = std::get<QuasiExp>(model);
  return e.c2 * std::pow(N, e.kappa) * std::pow(e.q, N);
}

//! Result of scanning sup_N rho(2N)/rho(N).
struct GammaCheck {
  double gamma_sup = 0.0;  //!< largest observed ratio over N in [2, N_max]
  int arg_n = 0;           //!< N attaining it
  bool satisfied = false;  //!< gamma_sup < 1
};

//! Scan rho(2N)/rho(N) for N = 2..N_max.  The ratio measures how fast the
//! tail energy halves when the cut-off doubles; adaptive selection needs it
//! bounded away from 1.  Requires rho > 0 over the scanned range: a zero
//! tail energy means the signal is a finite trigonometric polynomial, for
//! which the selection problem is trivial and the check does not apply.
inline GammaCheck check_gamma_condition(
    const std::function<double(int)>& rho, int N_max) {
  if (N_max < 2)
    throw std::invalid_argument("check_gamma_condition: N_max must be >= 2");
  GammaCheck out;
  out.gamma_sup = -kInf;
  for (int N = 2; N <= N_max; ++N) {
    const double num = rho(2 * N);
    const double den = rho(N);
    if (!(num > 0.0) || !(den > 0.0))
      throw std::domain_error(
          "check_gamma_condition: tail energy must stay positive "
          "(finite trigonometric polynomial?)");
    const double ratio = num / den;
    if (ratio > out.gamma_sup) {
      out.gamma_sup = ratio;
      out.arg_n = N;
    }
  }
  out.satisfied = out.gamma_sup < 1.0;
  return out;
}

inline GammaCheck check_gamma_condition(const RhoModel& model, int N_max) {
  return check_gamma_condition(
      [&model](int N) { return eval_rho_model(model, N); }, N_max);
}

}  // namespace smoothcal
