#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "smoothcal/fourier.hpp"
#include "smoothcal/simulate.hpp"

namespace smoothcal {

//! Empirical Fourier coefficients c-hat_1..c-hat_K.  For the spectral
//! problem slot k holds the lag-(k-1) product sum, the natural empirical
//! analogue under the covariance identity r(0) = sqrt(2) c_1, r(h) = c_{2h}.
struct EmpiricalCoefficients {
  ProblemTag tag = ProblemTag::kRegression;
  std::size_t n = 0;             //!< sample size behind the estimates
  std::vector<double> values;    //!< values[i] is c-hat_{i+1}

  std::size_t K() const { return values.size(); }

  double at(std::size_t k) const {
    if (k < 1 || k > values.size())
      throw std::domain_error("EmpiricalCoefficients: index out of range");
    return values[k - 1];
  }
};

//! Empirical coefficients for a data set.
//!   regression: c-hat_k = n^-1 sum_i y_i phi_k(i/n)
//!   density:    c-hat_k = n^-1 sum_i phi_k(xi_i)
//!   spectral:   c-hat_{k+1} = n^-1 sum_{i=1}^{n-k} xi_i xi_{i+k}, lags
//!               k = 0..K-1 (hence K <= n-1)
inline EmpiricalCoefficients empirical_coeffs(const DataSet& data,
                                              std::size_t K) {
  const std::size_t n = data.n();
  const std::size_t max_K = data.tag == ProblemTag::kSpectral ? n - 1 : n;
  if (K < 1 || K > max_K)
    throw std::domain_error("empirical_coeffs: K out of range");
  EmpiricalCoefficients out;
  out.tag = data.tag;
  out.n = n;
  out.values.assign(K, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  switch (data.tag) {
    case ProblemTag::kRegression:
      for (std::size_t k = 1; k <= K; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          s += data.values[i] *
               eval_basis(static_cast<int>(k), data.design_x(i));
        out.values[k - 1] = s * inv_n;
      }
      break;
    case ProblemTag::kDensity:
      for (std::size_t k = 1; k <= K; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          s += eval_basis(static_cast<int>(k), data.values[i]);
        out.values[k - 1] = s * inv_n;
      }
      break;
    case ProblemTag::kSpectral:
      for (std::size_t lag = 0; lag < K; ++lag) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i)
          s += data.values[i] * data.values[i + lag];
        out.values[lag] = s * inv_n;
      }
      break;
  }
  return out;
}

//! Projection estimate: keep the first N empirical coefficients.
inline CoefficientModel projection_estimate(
    const EmpiricalCoefficients& coeffs, std::size_t N) {
  if (N < 1 || N > coeffs.K())
    throw std::domain_error("projection_estimate: N out of range");
  CoefficientModel out;
  out.coeffs.assign(coeffs.values.begin(),
                    coeffs.values.begin() + static_cast<long>(N));
  return out;
}

//! tau_N = sum_{j=N+1}^{2N} c-hat_j^2, the observable surrogate for the
//! tail energy over one octave.
inline double tau_stat(const EmpiricalCoefficients& coeffs, std::size_t N) {
  if (N < 1 || 2 * N > coeffs.K())
    throw std::domain_error("tau_stat: need 1 <= N and 2N <= K");
  double s = 0.0;
  for (std::size_t j = N + 1; j <= 2 * N; ++j)
    s += coeffs.values[j - 1] * coeffs.values[j - 1];
  return s;
}

//! Data-driven truncation: smallest argmin of tau_N over 1 <= N <= K/2.
inline std::size_t select_N(const EmpiricalCoefficients& coeffs) {
  if (coeffs.K() < 2) throw std::domain_error("select_N: K must be >= 2");
  const std::size_t hi = coeffs.K() / 2;
  std::size_t best_n = 1;
  double best = tau_stat(coeffs, 1);
  for (std::size_t N = 2; N <= hi; ++N) {
    const double t = tau_stat(coeffs, N);
    if (t < best) {
      best = t;
      best_n = N;
    }
  }
  return best_n;
}

//! Adaptive projection estimate at the data-driven truncation.
inline CoefficientModel adaptive_estimate(
    const EmpiricalCoefficients& coeffs) {
  return projection_estimate(coeffs, select_N(coeffs));
}

//! Raw tail-energy estimate tau_N - N/n.  May be negative; inference
//! formulas use the raw value, reports clamp it.
inline double rho_hat(const EmpiricalCoefficients& coeffs, std::size_t N) {
  return tau_stat(coeffs, N) -
         static_cast<double>(N) / static_cast<double>(coeffs.n);
}

inline double rho_hat_clamped(const EmpiricalCoefficients& coeffs,
                              std::size_t N) {
  return std::max(rho_hat(coeffs, N), 0.0);
}

//! rho-hat over its full domain N = 1..floor(K/2).
struct RhoHatTrajectory {
  ProblemTag tag = ProblemTag::kRegression;
  std::size_t n = 0;
  std::vector<int> ns;          //!< strictly increasing cut-offs
  std::vector<double> values;   //!< raw rho-hat, aligned with ns

  std::size_t size() const { return ns.size(); }
};

inline RhoHatTrajectory make_trajectory(const EmpiricalCoefficients& coeffs) {
  if (coeffs.K() < 2)
    throw std::domain_error("make_trajectory: K must be >= 2");
  RhoHatTrajectory out;
  out.tag = coeffs.tag;
  out.n = coeffs.n;
  const std::size_t hi = coeffs.K() / 2;
  out.ns.reserve(hi);
  out.values.reserve(hi);
  for (std::size_t N = 1; N <= hi; ++N) {
    out.ns.push_back(static_cast<int>(N));
    out.values.push_back(rho_hat(coeffs, N));
  }
  return out;
}

//! Noise scale sigma entering the asymptotic theory, one convention per
//! problem: the regression noise standard deviation, exactly 1 for the
//! density problem, and sqrt(2 c_1^2 + sum_{k>=2} c_k^2) for the spectral
//! problem (the constant term enters twice through r(0) = sqrt(2) c_1).
inline double sigma_for_problem(ProblemTag tag, const NoiseSpec* noise,
                                const CoefficientModel* model) {
  switch (tag) {
    case ProblemTag::kRegression:
      if (!noise)
        throw std::domain_error("sigma_for_problem: regression needs noise");
      return noise->sigma;
    case ProblemTag::kDensity:
      return 1.0;
    case ProblemTag::kSpectral: {
      if (!model)
        throw std::domain_error("sigma_for_problem: spectral needs model");
      const double c1 = model->coeff(1);
      return std::sqrt(2.0 * c1 * c1 + rho_tail(*model, 1));
    }
  }
  throw std::logic_error("unknown problem tag");
}

}  // namespace smoothcal
