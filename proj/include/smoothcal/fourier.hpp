#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "smoothcal/numerics.hpp"
#include "smoothcal/rho_model.hpp"

namespace smoothcal {

inline constexpr double kSqrt2 = 1.41421356237309504880;

//! k-th element of the orthonormal trigonometric system on [0,1]:
//! index 1 is the constant, even indices are cosines, odd indices sines.
inline double eval_basis(int k, double x) {
  if (k < 1) throw std::domain_error("eval_basis: index must be >= 1");
  if (!(x >= 0.0 && x <= 1.0))
    throw std::domain_error("eval_basis: x must lie in [0,1]");
  if (k == 1) return 1.0;
  if (k % 2 == 0) {
    const int l = k / 2;
    return kSqrt2 * std::cos(kTwoPi * l * x);
  }
  const int l = (k - 1) / 2;
  return kSqrt2 * std::sin(kTwoPi * l * x);
}

//! Finite coefficient vector c_1..c_K, optionally extended past K by a
//! parametric tail-energy model so exact tail sums exist at every cut-off.
struct CoefficientModel {
  std::vector<double> coeffs;           // coeffs[i] is c_{i+1}
  std::optional<RhoModel> tail_model;

  std::size_t size() const { return coeffs.size(); }

  //! 1-based coefficient access; indices past K read as zero.
  double coeff(std::size_t k) const {
    if (k == 0) throw std::domain_error("coeff: index must be >= 1");
    return k <= coeffs.size() ? coeffs[k - 1] : 0.0;
  }

  //! Pointwise value of f = sum_k c_k phi_k.
  double evaluate(double x) const {
    double s = 0.0;
    for (std::size_t k = 1; k <= coeffs.size(); ++k)
      s += coeffs[k - 1] * eval_basis(static_cast<int>(k), x);
    return s;
  }
};

//! Tail energy rho(N) = sum_{k > N} c_k^2.  The stored coefficients cover
//! k <= K; beyond K the attached model (if any) supplies the remainder.
inline double rho_tail(const CoefficientModel& m, int N) {
  if (N < 0) throw std::domain_error("rho_tail: N must be >= 0");
  const std::size_t K = m.coeffs.size();
  double s = 0.0, comp = 0.0;
  for (std::size_t k = K; k > static_cast<std::size_t>(N); --k) {
    const double term = m.coeffs[k - 1] * m.coeffs[k - 1];
    const double y = term - comp;
    const double t = s + y;
    comp = (t - s) - y;
    s = t;
  }
  if (m.tail_model) {
    const double at = static_cast<double>(
        std::max<std::size_t>(static_cast<std::size_t>(std::max(N, 0)),
                              std::max<std::size_t>(K, 1)));
    s += eval_rho_model(*m.tail_model, at);
  }
  return s;
}

enum class SignPattern { kPlus, kAlternating };

//! Build coefficients whose tail energies reproduce `model` exactly:
//! c_k^2 = rho(k-1) - rho(k) for k >= 2, with c_1 supplied by the caller
//! (the increment rho(0)-rho(1) is not determined by the model).  The
//! returned CoefficientModel carries `model` as its tail so rho_tail is
//! exact at every N, not just N < K.
inline CoefficientModel coefficients_from_rho(const RhoModel& model,
                                              std::size_t K, double c1,
                                              SignPattern sign =
                                                  SignPattern::kPlus) {
  if (K < 1)
    throw std::invalid_argument("coefficients_from_rho: K must be >= 1");
  if (!std::isfinite(c1))
    throw std::domain_error("coefficients_from_rho: c1 must be finite");
  validate(model);
  CoefficientModel out;
  out.coeffs.resize(K);
  out.coeffs[0] = c1;
  for (std::size_t k = 2; k <= K; ++k) {
    const double hi = eval_rho_model(model, static_cast<double>(k - 1));
    const double lo = eval_rho_model(model, static_cast<double>(k));
    const double mass = hi - lo;
    if (mass < -1e-15 * std::max(hi, 1.0))
      throw std::domain_error(
          "coefficients_from_rho: tail model is not nonincreasing");
    double c = std::sqrt(std::max(mass, 0.0));
    if (sign == SignPattern::kAlternating && k % 2 == 0) c = -c;
    out.coeffs[k - 1] = c;
  }
  out.tail_model = model;
  return out;
}

//! Function sampled on the uniform closed grid x_i = i/(m-1), i = 0..m-1,
//! evaluated elsewhere by linear interpolation.
class GridFunction {
 public:
  explicit GridFunction(std::vector<double> samples)
      : samples_(std::move(samples)) {
    if (samples_.size() < 2)
      throw std::invalid_argument("GridFunction: need >= 2 samples");
    for (double v : samples_)
      if (!std::isfinite(v))
        throw std::invalid_argument("GridFunction: non-finite sample");
  }

  std::size_t size() const { return samples_.size(); }
  const std::vector<double>& samples() const { return samples_; }

  double operator()(double x) const {
    if (!(x >= 0.0 && x <= 1.0))
      throw std::domain_error("GridFunction: x must lie in [0,1]");
    const double pos = x * (samples_.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo >= samples_.size() - 1) lo = samples_.size() - 2;
    const double t = pos - lo;
    return samples_[lo] + t * (samples_[lo + 1] - samples_[lo]);
  }

 private:
  std::vector<double> samples_;
};

namespace detail {
inline constexpr int kProjectionPanels = 4096;  // 2^12, exact for trig
                                                // polynomials well past any
                                                // supported cut-off
}

//! L2 projection coefficients c_k = int_0^1 f(x) phi_k(x) dx for k <= K,
//! computed by composite Simpson quadrature.
inline CoefficientModel project_coefficients(
    const std::function<double(double)>& f, std::size_t K) {
  if (K < 1) throw std::invalid_argument("project_coefficients: K >= 1");
  CoefficientModel out;
  out.coeffs.resize(K);
  // Sample f once; reuse across all K basis functions.
  const int M = detail::kProjectionPanels;
  std::vector<double> fx(M + 1);
  for (int i = 0; i <= M; ++i) {
    fx[i] = f(static_cast<double>(i) / M);
    if (!std::isfinite(fx[i]))
      throw std::runtime_error("project_coefficients: non-finite integrand");
  }
  const double h = 1.0 / M;
  for (std::size_t k = 1; k <= K; ++k) {
    double sum = 0.0, comp = 0.0;
    auto add = [&](double term) {
      const double y = term - comp;
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    };
    add(fx[0] * eval_basis(static_cast<int>(k), 0.0));
    add(fx[M] * eval_basis(static_cast<int>(k), 1.0));
    for (int i = 1; i < M; ++i) {
      const double w = (i % 2 == 1) ? 4.0 : 2.0;
      add(w * fx[i] * eval_basis(static_cast<int>(k), i * h));
    }
    out.coeffs[k - 1] = sum * h / 3.0;
  }
  return out;
}

inline CoefficientModel project_coefficients(const GridFunction& g,
                                             std::size_t K) {
  return project_coefficients([&g](double x) { return g(x); }, K);
}

//! Table of tail energies rho(N) for N = first_n .. first_n + size - 1.
class SmoothnessProfile {
 public:
  SmoothnessProfile(std::vector<double> values, int first_n)
      : values_(std::move(values)), first_n_(first_n) {
    if (values_.empty())
      throw std::invalid_argument("SmoothnessProfile: empty");
    if (first_n_ < 0)
      throw std::invalid_argument("SmoothnessProfile: first index < 0");
    for (double v : values_)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument(
            "SmoothnessProfile: tail energies must be finite and >= 0");
  }

  int min_n() const { return first_n_; }
  int max_n() const {
    return first_n_ + static_cast<int>(values_.size()) - 1;
  }
  bool contains(int N) const { return N >= min_n() && N <= max_n(); }

  double at(int N) const {
    if (!contains(N))
      throw std::domain_error("SmoothnessProfile: index outside table");
    return values_[static_cast<std::size_t>(N - first_n_)];
  }

 private:
  std::vector<double> values_;
  int first_n_;
};

inline SmoothnessProfile profile_of(const CoefficientModel& m, int N_max) {
  if (N_max < 0) throw std::invalid_argument("profile_of: N_max < 0");
  std::vector<double> v(static_cast<std::size_t>(N_max) + 1);
  for (int N = 0; N <= N_max; ++N) v[static_cast<std::size_t>(N)] =
      rho_tail(m, N);
  return SmoothnessProfile(std::move(v), 0);
}

inline SmoothnessProfile profile_of(const RhoModel& model, int N_max) {
  if (N_max < 1) throw std::invalid_argument("profile_of: N_max < 1");
  std::vector<double> v(static_cast<std::size_t>(N_max));
  for (int N = 1; N <= N_max; ++N)
    v[static_cast<std::size_t>(N - 1)] = eval_rho_model(model, N);
  return SmoothnessProfile(std::move(v), 1);
}

//! Mean integrated squared error of the projection estimate with cut-off N
//! at sample size n: the variance term N/n plus the bias term rho(N).
inline double risk_A(long n, int N, double rho) {
  if (n < 1) throw std::domain_error("risk_A: n must be >= 1");
  if (N < 1 || N > n) throw std::domain_error("risk_A: need 1 <= N <= n");
  if (!(rho >= 0.0) || !std::isfinite(rho))
    throw std::domain_error("risk_A: rho must be finite and >= 0");
  return static_cast<double>(N) / static_cast<double>(n) + rho;
}

//! Oracle cut-off: the smallest minimiser of A(n, N) over 1 <= N <= n.
inline int optimal_N(long n, const SmoothnessProfile& profile) {
  if (n < 1) throw std::domain_error("optimal_N: n must be >= 1");
  const int hi = std::min<long>(n, profile.max_n());
  if (profile.min_n() > 1 || hi < 1)
    throw std::domain_error("optimal_N: profile must cover N = 1..n");
  int best_n = 1;
  double best = risk_A(n, 1, profile.at(1));
  for (int N = 2; N <= hi; ++N) {
    const double a = risk_A(n, N, profile.at(N));
    if (a < best) {
      best = a;
      best_n = N;
    }
  }
  return best_n;
}

struct NikolskiiBound {
  double value = 0.0;   //!< partial sum of 2^(l+1/2) sqrt(rho(2^l))
  bool converged = false;
  int levels_used = 0;
};

//! Uniform-norm bound sum_l 2^(l+1/2) sqrt(rho(2^l)) for the zero-mean part
//! of the expansion, truncated at dyadic level L_max.  `converged` reports
//! whether the last level's contribution is negligible against the total.
inline NikolskiiBound nikolskii_bound(const SmoothnessProfile& profile,
                                      int L_max) {
  if (L_max < 0) throw std::invalid_argument("nikolskii_bound: L_max < 0");
  NikolskiiBound out;
  double last = 0.0;
  for (int l = 0; l <= L_max; ++l) {
    const long dyadic = 1L << l;
    if (dyadic > profile.max_n())
      throw std::domain_error("nikolskii_bound: profile too short");
    last = std::pow(2.0, l + 0.5) * std::sqrt(profile.at(
        static_cast<int>(dyadic)));
    out.value += last;
    out.levels_used = l + 1;
  }
  out.converged = out.value > 0.0
                      ? (last <= 1e-10 * out.value)
                      : true;
  return out;
}

}  // namespace smoothcal
