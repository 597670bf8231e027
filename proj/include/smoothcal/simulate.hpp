#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "smoothcal/fourier.hpp"
#include "smoothcal/rng.hpp"

namespace smoothcal {

enum class ProblemTag { kRegression, kDensity, kSpectral };

inline std::string to_string(ProblemTag t) {
  switch (t) {
    case ProblemTag::kRegression: return "regression";
    case ProblemTag::kDensity: return "density";
    case ProblemTag::kSpectral: return "spectral";
  }
  throw std::logic_error("unknown problem tag");
}

enum class NoiseKind { kGaussian, kRademacher, kUniformCentered };

//! Centered measurement-noise family; every kind has variance sigma^2 and
//! the gaussian/rademacher/uniform kinds are all subgaussian with the same
//! quadratic generating function.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::kGaussian;
  double sigma = 1.0;
};

inline double draw_noise(const NoiseSpec& spec, RngStream& rng) {
  if (!(spec.sigma >= 0.0) || !std::isfinite(spec.sigma))
    throw std::domain_error("NoiseSpec: sigma must be finite and >= 0");
  switch (spec.kind) {
    case NoiseKind::kGaussian: return spec.sigma * rng.normal();
    case NoiseKind::kRademacher: return spec.sigma * rng.rademacher();
    case NoiseKind::kUniformCentered: return rng.centered_uniform(spec.sigma);
  }
  throw std::logic_error("unknown noise kind");
}

//! One simulated data set.  For the regression problem the design is the
//! uniform grid x_i = i/n, i = 1..n; for the density problem the values are
//! the i.i.d. draws; for the spectral problem they are one path of the
//! stationary sequence.
struct DataSet {
  ProblemTag tag = ProblemTag::kRegression;
  std::vector<double> values;

  std::size_t n() const { return values.size(); }
  //! Regression design point for 0-based observation index i.
  double design_x(std::size_t i) const {
    return static_cast<double>(i + 1) / static_cast<double>(values.size());
  }
};

//! y_i = f(i/n) + xi_i with i.i.d. noise.
inline DataSet gen_regression(const CoefficientModel& model, std::size_t n,
                              const NoiseSpec& noise, RngStream& rng) {
  if (n < 2) throw std::invalid_argument("gen_regression: n must be >= 2");
  DataSet out;
  out.tag = ProblemTag::kRegression;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.values[i] = model.evaluate(out.design_x(i)) + draw_noise(noise, rng);
  return out;
}

//! Variant taking precomputed signal values f(i/n); avoids re-evaluating
//! the trigonometric sum once per replication.
inline DataSet gen_regression(const std::vector<double>& signal,
                              const NoiseSpec& noise, RngStream& rng) {
  if (signal.size() < 2)
    throw std::invalid_argument("gen_regression: n must be >= 2");
  DataSet out;
  out.tag = ProblemTag::kRegression;
  out.values.resize(signal.size());
  for (std::size_t i = 0; i < signal.size(); ++i)
    out.values[i] = signal[i] + draw_noise(noise, rng);
  return out;
}

namespace detail {
inline constexpr int kDensityGridSize = 16384;  // 2^14 inverse-CDF grid
}

//! Inverse-CDF sampler for a density on [0,1] given by a coefficient model.
//! The CDF is a cumulative trapezoid rule on a fixed 2^14-point grid and
//! the inverse is interpolated linearly, so draws are reproducible to the
//! bit across platforms.
class DensitySampler {
 public:
  explicit DensitySampler(const CoefficientModel& model) {
    if (std::abs(model.coeff(1) - 1.0) > 1e-8)
      throw std::domain_error(
          "DensitySampler: c_1 must equal 1 (density integrates to 1)");
    const int m = detail::kDensityGridSize;
    std::vector<double> f(m + 1);
    for (int i = 0; i <= m; ++i) {
      const double x = static_cast<double>(i) / m;
      const double v = model.evaluate(x);
      if (v < -1e-9)
        throw std::domain_error(
            "DensitySampler: density is negative at x = " + std::to_string(x));
      f[i] = std::max(v, 0.0);
    }
    cdf_.resize(m + 1);
    cdf_[0] = 0.0;
    const double h = 1.0 / m;
    for (int i = 1; i <= m; ++i)
      cdf_[i] = cdf_[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
    const double total = cdf_.back();
    if (std::abs(total - 1.0) > 1e-6)
      throw std::domain_error(
          "DensitySampler: density integrates to " + std::to_string(total) +
          ", expected 1");
    for (double& c : cdf_) c /= total;
    cdf_.back() = 1.0;
  }

  //! Quantile transform of u in [0,1).
  double quantile(double u) const {
    const int m = detail::kDensityGridSize;
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    std::size_t hi = std::min<std::size_t>(it - cdf_.begin(), m);
    if (hi == 0) hi = 1;
    const std::size_t lo = hi - 1;
    const double span = cdf_[hi] - cdf_[lo];
    // Flat CDF cells (density zero there) carry no mass; u cannot land
    // strictly inside one, but guard the division anyway.
    const double t = span > 0.0 ? (u - cdf_[lo]) / span : 0.0;
    return (static_cast<double>(lo) + t) / m;
  }

  DataSet sample(std::size_t n, RngStream& rng) const {
    if (n < 2) throw std::invalid_argument("DensitySampler: n must be >= 2");
    DataSet out;
    out.tag = ProblemTag::kDensity;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      out.values[i] = quantile(rng.uniform01());
    return out;
  }

 private:
  std::vector<double> cdf_;
};

inline DataSet gen_density_sample(const CoefficientModel& model,
                                  std::size_t n, RngStream& rng) {
  return DensitySampler(model).sample(n, rng);
}

//! Autocovariance of the stationary sequence whose spectral density is the
//! model: r(h) = sqrt(2) * int_0^1 cos(2 pi h x) f(x) dx.  Closed form in
//! the coefficients: the cosine functional picks out c_{2h} (and sqrt(2)
//! c_1 at lag 0); sine coefficients contribute nothing.
inline double covariance_from_spectrum(const CoefficientModel& model,
                                       int h) {
  if (h < 0)
    throw std::domain_error("covariance_from_spectrum: lag must be >= 0");
  if (h == 0) return kSqrt2 * model.coeff(1);
  return model.coeff(2 * static_cast<std::size_t>(h));
}

namespace detail {
inline constexpr std::size_t kMaxToeplitzN = 4096;
}

//! Exact sampler for centered stationary Gaussian paths with autocovariance
//! r(h): dense Cholesky of the n-by-n Toeplitz covariance.  Factorization
//! cost is paid once; each path is one triangular multiply, so Monte Carlo
//! over many paths reuses the factor.
class ToeplitzCholesky {
 public:
  ToeplitzCholesky(const CoefficientModel& model, std::size_t n) : n_(n) {
    if (n < 2) throw std::invalid_argument("ToeplitzCholesky: n must be >= 2");
    if (n > detail::kMaxToeplitzN)
      throw std::invalid_argument(
          "ToeplitzCholesky: n exceeds the supported dense-solver size " +
          std::to_string(detail::kMaxToeplitzN));
    std::vector<double> r(n);
    for (std::size_t h = 0; h < n; ++h)
      r[h] = covariance_from_spectrum(model, static_cast<int>(h));
    Eigen::MatrixXd cov(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            r[i >= j ? i - j : j - i];
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw std::domain_error(
          "ToeplitzCholesky: covariance is not positive definite; the "
          "spectral density must be strictly positive");
    lower_ = llt.matrixL();
  }

  std::size_t n() const { return n_; }

  DataSet draw(RngStream& rng) const {
    Eigen::VectorXd z(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i)
      z(static_cast<Eigen::Index>(i)) = rng.normal();
    Eigen::VectorXd x = lower_ * z;
    DataSet out;
    out.tag = ProblemTag::kSpectral;
    out.values.assign(x.data(), x.data() + n_);
    return out;
  }

 private:
  std::size_t n_;
  Eigen::MatrixXd lower_;
};

inline DataSet gen_stationary_gaussian(const CoefficientModel& model,
                                       std::size_t n, RngStream& rng) {
  return ToeplitzCholesky(model, n).draw(rng);
}

}  // namespace smoothcal
