#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "smoothcal/estimate.hpp"
#include "smoothcal/rho_model.hpp"

namespace smoothcal {

//! Intercept/slope triple from the log-linearized quasi-power regression
//! ln rho = c3 - alpha1 ln N + gamma1 ln ln(N+1).  The quasi-power
//! initializer is (exp(c3), alpha1, gamma1).
struct PowerInit {
  double c3 = 0.0;
  double alpha1 = 0.0;
  double gamma1 = 0.0;
  int points_used = 0;
};

//! Triple from ln rho = ln_c2 + kappa ln N + ln_q N.  A nonnegative ln_q
//! cannot come from a quasi-exponential tail; flagged, not thrown.
struct ExpInit {
  double ln_c2 = 0.0;
  double kappa = 0.0;
  double ln_q = 0.0;
  int points_used = 0;
  bool model_mismatch = false;
};

namespace detail {

// Least squares of ln(rho_hat) on three regressors; nonpositive entries
// cannot be logged and are dropped first.
inline Eigen::Vector3d loglin_solve(
    const RhoHatTrajectory& traj,
    const std::function<void(double, Eigen::Vector3d&)>& regressors,
    int* points_used) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < traj.ns.size(); ++i)
    if (traj.values[i] > 0.0)
      pts.emplace_back(static_cast<double>(traj.ns[i]),
                       std::log(traj.values[i]));
  if (pts.size() < 9)
    throw std::domain_error(
        "loglin_init: needs at least 9 trajectory points with positive "
        "rho-hat, got " + std::to_string(pts.size()));
  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  Eigen::Vector3d x;
  for (const auto& [N, ly] : pts) {
    regressors(N, x);
    A += x * x.transpose();
    b += x * ly;
  }
  Eigen::FullPivLU<Eigen::Matrix3d> lu(A);
  if (!lu.isInvertible())
    throw std::domain_error(
        "loglin_init: singular normal matrix (rank-deficient design)");
  if (points_used) *points_used = static_cast<int>(pts.size());
  return lu.solve(b);
}

}  // namespace detail

inline PowerInit loglin_init_power(const RhoHatTrajectory& traj) {
  PowerInit out;
  const Eigen::Vector3d beta = detail::loglin_solve(
      traj,
      [](double N, Eigen::Vector3d& x) {
        x << 1.0, -std::log(N), std::log(std::log(N + 1.0));
      },
      &out.points_used);
  out.c3 = beta[0];
  out.alpha1 = beta[1];
  out.gamma1 = beta[2];
  return out;
}

inline ExpInit loglin_init_exp(const RhoHatTrajectory& traj) {
  ExpInit out;
  const Eigen::Vector3d beta = detail::loglin_solve(
      traj,
      [](double N, Eigen::Vector3d& x) { x << 1.0, std::log(N), N; },
      &out.points_used);
  out.ln_c2 = beta[0];
  out.kappa = beta[1];
  out.ln_q = beta[2];
  out.model_mismatch = !(out.ln_q < 0.0);
  return out;
}

//! Outcome of the nonlinear least-squares fit.  converged is tied to the
//! gradient criterion alone; a step-size stall ends the iteration but does
//! not claim convergence.
struct FitResult {
  RhoModel model = QuasiPower{};
  double rss = 0.0;
  int iterations = 0;
  bool converged = false;
  bool at_boundary = false;  //!< gamma pinned at 0 after a boundary refit
  double grad_norm = 0.0;
  double init_params[3] = {0.0, 0.0, 0.0};  //!< log-linear starting triple
};

namespace detail {

inline constexpr int kFitMaxIter = 200;
inline constexpr double kFitGradTol = 1e-10;
inline constexpr double kFitStepTol = 1e-14;

// Gauss-Newton with backtracking on an unconstrained parameterization.
// model_fn fills value and per-parameter derivatives at one N.
struct GaussNewtonProblem {
  std::function<void(const Eigen::VectorXd&, double, double&,
                     Eigen::VectorXd&)>
      model_fn;
  int dim = 0;
};

struct GaussNewtonOutcome {
  Eigen::VectorXd params;
  double rss = 0.0;
  int iterations = 0;
  bool converged = false;
  double grad_norm = 0.0;
};

inline GaussNewtonOutcome gauss_newton(const GaussNewtonProblem& prob,
                                       const RhoHatTrajectory& traj,
                                       const std::vector<double>* weights,
                                       Eigen::VectorXd start) {
  const std::size_t npts = traj.ns.size();
  if (weights && weights->size() != npts)
    throw std::invalid_argument("fit: weight vector length mismatch");
  auto wt = [&](std::size_t i) { return weights ? (*weights)[i] : 1.0; };

  auto rss_at = [&](const Eigen::VectorXd& p) {
    double z = 0.0;
    Eigen::VectorXd dummy(prob.dim);
    for (std::size_t i = 0; i < npts; ++i) {
      double m;
      prob.model_fn(p, static_cast<double>(traj.ns[i]), m, dummy);
      const double r = m - traj.values[i];
      z += wt(i) * r * r;
    }
    return std::isfinite(z) ? z : kInf;
  };

  GaussNewtonOutcome out;
  out.params = std::move(start);
  out.rss = rss_at(out.params);
  Eigen::VectorXd grad(prob.dim), delta(prob.dim), deriv(prob.dim);
  Eigen::MatrixXd JtJ(prob.dim, prob.dim);
  for (int it = 0; it < kFitMaxIter; ++it) {
    out.iterations = it;
    JtJ.setZero();
    grad.setZero();
    for (std::size_t i = 0; i < npts; ++i) {
      double m;
      prob.model_fn(out.params, static_cast<double>(traj.ns[i]), m, deriv);
      const double r = m - traj.values[i];
      const double w = wt(i);
      JtJ += w * deriv * deriv.transpose();
      grad += w * r * deriv;
    }
    out.grad_norm = grad.lpNorm<Eigen::Infinity>();
    if (out.grad_norm <= kFitGradTol) {
      out.converged = true;
      return out;
    }
    // Tiny ridge keeps the solve defined when columns collapse (e.g. the
    // alpha -> 0 degenerate direction).
    JtJ.diagonal().array() += 1e-12 * (1.0 + JtJ.diagonal().maxCoeff());
    delta = JtJ.ldlt().solve(-grad);
    double t = 1.0;
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      const Eigen::VectorXd cand = out.params + t * delta;
      const double z = rss_at(cand);
      if (z < out.rss) {
        out.params = cand;
        out.rss = z;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted || t * delta.lpNorm<Eigen::Infinity>() <= kFitStepTol) {
      out.converged = out.grad_norm <= kFitGradTol;
      return out;
    }
  }
  out.iterations = kFitMaxIter;
  return out;
}

}  // namespace detail

//! Least squares of the quasi-power model against a raw rho-hat
//! trajectory.  Parameters stay in bounds through c1 = e^u, alpha = e^a,
//! gamma = e^g - 1; a negative gamma at the optimum triggers a refit with
//! gamma pinned at 0 (the model requires gamma >= 0).
inline FitResult fit_quasi_power(const RhoHatTrajectory& traj,
                                 const std::vector<double>* weights =
                                     nullptr) {
  const PowerInit init = loglin_init_power(traj);
  FitResult res;
  res.init_params[0] = init.c3;
  res.init_params[1] = init.alpha1;
  res.init_params[2] = init.gamma1;

  detail::GaussNewtonProblem prob;
  prob.dim = 3;
  prob.model_fn = [](const Eigen::VectorXd& p, double N, double& m,
                     Eigen::VectorXd& d) {
    const double c1 = std::exp(p[0]);
    const double alpha = std::exp(p[1]);
    const double gamma = std::expm1(p[2]);
    const double L = std::log(N + 1.0);
    m = c1 * std::pow(N, -alpha) * std::pow(L, gamma);
    d[0] = m;
    d[1] = -m * alpha * std::log(N);
    d[2] = m * std::log(L) * (gamma + 1.0);
  };

  Eigen::VectorXd start(3);
  start << init.c3, std::log(std::max(init.alpha1, 1e-3)),
      std::log(1.0 + std::max(init.gamma1, -0.9));
  detail::GaussNewtonOutcome gn =
      detail::gauss_newton(prob, traj, weights, start);

  double gamma = std::expm1(gn.params[2]);
  if (gamma < 0.0) {
    // Boundary refit: gamma = 0, two free parameters.
    detail::GaussNewtonProblem bprob;
    bprob.dim = 2;
    bprob.model_fn = [](const Eigen::VectorXd& p, double N, double& m,
                        Eigen::VectorXd& d) {
      const double alpha = std::exp(p[1]);
      m = std::exp(p[0]) * std::pow(N, -alpha);
      d[0] = m;
      d[1] = -m * alpha * std::log(N);
    };
    Eigen::VectorXd bstart(2);
    bstart << gn.params[0], gn.params[1];
    detail::GaussNewtonOutcome bgn =
        detail::gauss_newton(bprob, traj, weights, bstart);
    res.model = QuasiPower{std::exp(bgn.params[0]), std::exp(bgn.params[1]),
                           0.0};
    res.rss = bgn.rss;
    res.iterations = gn.iterations + bgn.iterations;
    res.converged = bgn.converged;
    res.at_boundary = true;
    res.grad_norm = bgn.grad_norm;
    return res;
  }

  res.model =
      QuasiPower{std::exp(gn.params[0]), std::exp(gn.params[1]), gamma};
  res.rss = gn.rss;
  res.iterations = gn.iterations;
  res.converged = gn.converged;
  res.grad_norm = gn.grad_norm;
  return res;
}

//! Least squares of the quasi-exponential model, c2 = e^u and
//! q = 1/(1+e^{-s}) keeping both in bounds.
inline FitResult fit_quasi_exp(const RhoHatTrajectory& traj,
                               const std::vector<double>* weights = nullptr) {
  const ExpInit init = loglin_init_exp(traj);
  FitResult res;
  res.init_params[0] = init.ln_c2;
  res.init_params[1] = init.kappa;
  res.init_params[2] = init.ln_q;

  detail::GaussNewtonProblem prob;
  prob.dim = 3;
  prob.model_fn = [](const Eigen::VectorXd& p, double N, double& m,
                     Eigen::VectorXd& d) {
    const double q = 1.0 / (1.0 + std::exp(-p[2]));
    m = std::exp(p[0]) * std::pow(N, p[1]) * std::pow(q, N);
    d[0] = m;
    d[1] = m * std::log(N);
    d[2] = m * N * (1.0 - q);
  };

  const double q0 =
      std::clamp(std::exp(std::min(init.ln_q, -1e-12)), 1e-6, 1.0 - 1e-6);
  Eigen::VectorXd start(3);
  start << init.ln_c2, init.kappa, std::log(q0 / (1.0 - q0));
  detail::GaussNewtonOutcome gn =
      detail::gauss_newton(prob, traj, weights, start);

  res.model = QuasiExp{std::exp(gn.params[0]), gn.params[1],
                       1.0 / (1.0 + std::exp(-gn.params[2]))};
  res.rss = gn.rss;
  res.iterations = gn.iterations;
  res.converged = gn.converged;
  res.grad_norm = gn.grad_norm;
  return res;
}

//! Optional fit weights 1/theta^2 with the clamped rho-hat plugged in.
inline std::vector<double> inverse_theta_sq_weights(
    const RhoHatTrajectory& traj) {
  const double dn = static_cast<double>(traj.n);
  std::vector<double> w(traj.ns.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double th_sq = 4.0 * std::max(traj.values[i], 0.0) / dn +
                         9.0 * traj.ns[i] / (dn * dn);
    w[i] = 1.0 / th_sq;
  }
  return w;
}

}  // namespace smoothcal
