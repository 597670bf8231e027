#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "smoothcal/confidence.hpp"
#include "smoothcal/estimate.hpp"
#include "smoothcal/fit.hpp"
#include "smoothcal/fourier.hpp"
#include "smoothcal/io.hpp"
#include "smoothcal/rng.hpp"
#include "smoothcal/simulate.hpp"

namespace smoothcal {

namespace detail {

// The truth against which empirical coefficients are judged, in the
// estimator's own indexing: the model coefficients for regression and
// density, the autocovariance sequence r(k-1) for the spectral problem.
// Only materialized coefficients count — the simulators cannot realize a
// tail beyond them, so attaching it here would bias every comparison.
inline std::vector<double> estimator_truth(const CoefficientModel& model,
                                           ProblemTag tag, int K) {
  std::size_t len = model.size();
  if (tag == ProblemTag::kSpectral) len = model.size() / 2 + 1;
  len = std::max<std::size_t>(len, static_cast<std::size_t>(K));
  std::vector<double> c(len);
  for (std::size_t k = 1; k <= len; ++k)
    c[k - 1] = tag == ProblemTag::kSpectral
                   ? covariance_from_spectrum(model, static_cast<int>(k) - 1)
                   : model.coeff(k);
  return c;
}

// suffix[N] = sum_{k > N} c_k^2 for N = 0..len (suffix[len] = 0).
inline std::vector<double> suffix_energy(const std::vector<double>& c) {
  std::vector<double> s(c.size() + 1, 0.0);
  for (std::size_t k = c.size(); k > 0; --k)
    s[k - 1] = s[k] + c[k - 1] * c[k - 1];
  return s;
}

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// One dataset per replication, with per-problem precomputation hoisted out
// of the replication loop.
class DataFactory {
 public:
  DataFactory(const ExperimentConfig& cfg) : cfg_(cfg) {
    switch (cfg.problem) {
      case ProblemTag::kRegression:
        signal_.resize(static_cast<std::size_t>(cfg.n));
        for (std::size_t i = 0; i < signal_.size(); ++i)
          signal_[i] = cfg.model.evaluate(static_cast<double>(i + 1) /
                                          static_cast<double>(cfg.n));
        break;
      case ProblemTag::kDensity:
        sampler_.emplace(cfg.model);
        break;
      case ProblemTag::kSpectral:
        chol_.emplace(cfg.model, static_cast<std::size_t>(cfg.n));
        break;
    }
  }

  DataSet make(RngStream& rng) const {
    switch (cfg_.problem) {
      case ProblemTag::kRegression:
        return gen_regression(signal_, cfg_.noise, rng);
      case ProblemTag::kDensity:
        return sampler_->sample(static_cast<std::size_t>(cfg_.n), rng);
      case ProblemTag::kSpectral:
        return chol_->draw(rng);
    }
    throw std::logic_error("unknown problem tag");
  }

 private:
  const ExperimentConfig& cfg_;
  std::vector<double> signal_;
  std::optional<DensitySampler> sampler_;
  std::optional<ToeplitzCholesky> chol_;
};

}  // namespace detail

struct ReplicationRow {
  int replication = 0;
  int N = 0;
  double tau = 0.0;
  double rho_hat_raw = 0.0;
  double rho_hat_clamped = 0.0;
  double rho_true = 0.0;
  double theta = 0.0;  //!< plug-in theta(n, N, clamped rho-hat)
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool covered = false;
};

struct SummaryRow {
  int N = 0;
  double mise_mc = 0.0;     //!< Monte Carlo mean integrated squared error
  double risk_a = 0.0;      //!< N/n + rho(N)
  double mise_ratio = 0.0;  //!< mise_mc / risk_a
  double n_tilde_median = 0.0;
  int n_star = 0;
};

struct SimulateResult {
  std::vector<ReplicationRow> rows;      //!< sorted by (replication, N)
  std::vector<SummaryRow> summary;       //!< one row per N in the range
};

//! Seeded replication study: per-replication tail-energy estimates with
//! confidence intervals, plus a summary comparing the Monte Carlo risk to
//! N/n + rho(N) and the adaptive cut-off to the risk minimizer.
//! write_files=false computes everything but touches no disk (tests).
inline SimulateResult run_simulate(const ExperimentConfig& cfg,
                                   bool write_files = true) {
  const auto truth = detail::estimator_truth(cfg.model, cfg.problem, cfg.K);
  const auto suffix = detail::suffix_energy(truth);
  auto rho_true = [&suffix](int N) {
    return static_cast<std::size_t>(N) < suffix.size()
               ? suffix[static_cast<std::size_t>(N)]
               : 0.0;
  };

  detail::DataFactory factory(cfg);
  const int n_count = cfg.n_hi - cfg.n_lo + 1;
  SimulateResult res;
  res.rows.reserve(static_cast<std::size_t>(cfg.replications) *
                   static_cast<std::size_t>(n_count));
  std::vector<double> mise_acc(static_cast<std::size_t>(n_count), 0.0);
  std::vector<double> n_tildes;
  n_tildes.reserve(static_cast<std::size_t>(cfg.replications));

  for (int rep = 0; rep < cfg.replications; ++rep) {
    RngStream rng(cfg.seed, static_cast<std::uint64_t>(rep));
    const DataSet data = factory.make(rng);
    const EmpiricalCoefficients co =
        empirical_coeffs(data, static_cast<std::size_t>(cfg.K));
    n_tildes.push_back(static_cast<double>(select_N(co)));
    // Squared coefficient errors accumulate once per replication; the
    // integrated squared error at cut-off N follows by Parseval.
    double head = 0.0;
    std::vector<double> head_at(static_cast<std::size_t>(cfg.n_hi) + 1, 0.0);
    for (int k = 1; k <= cfg.n_hi; ++k) {
      const double d = co.at(static_cast<std::size_t>(k)) -
                       truth[static_cast<std::size_t>(k - 1)];
      head += d * d;
      head_at[static_cast<std::size_t>(k)] = head;
    }
    for (int N = cfg.n_lo; N <= cfg.n_hi; ++N) {
      ReplicationRow row;
      row.replication = rep;
      row.N = N;
      row.tau = tau_stat(co, static_cast<std::size_t>(N));
      row.rho_hat_raw = row.tau - static_cast<double>(N) /
                                      static_cast<double>(cfg.n);
      row.rho_hat_clamped = std::max(row.rho_hat_raw, 0.0);
      row.rho_true = rho_true(N);
      row.theta = theta(cfg.n, N, row.rho_hat_clamped);
      const ConfidenceInterval ci = asymptotic_ci(row.rho_hat_raw, cfg.n, N,
                                                  cfg.alpha, cfg.ci_method);
      row.ci_lo = ci.lower;
      row.ci_hi = ci.upper;
      row.covered = ci.covers(row.rho_true);
      res.rows.push_back(row);
      mise_acc[static_cast<std::size_t>(N - cfg.n_lo)] +=
          head_at[static_cast<std::size_t>(N)] + row.rho_true;
    }
  }

  SmoothnessProfile profile(
      std::vector<double>(suffix.begin() + 1, suffix.end()), 1);
  const int n_star = optimal_N(cfg.n, profile);
  const double med = detail::median_of(n_tildes);
  res.summary.reserve(static_cast<std::size_t>(n_count));
  for (int N = cfg.n_lo; N <= cfg.n_hi; ++N) {
    SummaryRow s;
    s.N = N;
    s.mise_mc = mise_acc[static_cast<std::size_t>(N - cfg.n_lo)] /
                static_cast<double>(cfg.replications);
    s.risk_a = risk_A(cfg.n, N, rho_true(N));
    s.mise_ratio = s.mise_mc / s.risk_a;
    s.n_tilde_median = med;
    s.n_star = n_star;
    res.summary.push_back(s);
  }

  if (write_files) {
    CsvFile per_rep(cfg.output);
    per_rep.row({"replication", "N", "tau", "rho_hat_raw",
                 "rho_hat_clamped", "rho_true", "theta", "ci_lo", "ci_hi",
                 "covered"});
    for (const ReplicationRow& r : res.rows)
      per_rep.row({std::to_string(r.replication), std::to_string(r.N),
                   csv_num(r.tau), csv_num(r.rho_hat_raw),
                   csv_num(r.rho_hat_clamped), csv_num(r.rho_true),
                   csv_num(r.theta), csv_num(r.ci_lo), csv_num(r.ci_hi),
                   r.covered ? "1" : "0"});
    per_rep.close();

    CsvFile summary(cfg.summary_output);
    summary.row({"N", "mise_mc", "risk_a", "mise_ratio", "n_tilde_median",
                 "n_star"});
    for (const SummaryRow& s : res.summary)
      summary.row({std::to_string(s.N), csv_num(s.mise_mc),
                   csv_num(s.risk_a), csv_num(s.mise_ratio),
                   csv_num(s.n_tilde_median), std::to_string(s.n_star)});
    summary.close();
  }
  return res;
}

struct FitRunResult {
  FitResult fit;
  std::string family;
  TrajectoryFile input;            //!< averaged input trajectory
  std::vector<double> fitted;      //!< model values on the input N grid
};

//! Fit a tail-energy model to a trajectory CSV.  Writes the fit row to
//! out_path and the fitted curve alongside it ("_curve" suffix).
inline FitRunResult run_fit(const std::string& input_path,
                            const std::string& family,
                            const std::string& out_path,
                            bool write_files = true) {
  if (family != "quasi-power" && family != "quasi-exp")
    throw ConfigError("family", "expected 'quasi-power' or 'quasi-exp'");
  FitRunResult res;
  res.family = family;
  res.input = read_trajectory_csv(input_path);

  RhoHatTrajectory traj;
  traj.ns = res.input.ns;
  traj.values = res.input.values;
  res.fit = family == "quasi-power" ? fit_quasi_power(traj)
                                    : fit_quasi_exp(traj);

  res.fitted.resize(traj.ns.size());
  for (std::size_t i = 0; i < traj.ns.size(); ++i)
    res.fitted[i] = eval_rho_model(res.fit.model, traj.ns[i]);

  if (write_files) {
    CsvFile out(out_path);
    out.row({"family", "p1", "p2", "p3", "rss", "iterations", "converged",
             "at_boundary", "grad_norm", "init1", "init2", "init3",
             "points"});
    std::vector<std::string> cells{res.family};
    if (const auto* p = std::get_if<QuasiPower>(&res.fit.model)) {
      cells.push_back(csv_num(p->c1));
      cells.push_back(csv_num(p->alpha));
      cells.push_back(csv_num(p->gamma));
    } else {
      const auto& e = std::get<QuasiExp>(res.fit.model);
      cells.push_back(csv_num(e.c2));
      cells.push_back(csv_num(e.kappa));
      cells.push_back(csv_num(e.q));
    }
    cells.push_back(csv_num(res.fit.rss));
    cells.push_back(std::to_string(res.fit.iterations));
    cells.push_back(res.fit.converged ? "1" : "0");
    cells.push_back(res.fit.at_boundary ? "1" : "0");
    cells.push_back(csv_num(res.fit.grad_norm));
    for (double ip : res.fit.init_params) cells.push_back(csv_num(ip));
    cells.push_back(std::to_string(res.input.ns.size()));
    out.row(cells);
    out.close();

    CsvFile curve(detail::with_suffix(out_path, "_curve"));
    curve.row({"N", "rho_hat_mean", "rho_fit"});
    for (std::size_t i = 0; i < res.input.ns.size(); ++i)
      curve.row({std::to_string(res.input.ns[i]),
                 csv_num(res.input.values[i]), csv_num(res.fitted[i])});
    curve.close();
  }
  return res;
}

struct TailcheckRow {
  double t = 0.0;
  double empirical_tail = 0.0;
  double gaussian_bound = 0.0;
  double bphi_bound = 0.0;
  double nu_star_lhs = 0.0;  //!< 2 exp(-upsilon*(t)), t >= 1 only
  double nu_star_rhs = 0.0;  //!< sqrt(t) exp(-t/2), t >= 1 only
  bool nu_star_applicable = false;
};

struct TailcheckResult {
  int N = 0;
  double rho_true = 0.0;
  double theta_true = 0.0;
  std::vector<TailcheckRow> rows;
};

//! Monte Carlo tails of the normalized deviation mu at a single cut-off
//! (the low end of the configured range) against the Gaussian and
//! combined-generating-function bounds, plus the report-only comparison of
//! the printed sqrt(t) e^{-t/2} inequality.
inline TailcheckResult run_tailcheck(const ExperimentConfig& cfg,
                                     bool write_files = true) {
  const auto truth = detail::estimator_truth(cfg.model, cfg.problem, cfg.K);
  const auto suffix = detail::suffix_energy(truth);
  const int N = cfg.n_lo;
  TailcheckResult res;
  res.N = N;
  res.rho_true = suffix[static_cast<std::size_t>(N)];
  res.theta_true = theta(cfg.n, N, res.rho_true);
  const double scale = std::sqrt(2.0) * res.theta_true;

  TailPipeline pipeline = [&]() {
    switch (cfg.problem) {
      case ProblemTag::kRegression:
        return TailPipeline::regression(YoungOrliczPhi::quadratic());
      case ProblemTag::kDensity:
        return TailPipeline::density();
      case ProblemTag::kSpectral:
        return TailPipeline::spectral(covariance_from_spectrum(cfg.model, 0));
    }
    throw std::logic_error("unknown problem tag");
  }();

  detail::DataFactory factory(cfg);
  std::vector<double> abs_mu(static_cast<std::size_t>(cfg.replications));
  for (int rep = 0; rep < cfg.replications; ++rep) {
    RngStream rng(cfg.seed, static_cast<std::uint64_t>(rep));
    const DataSet data = factory.make(rng);
    const EmpiricalCoefficients co =
        empirical_coeffs(data, static_cast<std::size_t>(cfg.K));
    const double rho_raw = rho_hat(co, static_cast<std::size_t>(N));
    abs_mu[static_cast<std::size_t>(rep)] =
        std::abs(rho_raw - res.rho_true) / scale;
  }

  res.rows.reserve(cfg.t_grid.size());
  for (double t : cfg.t_grid) {
    TailcheckRow row;
    row.t = t;
    std::size_t above = 0;
    for (double m : abs_mu)
      if (m > t) ++above;
    row.empirical_tail =
        static_cast<double>(above) / static_cast<double>(cfg.replications);
    row.gaussian_bound = std::erfc(t);  // mu ~ N(0, 1/2) in the limit
    row.bphi_bound = pipeline.bound_normalized(t);
    if (t >= 1.0) {
      const NuStarComparison c = nu_star_comparison(t);
      row.nu_star_lhs = c.lhs;
      row.nu_star_rhs = c.rhs;
      row.nu_star_applicable = true;
    }
    res.rows.push_back(row);
  }

  if (write_files) {
    CsvFile out(cfg.output);
    out.row({"t", "empirical_tail", "gaussian_bound", "bphi_bound",
             "nu_star_lhs", "nu_star_rhs", "nu_star_flag"});
    for (const TailcheckRow& r : res.rows)
      out.row({csv_num(r.t), csv_num(r.empirical_tail),
               csv_num(r.gaussian_bound), csv_num(r.bphi_bound),
               r.nu_star_applicable ? csv_num(r.nu_star_lhs) : "",
               r.nu_star_applicable ? csv_num(r.nu_star_rhs) : "",
               r.nu_star_applicable ? "REPORT-ONLY" : ""});
    out.close();
  }
  return res;
}

}  // namespace smoothcal
