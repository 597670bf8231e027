#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "smoothcal/fourier.hpp"
#include "smoothcal/rho_model.hpp"
#include "smoothcal/simulate.hpp"

namespace smoothcal {

//! Invalid user input (config or input-file contents).  Carries the field
//! or location for the message; mapped to exit code 2 by the CLI.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error("config field '" + field + "': " + what),
        field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

//! Filesystem failure; mapped to exit code 4 by the CLI.
class IoError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  ProblemTag problem = ProblemTag::kRegression;
  CoefficientModel model;
  long n = 0;
  int replications = 1;
  std::uint64_t seed = 1;
  double alpha = 0.95;
  int n_lo = 1;   //!< cut-off range, inclusive
  int n_hi = 1;
  int K = 0;      //!< number of empirical coefficients (default 2 * n_hi)
  CiMethod ci_method = CiMethod::kPlugIn;
  NoiseSpec noise{NoiseKind::kGaussian, 1.0};
  std::string output;
  std::string summary_output;  //!< derived from output when absent
  std::vector<double> t_grid{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
};

namespace detail {

inline std::string with_suffix(const std::string& path,
                               const std::string& suffix) {
  const std::size_t dot = path.find_last_of('.');
  const std::size_t slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + suffix;
  return path.substr(0, dot) + suffix + path.substr(dot);
}

inline const nlohmann::json& require_field(const nlohmann::json& j,
                                           const std::string& key) {
  if (!j.contains(key)) throw ConfigError(key, "missing required field");
  return j.at(key);
}

template <typename T>
inline T field_as(const nlohmann::json& j, const std::string& key) {
  try {
    return require_field(j, key).get<T>();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key, e.what());
  }
}

template <typename T>
inline T field_or(const nlohmann::json& j, const std::string& key, T dflt) {
  if (!j.contains(key)) return dflt;
  return field_as<T>(j, key);
}

inline void reject_unknown(const nlohmann::json& j,
                           std::initializer_list<const char*> known,
                           const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool found = false;
    for (const char* k : known)
      if (it.key() == k) {
        found = true;
        break;
      }
    if (!found)
      throw ConfigError(where.empty() ? it.key() : where + "." + it.key(),
                        "unknown field");
  }
}

inline CoefficientModel model_from_json(const nlohmann::json& m, int K) {
  const std::string type = field_as<std::string>(m, "type");
  if (type == "coefficients") {
    reject_unknown(m, {"type", "values"}, "model");
    auto values = field_as<std::vector<double>>(m, "values");
    if (values.empty())
      throw ConfigError("model.values", "needs at least one coefficient");
    try {
      return CoefficientModel{std::move(values), std::nullopt};
    } catch (const std::exception& e) {
      throw ConfigError("model.values", e.what());
    }
  }
  RhoModel rho;
  if (type == "quasi-power") {
    reject_unknown(m,
                   {"type", "c1", "alpha", "gamma", "first_coeff", "sign",
                    "length"},
                   "model");
    rho = QuasiPower{field_as<double>(m, "c1"), field_as<double>(m, "alpha"),
                     field_or<double>(m, "gamma", 0.0)};
  } else if (type == "quasi-exp") {
    reject_unknown(m, {"type", "c2", "kappa", "q", "first_coeff", "sign",
                       "length"},
                   "model");
    rho = QuasiExp{field_as<double>(m, "c2"), field_or<double>(m, "kappa", 0.0),
                   field_as<double>(m, "q")};
  } else {
    throw ConfigError("model.type",
                      "expected 'coefficients', 'quasi-power' or 'quasi-exp'");
  }
  const double c1 = field_or<double>(m, "first_coeff", 1.0);
  const std::string sign_s = field_or<std::string>(m, "sign", "plus");
  SignPattern sign;
  if (sign_s == "plus")
    sign = SignPattern::kPlus;
  else if (sign_s == "alternating")
    sign = SignPattern::kAlternating;
  else
    throw ConfigError("model.sign", "expected 'plus' or 'alternating'");
  const int length = field_or<int>(m, "length", K);
  if (length < 1) throw ConfigError("model.length", "must be >= 1");
  try {
    validate(rho);
    return coefficients_from_rho(rho, length, c1, sign);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("model", e.what());
  }
}

}  // namespace detail

//! Parse and validate a JSON experiment config.  Every failure names the
//! offending field.
inline ExperimentConfig parse_config(const nlohmann::json& j) {
  detail::reject_unknown(
      j,
      {"problem", "model", "n", "replications", "seed", "alpha", "N_range",
       "K", "ci_method", "noise", "output", "summary_output", "t_grid"},
      "");
  ExperimentConfig cfg;

  const std::string prob = detail::field_as<std::string>(j, "problem");
  if (prob == "regression")
    cfg.problem = ProblemTag::kRegression;
  else if (prob == "density")
    cfg.problem = ProblemTag::kDensity;
  else if (prob == "spectral")
    cfg.problem = ProblemTag::kSpectral;
  else
    throw ConfigError("problem",
                      "expected 'regression', 'density' or 'spectral'");

  cfg.n = detail::field_as<long>(j, "n");
  if (cfg.n < 4) throw ConfigError("n", "must be >= 4");
  if (cfg.problem == ProblemTag::kSpectral && cfg.n > 4096)
    throw ConfigError("n", "spectral paths support n <= 4096");

  cfg.replications = detail::field_or<int>(j, "replications", 1);
  if (cfg.replications < 1) throw ConfigError("replications", "must be >= 1");
  cfg.seed = detail::field_or<std::uint64_t>(j, "seed", 1);

  cfg.alpha = detail::field_or<double>(j, "alpha", 0.95);
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
    throw ConfigError("alpha", "must lie in (0,1)");

  const auto range = detail::field_as<std::vector<int>>(j, "N_range");
  if (range.size() != 2) throw ConfigError("N_range", "expected [lo, hi]");
  cfg.n_lo = range[0];
  cfg.n_hi = range[1];
  if (cfg.n_lo < 1 || cfg.n_hi < cfg.n_lo)
    throw ConfigError("N_range", "need 1 <= lo <= hi");

  cfg.K = detail::field_or<int>(j, "K", 2 * cfg.n_hi);
  if (cfg.K < 2 * cfg.n_hi)
    throw ConfigError("K", "cut-off range needs K >= 2 * N_range[1]");
  const long k_cap = cfg.problem == ProblemTag::kSpectral ? cfg.n - 1 : cfg.n;
  if (cfg.K > k_cap)
    throw ConfigError("K", "too many coefficients for this sample size");

  const std::string method =
      detail::field_or<std::string>(j, "ci_method", "plug-in");
  if (method == "plug-in")
    cfg.ci_method = CiMethod::kPlugIn;
  else if (method == "quadratic-solve")
    cfg.ci_method = CiMethod::kQuadraticSolve;
  else
    throw ConfigError("ci_method",
                      "expected 'plug-in' or 'quadratic-solve'");

  if (j.contains("noise")) {
    if (cfg.problem != ProblemTag::kRegression)
      throw ConfigError("noise", "only the regression problem takes noise");
    const auto& nj = j.at("noise");
    detail::reject_unknown(nj, {"kind", "sigma"}, "noise");
    const std::string kind =
        detail::field_or<std::string>(nj, "kind", "gaussian");
    if (kind == "gaussian")
      cfg.noise.kind = NoiseKind::kGaussian;
    else if (kind == "rademacher")
      cfg.noise.kind = NoiseKind::kRademacher;
    else if (kind == "uniform")
      cfg.noise.kind = NoiseKind::kUniformCentered;
    else
      throw ConfigError("noise.kind",
                        "expected 'gaussian', 'rademacher' or 'uniform'");
    cfg.noise.sigma = detail::field_or<double>(nj, "sigma", 1.0);
    if (!(cfg.noise.sigma > 0.0))
      throw ConfigError("noise.sigma", "must be positive");
  }

  cfg.output = detail::field_as<std::string>(j, "output");
  if (cfg.output.empty()) throw ConfigError("output", "must not be empty");
  cfg.summary_output = detail::field_or<std::string>(
      j, "summary_output", detail::with_suffix(cfg.output, "_summary"));

  if (j.contains("t_grid")) {
    cfg.t_grid = detail::field_as<std::vector<double>>(j, "t_grid");
    if (cfg.t_grid.empty()) throw ConfigError("t_grid", "must not be empty");
    for (std::size_t i = 0; i < cfg.t_grid.size(); ++i) {
      if (!(cfg.t_grid[i] > 0.0))
        throw ConfigError("t_grid", "thresholds must be positive");
      if (i > 0 && !(cfg.t_grid[i] > cfg.t_grid[i - 1]))
        throw ConfigError("t_grid", "thresholds must increase");
    }
  }

  cfg.model = detail::model_from_json(detail::require_field(j, "model"),
                                      cfg.K);
  if (cfg.problem == ProblemTag::kDensity &&
      std::abs(cfg.model.coeff(1) - 1.0) > 1e-8)
    throw ConfigError("model",
                      "a density integrates to 1, so c_1 must equal 1");
  // The estimator needs tau at N = n_hi, i.e. coefficients up to 2 n_hi.
  if (2 * cfg.n_hi > cfg.K)
    throw ConfigError("N_range", "upper end exceeds floor(K/2)");
  return cfg;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError("(document)", e.what());
  }
  return parse_config(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str());
}

// ---------------------------------------------------------------------
// CSV output (schema-versioned, LF endings, '.' decimal, %.12g numbers).
// ---------------------------------------------------------------------

inline constexpr const char* kCsvSchemaLine = "# smoothcal-schema v1";

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

class CsvFile {
 public:
  explicit CsvFile(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open output file: " + path);
    out_ << kCsvSchemaLine << '\n';
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
    if (!out_) throw IoError("write failure on CSV output");
  }

  void close() {
    out_.close();
    if (out_.fail()) throw IoError("close failure on CSV output");
  }

 private:
  std::ofstream out_;
};

// ---------------------------------------------------------------------
// Trajectory CSV input for the fit runner.  Accepts a bare "N,rho_hat"
// table or a simulate per-replication file (column "rho_hat_raw");
// replicated N values are averaged.
// ---------------------------------------------------------------------

struct TrajectoryFile {
  std::vector<int> ns;        //!< strictly increasing
  std::vector<double> values; //!< per-N mean of the rho-hat column
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double_field(const std::string& s, int line_no,
                                 const char* what) {
  double v;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ConfigError("(csv)", std::string("line ") + std::to_string(line_no) +
                                   ": bad " + what + " value '" + s + "'");
  return v;
}

}  // namespace detail

inline TrajectoryFile read_trajectory_csv(std::istream& in) {
  std::string line;
  int line_no = 0;
  int col_n = -1, col_rho = -1, ncols = 0;
  // map N -> (sum, count); N values are small, so a sorted vector is fine
  std::vector<int> ns;
  std::vector<double> sums;
  std::vector<int> counts;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto cells = detail::split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      ncols = static_cast<int>(cells.size());
      for (int i = 0; i < ncols; ++i) {
        const std::string& h = cells[static_cast<std::size_t>(i)];
        if (h == "N") col_n = i;
        if (h == "rho_hat" || h == "rho_hat_raw") col_rho = i;
      }
      if (col_n < 0 || col_rho < 0)
        throw ConfigError("(csv)",
                          "line " + std::to_string(line_no) +
                              ": header must contain columns N and rho_hat "
                              "(or rho_hat_raw)");
      continue;
    }
    if (static_cast<int>(cells.size()) != ncols)
      throw ConfigError("(csv)", "line " + std::to_string(line_no) +
                                     ": expected " + std::to_string(ncols) +
                                     " fields, got " +
                                     std::to_string(cells.size()));
    const double nd = detail::parse_double_field(
        cells[static_cast<std::size_t>(col_n)], line_no, "N");
    const int N = static_cast<int>(nd);
    if (N < 1 || nd != N)
      throw ConfigError("(csv)", "line " + std::to_string(line_no) +
                                     ": N must be a positive integer");
    const double rho = detail::parse_double_field(
        cells[static_cast<std::size_t>(col_rho)], line_no, "rho_hat");
    const auto it = std::lower_bound(ns.begin(), ns.end(), N);
    const std::size_t pos = static_cast<std::size_t>(it - ns.begin());
    if (it != ns.end() && *it == N) {
      sums[pos] += rho;
      counts[pos] += 1;
    } else {
      ns.insert(it, N);
      sums.insert(sums.begin() + static_cast<std::ptrdiff_t>(pos), rho);
      counts.insert(counts.begin() + static_cast<std::ptrdiff_t>(pos), 1);
    }
  }
  if (!header_seen) throw ConfigError("(csv)", "empty input: no header line");
  if (ns.empty()) throw ConfigError("(csv)", "no data rows after the header");
  TrajectoryFile out;
  out.ns = std::move(ns);
  out.values.resize(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i)
    out.values[i] = sums[i] / counts[i];
  return out;
}

inline TrajectoryFile read_trajectory_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open input file: " + path);
  return read_trajectory_csv(in);
}

}  // namespace smoothcal
