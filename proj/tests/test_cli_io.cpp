#include <catch2/catch_amalgamated.hpp>

#include <smoothcal/experiment.hpp>
#include <smoothcal/io.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

using namespace smoothcal;

namespace {

void expect_field(const std::string& text, const std::string& field) {
    try {
        parse_config_string(text);
        FAIL("expected ConfigError for field " << field);
    } catch (const ConfigError& e) {
        REQUIRE(e.field() == field);
    }
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kDensityBase = R"({
  "problem": "density", "n": 256, "N_range": [1, 4], "K": 8,
  "replications": 3, "seed": 11, "output": "cli_io_per.csv",
  "model": {"type": "coefficients", "values": [1.0, 0.5, 0.25, 0.125]}
})";

}  // namespace

TEST_CASE("config defaults", "[io]") {
    auto cfg = parse_config_string(R"({
      "problem": "density", "n": 200, "N_range": [2, 5], "output": "o.csv",
      "model": {"type": "coefficients", "values": [1.0, 0.5, 0.25]}
    })");
    REQUIRE(cfg.problem == ProblemTag::kDensity);
    REQUIRE(cfg.n == 200);
    REQUIRE(cfg.replications == 1);
    REQUIRE(cfg.seed == 1);
    REQUIRE(cfg.alpha == 0.95);
    REQUIRE(cfg.n_lo == 2);
    REQUIRE(cfg.n_hi == 5);
    REQUIRE(cfg.K == 10);  // 2 * N_range[1]
    REQUIRE(cfg.ci_method == CiMethod::kPlugIn);
    REQUIRE(cfg.summary_output == "o_summary.csv");
    REQUIRE(cfg.t_grid == std::vector<double>{0.5, 1.0, 1.5, 2.0, 2.5, 3.0});
    REQUIRE(cfg.model.coeffs == std::vector<double>{1.0, 0.5, 0.25});
}

TEST_CASE("config explicit fields", "[io]") {
    auto cfg = parse_config_string(R"({
      "problem": "regression", "n": 128, "N_range": [2, 8], "K": 16,
      "replications": 7, "seed": 99, "alpha": 0.9,
      "ci_method": "quadratic-solve",
      "noise": {"kind": "rademacher", "sigma": 0.25},
      "output": "x/run.csv", "summary_output": "x/sum.csv",
      "t_grid": [1.0, 2.0, 3.0],
      "model": {"type": "coefficients", "values": [0.5, 0.25]}
    })");
    REQUIRE(cfg.problem == ProblemTag::kRegression);
    REQUIRE(cfg.ci_method == CiMethod::kQuadraticSolve);
    REQUIRE(cfg.noise.kind == NoiseKind::kRademacher);
    REQUIRE(cfg.noise.sigma == 0.25);
    REQUIRE(cfg.summary_output == "x/sum.csv");
    REQUIRE(cfg.t_grid.size() == 3);
    REQUIRE(cfg.alpha == 0.9);
}

TEST_CASE("every config failure names its field", "[io]") {
    expect_field(R"({"problem":"density","N_range":[1,2],"output":"o",
        "model":{"type":"coefficients","values":[1.0]}})", "n");
    expect_field(R"({"problem":"density","n":3,"N_range":[1,1],"output":"o",
        "model":{"type":"coefficients","values":[1.0]}})", "n");
    expect_field(R"({"problem":"spectral","n":8192,"N_range":[1,2],"output":"o",
        "model":{"type":"coefficients","values":[1.0]}})", "n");
    expect_field(R"({"problem":"density","n":64,"N_range":[1,4],"K":4,"output":"o",
        "model":{"type":"coefficients","values":[1.0]}})", "K");
    expect_field(R"({"problem":"density","n":16,"N_range":[1,10],"output":"o",
        "model":{"type":"coefficients","values":[1.0]}})", "K");
    expect_field(R"({"problem":"spectral","n":16,"N_range":[1,8],"K":16,"output":"o",
        "model":{"type":"coefficients","values":[1.0]}})", "K");
    expect_field(R"({"problem":"density","n":64,"N_range":[1,2],"output":"o",
        "noise":{"sigma":1.0},
        "model":{"type":"coefficients","values":[1.0]}})", "noise");
    expect_field(R"({"problem":"density","n":64,"N_range":[1,2],"output":"o",
        "model":{"type":"coefficients","values":[0.5]}})", "model");
    expect_field(R"({"problem":"density","n":64,"N_range":[1,2],"output":"o",
        "model":{"type":"wavelet"}})", "model.type");
    expect_field(R"({"problem":"density","n":64,"N_range":[1,2],"output":"o","extra":1,
        "model":{"type":"coefficients","values":[1.0]}})", "extra");
    expect_field(R"({"problem":"density","n":64,"N_range":[1,2],"output":"o",
        "model":{"type":"coefficients","values":[1.0],"bogus":1}})", "model.bogus");
    expect_field(R"({"problem":"density","n":64,"N_range":[1,2],"output":"o",
        "model":{"type":"quasi-power","c1":1.0,"alpha":1.0,"sign":"minus"}})",
        "model.sign");
    expect_field(R"({"problem":"density","n":64,"N_range":[0,2],"output":"o",
        "model":{"type":"coefficients","values":[1.0]}})", "N_range");
    expect_field(R"({"problem":"density","n":64,"N_range":[5,2],"output":"o",
        "model":{"type":"coefficients","values":[1.0]}})", "N_range");
    expect_field(R"({"problem":"density","n":64,"N_range":[2],"output":"o",
        "model":{"type":"coefficients","values":[1.0]}})", "N_range");
    expect_field(R"({"problem":"density","n":64,"N_range":[1,2],"alpha":1.0,"output":"o",
        "model":{"type":"coefficients","values":[1.0]}})", "alpha");
    expect_field(R"({"problem":"density","n":64,"N_range":[1,2],"output":"o",
        "t_grid":[1.0,1.0],
        "model":{"type":"coefficients","values":[1.0]}})", "t_grid");
    expect_field(R"({"problem":"density","n":64,"N_range":[1,2],"output":"o",
        "t_grid":[-1.0],
        "model":{"type":"coefficients","values":[1.0]}})", "t_grid");
    expect_field(R"({"problem":"density","n":64,"N_range":[1,2],"replications":0,"output":"o",
        "model":{"type":"coefficients","values":[1.0]}})", "replications");
    expect_field(R"({"problem":"density","n":64,"N_range":[1,2],
        "model":{"type":"coefficients","values":[1.0]}})", "output");
    expect_field(R"({"problem":"density","n":64,"N_range":[1,2],"output":"",
        "model":{"type":"coefficients","values":[1.0]}})", "output");
    expect_field(R"({"problem":"regression","n":64,"N_range":[1,2],"output":"o",
        "noise":{"kind":"cauchy"},
        "model":{"type":"coefficients","values":[1.0]}})", "noise.kind");
    expect_field(R"({"problem":"regression","n":64,"N_range":[1,2],"output":"o",
        "noise":{"sigma":0.0},
        "model":{"type":"coefficients","values":[1.0]}})", "noise.sigma");
    expect_field(R"({"problem":"density","n":64,"N_range":[1,2],"output":"o",
        "ci_method":"bayes",
        "model":{"type":"coefficients","values":[1.0]}})", "ci_method");
    expect_field(R"({"problem":"density","n":64,"N_range":[1,2],"output":"o",
        "model":{"type":"quasi-exp","c2":1.0,"kappa":10.0,"q":0.9}})", "model");
    expect_field(R"({"problem":"density","n":64,"N_range":[1,2],"output":"o",
        "model":{"type":"coefficients","values":[]}})", "model.values");
    expect_field(R"({"problem":"density","n":64,"N_range":[1,2],"output":"o",
        "model":{"type":"quasi-power","c1":1.0,"alpha":1.0,"length":0}})",
        "model.length");
    expect_field(R"({"problem":"banana","n":64,"N_range":[1,2],"output":"o",
        "model":{"type":"coefficients","values":[1.0]}})", "problem");
    expect_field("{nope", "(document)");
}

TEST_CASE("model materialization from a tail law", "[io]") {
    auto cfg = parse_config_string(R"({
      "problem": "regression", "n": 256, "N_range": [1, 4], "K": 12, "output": "o",
      "model": {"type": "quasi-power", "c1": 1.0, "alpha": 1.5,
                "first_coeff": 0.7, "sign": "alternating", "length": 12}
    })");
    REQUIRE(cfg.model.size() == 12);
    REQUIRE(cfg.model.coeff(1) == 0.7);
    REQUIRE(cfg.model.tail_model.has_value());
    RhoModel law = QuasiPower{1.0, 1.5, 0.0};
    for (std::size_t k = 2; k <= 12; ++k) {
        double inc = eval_rho_model(law, static_cast<double>(k - 1)) -
                     eval_rho_model(law, static_cast<double>(k));
        REQUIRE(cfg.model.coeff(k) * cfg.model.coeff(k) ==
                Catch::Approx(inc).epsilon(1e-12));
        REQUIRE((cfg.model.coeff(k) < 0) == (k % 2 == 0));
    }
    REQUIRE(rho_tail(cfg.model, 3) ==
            Catch::Approx(eval_rho_model(law, 3.0)).epsilon(1e-12));

    // length defaults to K
    auto dflt = parse_config_string(R"({
      "problem": "regression", "n": 256, "N_range": [1, 4], "output": "o",
      "model": {"type": "quasi-power", "c1": 1.0, "alpha": 1.5}
    })");
    REQUIRE(dflt.model.size() == 8);
}

TEST_CASE("output path suffix insertion", "[io]") {
    REQUIRE(detail::with_suffix("out.csv", "_summary") == "out_summary.csv");
    REQUIRE(detail::with_suffix("noext", "_x") == "noext_x");
    REQUIRE(detail::with_suffix("dir.d/out", "_s") == "dir.d/out_s");
    REQUIRE(detail::with_suffix("a/b.c.csv", "_s") == "a/b.c_s.csv");
}

TEST_CASE("numeric formatting is locale-free shortest-ish", "[io]") {
    REQUIRE(csv_num(0.1) == "0.1");
    REQUIRE(csv_num(3.0) == "3");
    REQUIRE(csv_num(-0.5) == "-0.5");
    REQUIRE(csv_num(1e-7) == "1e-07");
    REQUIRE(csv_num(1.0 / 3.0) == "0.333333333333");
}

TEST_CASE("csv files start with the schema line and use LF", "[io]") {
    const std::string path = "cli_io_schema.csv";
    {
        CsvFile f(path);
        f.row({"a", "b"});
        f.row({"1", "2"});
        f.close();
    }
    const std::string text = slurp(path);
    REQUIRE(text == std::string(kCsvSchemaLine) + "\na,b\n1,2\n");
    REQUIRE(text.find('\r') == std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("trajectory csv reader", "[io]") {
    std::istringstream bare("N,rho_hat\n1,0.5\n2,0.25\n");
    auto t = read_trajectory_csv(bare);
    REQUIRE(t.ns == std::vector<int>{1, 2});
    REQUIRE(t.values == std::vector<double>{0.5, 0.25});

    // simulate-style column, replicated N rows averaged, sorted output
    std::istringstream sim(
        "# smoothcal-schema v1\nreplication,N,tau,rho_hat_raw\n"
        "0,5,0.3,0.2\n0,2,0.1,0.05\n\n1,5,0.3,0.4\n");
    auto s = read_trajectory_csv(sim);
    REQUIRE(s.ns == std::vector<int>{2, 5});
    REQUIRE(s.values[0] == Catch::Approx(0.05));
    REQUIRE(s.values[1] == Catch::Approx(0.3));

    auto field_of = [](const std::string& text) {
        std::istringstream in(text);
        try {
            read_trajectory_csv(in);
            return std::string("(no throw)");
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
    };
    REQUIRE(field_of("a,b\n1,2\n").find("header must contain") != std::string::npos);
    REQUIRE(field_of("N,rho_hat\n1,2,3\n").find("line 2") != std::string::npos);
    REQUIRE(field_of("N,rho_hat\n1.5,0.1\n").find("positive integer") != std::string::npos);
    REQUIRE(field_of("N,rho_hat\n2,zebra\n").find("bad rho_hat value") != std::string::npos);
    REQUIRE(field_of("").find("empty input") != std::string::npos);
    REQUIRE(field_of("N,rho_hat\n").find("no data rows") != std::string::npos);
    REQUIRE_THROWS_AS(read_trajectory_csv("does_not_exist_.csv"), IoError);
    REQUIRE_THROWS_AS(load_config("does_not_exist_.json"), IoError);
}

TEST_CASE("replication study: files, determinism, summary identities", "[io][mc]") {
    auto cfg = parse_config_string(kDensityBase);
    auto res = run_simulate(cfg, true);
    REQUIRE(res.rows.size() == 12);
    REQUIRE(res.summary.size() == 4);

    for (const auto& s : res.summary) {
        REQUIRE(s.risk_a == Catch::Approx(risk_A(256, s.N, rho_tail(cfg.model, s.N))));
        REQUIRE(s.mise_ratio == Catch::Approx(s.mise_mc / s.risk_a));
        REQUIRE(s.n_star == 4);
        REQUIRE(s.mise_mc > 0.0);
    }

    // per-replication file reads back as the averaged trajectory
    auto traj = read_trajectory_csv(cfg.output);
    REQUIRE(traj.ns == std::vector<int>{1, 2, 3, 4});
    for (int N = 1; N <= 4; ++N) {
        double mean = 0.0;
        int cnt = 0;
        for (const auto& r : res.rows)
            if (r.N == N) {
                mean += r.rho_hat_raw;
                ++cnt;
            }
        mean /= cnt;
        REQUIRE(traj.values[static_cast<std::size_t>(N - 1)] ==
                Catch::Approx(mean).margin(1e-9));
    }

    const std::string first = slurp(cfg.output);
    const std::string first_sum = slurp(cfg.summary_output);
    REQUIRE(first.rfind(kCsvSchemaLine, 0) == 0);
    REQUIRE(first_sum.find("N,mise_mc,risk_a,mise_ratio") != std::string::npos);

    // same seed, same bytes; new seed, new bytes
    run_simulate(cfg, true);
    REQUIRE(slurp(cfg.output) == first);
    auto cfg2 = cfg;
    cfg2.seed = 12;
    run_simulate(cfg2, true);
    REQUIRE(slurp(cfg.output) != first);

    std::remove(cfg.output.c_str());
    std::remove(cfg.summary_output.c_str());
}

TEST_CASE("replication study on a stationary path uses covariance truth", "[io][mc]") {
    auto cfg = parse_config_string(R"({
      "problem": "spectral", "n": 64, "N_range": [1, 4], "K": 8,
      "replications": 2, "seed": 5, "output": "unused.csv",
      "model": {"type": "coefficients", "values": [1.0, 0.3]}
    })");
    auto res = run_simulate(cfg, false);
    REQUIRE(res.rows.size() == 8);
    // truth sequence is (r(0), r(1), 0, ...) = (sqrt2, 0.3, 0, ...)
    for (const auto& r : res.rows) {
        if (r.N == 1) REQUIRE(r.rho_true == Catch::Approx(0.09).margin(1e-12));
        if (r.N >= 2) REQUIRE(r.rho_true == 0.0);
    }
}

TEST_CASE("fit runner round trip", "[io]") {
    const std::string in_path = "cli_io_traj.csv";
    const std::string out_path = "cli_io_fit.csv";
    {
        CsvFile f(in_path);
        f.row({"N", "rho_hat"});
        for (int N = 1; N <= 32; ++N)
            f.row({std::to_string(N),
                   csv_num(eval_rho_model(QuasiPower{2.0, 1.5, 0.5}, N))});
        f.close();
    }
    auto res = run_fit(in_path, "quasi-power", out_path, true);
    const auto& m = std::get<QuasiPower>(res.fit.model);
    REQUIRE(m.c1 == Catch::Approx(2.0).margin(1e-6));
    REQUIRE(m.alpha == Catch::Approx(1.5).margin(1e-6));
    REQUIRE(m.gamma == Catch::Approx(0.5).margin(1e-6));
    REQUIRE(res.fitted.size() == 32);
    REQUIRE(res.fitted[0] == Catch::Approx(res.input.values[0]).margin(1e-8));

    const std::string fit_text = slurp(out_path);
    REQUIRE(fit_text.find("family,p1,p2,p3,rss") != std::string::npos);
    REQUIRE(fit_text.find("quasi-power") != std::string::npos);
    const std::string curve_text = slurp(detail::with_suffix(out_path, "_curve"));
    REQUIRE(curve_text.find("N,rho_hat_mean,rho_fit") != std::string::npos);

    REQUIRE_THROWS_AS(run_fit(in_path, "spline", out_path, false), ConfigError);
    REQUIRE_THROWS_AS(run_fit("no_such_file.csv", "quasi-power", out_path, false),
                      IoError);

    std::remove(in_path.c_str());
    std::remove(out_path.c_str());
    std::remove(detail::with_suffix(out_path, "_curve").c_str());
}

TEST_CASE("tail check runner", "[io][mc]") {
    auto cfg = parse_config_string(R"({
      "problem": "density", "n": 512, "N_range": [2, 2], "K": 8,
      "replications": 200, "seed": 3, "output": "cli_io_tail.csv",
      "t_grid": [0.5, 1.5],
      "model": {"type": "coefficients", "values": [1.0, 0.5, 0.25, 0.125]}
    })");
    auto res = run_tailcheck(cfg, true);
    REQUIRE(res.N == 2);
    REQUIRE(res.rho_true == Catch::Approx(rho_tail(cfg.model, 2)));
    REQUIRE(res.theta_true == Catch::Approx(theta(512, 2, res.rho_true)));
    REQUIRE(res.rows.size() == 2);

    auto pipe = TailPipeline::density();
    for (const auto& row : res.rows) {
        REQUIRE(row.gaussian_bound == Catch::Approx(std::erfc(row.t)));
        REQUIRE(row.bphi_bound == Catch::Approx(pipe.bound_normalized(row.t)));
        REQUIRE(row.empirical_tail >= 0.0);
        REQUIRE(row.empirical_tail <= 1.0);
        double se = std::sqrt(std::max(row.empirical_tail * (1.0 - row.empirical_tail),
                                       1e-12) / 200.0);
        REQUIRE(row.empirical_tail <= row.bphi_bound + 3.0 * se);
    }
    REQUIRE_FALSE(res.rows[0].nu_star_applicable);
    REQUIRE(res.rows[1].nu_star_applicable);
    REQUIRE(res.rows[1].nu_star_lhs == Catch::Approx(nu_star_comparison(1.5).lhs));

    const std::string text = slurp(cfg.output);
    REQUIRE(text.find("t,empirical_tail,gaussian_bound,bphi_bound") != std::string::npos);
    REQUIRE(text.find("REPORT-ONLY") != std::string::npos);
    std::remove(cfg.output.c_str());
}
