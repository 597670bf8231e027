#include <catch2/catch_amalgamated.hpp>

#include <smoothcal/fit.hpp>

#include <cmath>
#include <stdexcept>
#include <variant>
#include <vector>

using namespace smoothcal;

namespace {

RhoHatTrajectory traj_from_model(const RhoModel& m, int count, long n = 10000) {
    RhoHatTrajectory t;
    t.tag = ProblemTag::kDensity;
    t.n = n;
    for (int N = 1; N <= count; ++N) {
        t.ns.push_back(N);
        t.values.push_back(eval_rho_model(m, N));
    }
    return t;
}

double rss_of(const RhoModel& m, const RhoHatTrajectory& t) {
    double z = 0.0;
    for (std::size_t i = 0; i < t.ns.size(); ++i) {
        double r = eval_rho_model(m, t.ns[i]) - t.values[i];
        z += r * r;
    }
    return z;
}

}  // namespace

TEST_CASE("log-linear initializer recovers a clean power tail", "[fit]") {
    auto traj = traj_from_model(QuasiPower{2.0, 1.5, 0.5}, 32);
    auto init = loglin_init_power(traj);
    REQUIRE(init.points_used == 32);
    REQUIRE(init.c3 == Catch::Approx(std::log(2.0)).margin(1e-8));
    REQUIRE(init.alpha1 == Catch::Approx(1.5).margin(1e-8));
    REQUIRE(init.gamma1 == Catch::Approx(0.5).margin(1e-8));
    RhoModel back = QuasiPower{std::exp(init.c3), init.alpha1, init.gamma1};
    REQUIRE(rss_of(back, traj) < 1e-10);
}

TEST_CASE("log-linear initializer recovers a clean geometric tail", "[fit]") {
    auto traj = traj_from_model(QuasiExp{1.0, 1.0, 0.5}, 24);
    auto init = loglin_init_exp(traj);
    REQUIRE(init.ln_c2 == Catch::Approx(0.0).margin(1e-8));
    REQUIRE(init.kappa == Catch::Approx(1.0).margin(1e-8));
    REQUIRE(init.ln_q == Catch::Approx(std::log(0.5)).margin(1e-8));
    REQUIRE_FALSE(init.model_mismatch);
}

TEST_CASE("geometric initializer flags growth it cannot produce", "[fit]") {
    RhoHatTrajectory t;
    t.tag = ProblemTag::kDensity;
    t.n = 1000;
    for (int N = 1; N <= 12; ++N) {
        t.ns.push_back(N);
        t.values.push_back(std::pow(2.0, N));
    }
    auto init = loglin_init_exp(t);
    REQUIRE(init.ln_q == Catch::Approx(std::log(2.0)).margin(1e-8));
    REQUIRE(init.model_mismatch);

    // pure power decay: the N-coefficient sits at rounding level either side
    auto power = loglin_init_exp(traj_from_model(QuasiPower{1.0, 2.0, 0.0}, 20));
    REQUIRE(std::abs(power.ln_q) < 1e-10);
    REQUIRE(power.model_mismatch == !(power.ln_q < 0.0));
}

TEST_CASE("initializers need nine positive points", "[fit]") {
    auto short_traj = traj_from_model(QuasiPower{1.0, 1.0, 0.0}, 8);
    REQUIRE_THROWS_AS(loglin_init_power(short_traj), std::domain_error);
    REQUIRE_THROWS_AS(loglin_init_exp(short_traj), std::domain_error);

    auto t = traj_from_model(QuasiPower{1.0, 1.0, 0.0}, 13);
    for (std::size_t i = 0; i < 4; ++i) t.values[i] = -0.01;  // dropped, 9 remain
    REQUIRE(loglin_init_power(t).points_used == 9);
    t.values[4] = 0.0;  // 8 remain
    REQUIRE_THROWS_AS(loglin_init_power(t), std::domain_error);
}

TEST_CASE("noiseless quasi-power fit is exact", "[fit]") {
    auto traj = traj_from_model(QuasiPower{2.0, 1.5, 0.5}, 64);
    auto res = fit_quasi_power(traj);
    const auto& m = std::get<QuasiPower>(res.model);
    REQUIRE(m.c1 == Catch::Approx(2.0).margin(1e-6));
    REQUIRE(m.alpha == Catch::Approx(1.5).margin(1e-6));
    REQUIRE(m.gamma == Catch::Approx(0.5).margin(1e-6));
    REQUIRE(res.rss < 1e-12);
    REQUIRE(res.converged);
    REQUIRE_FALSE(res.at_boundary);
    REQUIRE(res.grad_norm <= 1e-10);
    REQUIRE(res.init_params[1] == Catch::Approx(1.5).margin(1e-6));
}

TEST_CASE("noiseless quasi-exponential fit is exact", "[fit]") {
    auto traj = traj_from_model(QuasiExp{1.0, 1.0, 0.5}, 32);
    auto res = fit_quasi_exp(traj);
    const auto& m = std::get<QuasiExp>(res.model);
    REQUIRE(m.c2 == Catch::Approx(1.0).margin(1e-6));
    REQUIRE(m.kappa == Catch::Approx(1.0).margin(1e-6));
    REQUIRE(m.q == Catch::Approx(0.5).margin(1e-6));
    REQUIRE(res.rss < 1e-12);
    REQUIRE(res.converged);
}

TEST_CASE("negative log-power exponent lands on the gamma boundary", "[fit]") {
    RhoHatTrajectory t;
    t.tag = ProblemTag::kDensity;
    t.n = 1000;
    for (int N = 1; N <= 24; ++N) {
        t.ns.push_back(N);
        t.values.push_back(std::pow(N, -1.2) * std::pow(std::log(N + 1.0), -0.3));
    }
    auto res = fit_quasi_power(t);
    REQUIRE(res.at_boundary);
    REQUIRE(std::get<QuasiPower>(res.model).gamma == 0.0);
    REQUIRE(res.rss > 0.0);  // pinned model cannot match the shrinking log factor
}

TEST_CASE("constant trajectory degenerates gracefully", "[fit]") {
    RhoHatTrajectory t;
    t.tag = ProblemTag::kDensity;
    t.n = 1000;
    for (int N = 1; N <= 16; ++N) {
        t.ns.push_back(N);
        t.values.push_back(0.5);
    }
    FitResult res;
    REQUIRE_NOTHROW(res = fit_quasi_power(t));
    REQUIRE(res.rss <= 2e-5);
    const auto& m = std::get<QuasiPower>(res.model);
    REQUIRE((m.alpha <= 0.01 || !res.converged));
}

TEST_CASE("fit never ends above its starting misfit", "[fit]") {
    auto traj = traj_from_model(QuasiPower{1.5, 1.1, 0.2}, 40);
    for (std::size_t i = 0; i < traj.values.size(); ++i)
        traj.values[i] *= 1.0 + 0.01 * std::sin(2.3 * static_cast<double>(i + 1));
    auto res = fit_quasi_power(traj);
    REQUIRE_FALSE(res.at_boundary);
    RhoModel init = QuasiPower{std::exp(res.init_params[0]),
                               std::max(res.init_params[1], 1e-3),
                               std::max(res.init_params[2], 0.0)};
    REQUIRE(res.rss <= rss_of(init, traj) + 1e-12);
}

TEST_CASE("inverse variance-proxy weights", "[fit]") {
    RhoHatTrajectory t;
    t.tag = ProblemTag::kDensity;
    t.n = 10000;
    t.ns = {1, 2, 3, 4, 5};
    t.values = {0.1, -0.2, 0.3, 0.0, 0.5};
    auto w = inverse_theta_sq_weights(t);
    REQUIRE(w.size() == 5);
    const double n = 10000.0;
    for (std::size_t i = 0; i < 5; ++i) {
        double th_sq = 4.0 * std::max(t.values[i], 0.0) / n + 9.0 * t.ns[i] / (n * n);
        REQUIRE(w[i] == Catch::Approx(1.0 / th_sq).epsilon(1e-12));
    }

    auto traj = traj_from_model(QuasiPower{2.0, 1.5, 0.5}, 64);
    auto weights = inverse_theta_sq_weights(traj);
    auto res = fit_quasi_power(traj, &weights);
    REQUIRE(res.converged);
    REQUIRE(std::get<QuasiPower>(res.model).alpha == Catch::Approx(1.5).margin(1e-6));

    std::vector<double> bad(3, 1.0);
    REQUIRE_THROWS_AS(fit_quasi_power(traj, &bad), std::invalid_argument);
}
