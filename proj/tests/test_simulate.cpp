#include <catch2/catch_amalgamated.hpp>

#include <smoothcal/fourier.hpp>
#include <smoothcal/rng.hpp>
#include <smoothcal/simulate.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace smoothcal;

namespace {

CoefficientModel make_model(std::vector<double> coeffs) {
    CoefficientModel m;
    m.coeffs = std::move(coeffs);
    return m;
}

}  // namespace

TEST_CASE("regression data: design, noiseless signal, determinism", "[simulate]") {
    auto m = make_model({1.0, 0.5});
    NoiseSpec quiet{NoiseKind::kGaussian, 0.0};
    RngStream rng(3, 0);
    auto d = gen_regression(m, 16, quiet, rng);
    REQUIRE(d.tag == ProblemTag::kRegression);
    REQUIRE(d.n() == 16);
    REQUIRE(d.design_x(0) == Catch::Approx(1.0 / 16.0));
    REQUIRE(d.design_x(15) == Catch::Approx(1.0));
    for (int i = 0; i < 16; ++i) {
        REQUIRE(d.values[i] == Catch::Approx(m.evaluate(d.design_x(i))));
    }

    NoiseSpec g{NoiseKind::kGaussian, 0.8};
    RngStream r1(11, 4), r2(11, 4);
    auto a = gen_regression(m, 64, g, r1);
    auto b = gen_regression(m, 64, g, r2);
    REQUIRE(a.values == b.values);
}

TEST_CASE("regression data: replication mean recovers the signal", "[simulate]") {
    auto m = make_model({1.0, 0.5});
    NoiseSpec g{NoiseKind::kGaussian, 0.8};
    const int n = 8, reps = 10000;
    RngStream rng(77, 0);
    std::vector<double> acc(n, 0.0);
    for (int r = 0; r < reps; ++r) {
        auto d = gen_regression(m, n, g, rng);
        for (int i = 0; i < n; ++i) acc[i] += d.values[i];
    }
    for (int i = 0; i < n; ++i) {
        double x = (i + 1.0) / n;
        REQUIRE(std::abs(acc[i] / reps - m.evaluate(x)) < 4.0 * 0.8 / std::sqrt(1.0 * reps));
    }
}

TEST_CASE("noise families match their first two moments", "[simulate]") {
    const int n = 100000;
    const double sigma = 1.3;
    for (auto kind : {NoiseKind::kGaussian, NoiseKind::kRademacher, NoiseKind::kUniformCentered}) {
        NoiseSpec spec{kind, sigma};
        RngStream rng(123, static_cast<std::uint64_t>(kind));
        double s1 = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            double x = draw_noise(spec, rng);
            s1 += x;
            s2 += x * x;
        }
        double mean = s1 / n, var = s2 / n - mean * mean;
        REQUIRE(std::abs(mean) <= 4.0 * sigma / std::sqrt(1.0 * n));
        REQUIRE(std::abs(var - sigma * sigma) <= 0.05 * sigma * sigma);
    }
    RngStream rng(1, 0);
    NoiseSpec bad{NoiseKind::kGaussian, -0.1};
    REQUIRE_THROWS(draw_noise(bad, rng));
}

TEST_CASE("density sampler: uniform case is KS-uniform", "[simulate]") {
    DensitySampler s(make_model({1.0}));
    RngStream rng(31, 0);
    const int n = 100000;
    std::vector<double> u(n);
    for (auto& x : u) {
        x = s.quantile(rng.uniform01());
        REQUIRE(x >= 0.0);
        REQUIRE(x <= 1.0);
    }
    std::sort(u.begin(), u.end());
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
        d = std::max(d, std::abs(u[i] - (i + 1.0) / n));
        d = std::max(d, std::abs(u[i] - static_cast<double>(i) / n));
    }
    REQUIRE(std::sqrt(1.0 * n) * d < 1.628);
}

TEST_CASE("density sampler rejects non-densities", "[simulate]") {
    REQUIRE_THROWS(DensitySampler(make_model({0.9, 0.1})));   // mass != 1
    REQUIRE_THROWS(DensitySampler(make_model({1.0, 0.9})));   // negative lobe
    DensitySampler ok(make_model({1.0, 0.3}));
    // quantile is monotone
    double prev = ok.quantile(0.0);
    for (double q = 0.05; q <= 1.0; q += 0.05) {
        double cur = ok.quantile(q);
        REQUIRE(cur >= prev);
        prev = cur;
    }
    RngStream rng(2, 0);
    REQUIRE_THROWS(ok.sample(1, rng));
    RngStream ra(6, 1), rb(6, 1);
    REQUIRE(gen_density_sample(make_model({1.0, 0.3}), 128, ra).values ==
            gen_density_sample(make_model({1.0, 0.3}), 128, rb).values);
}

TEST_CASE("spectral density to covariance", "[simulate]") {
    auto m = make_model({1.0, 0.5});
    REQUIRE(covariance_from_spectrum(m, 0) == Catch::Approx(kSqrt2));
    REQUIRE(covariance_from_spectrum(m, 1) == Catch::Approx(0.5));
    REQUIRE(covariance_from_spectrum(m, 2) == 0.0);
    REQUIRE_THROWS(covariance_from_spectrum(m, -1));
    // sine components do not contribute to the covariance
    auto ms = make_model({1.0, 0.0, 0.4});
    REQUIRE(covariance_from_spectrum(ms, 1) == 0.0);
}

TEST_CASE("stationary path: white spectrum gives iid variance sqrt2", "[simulate]") {
    RngStream rng(404, 0);
    auto d = gen_stationary_gaussian(make_model({1.0}), 4096, rng);
    REQUIRE(d.tag == ProblemTag::kSpectral);
    double s2 = 0.0, lag1 = 0.0;
    for (int i = 0; i < 4096; ++i) s2 += d.values[i] * d.values[i];
    for (int i = 0; i + 1 < 4096; ++i) lag1 += d.values[i] * d.values[i + 1];
    REQUIRE(std::abs(s2 / 4096.0 - kSqrt2) < 0.05 * kSqrt2);
    REQUIRE(std::abs(lag1 / 4096.0) < 4.0 * kSqrt2 / std::sqrt(4096.0));
}

TEST_CASE("stationary path: autocovariance tracks the spectrum", "[simulate]") {
    // cosine spectrum: r(h) picked off the even coefficients
    CoefficientModel m = make_model({1.0, 0.3, 0.0, 0.2, 0.0, 0.1, 0.0, 0.02});
    const int n = 256, paths = 500, H = 8;
    std::vector<double> sum(H + 1, 0.0), sumsq(H + 1, 0.0);
    RngStream rng(2718, 0);
    ToeplitzCholesky chol(m, n);
    for (int p = 0; p < paths; ++p) {
        auto x = chol.draw(rng);
        for (int h = 0; h <= H; ++h) {
            double acc = 0.0;
            for (int i = 0; i + h < n; ++i)
                acc += x.values[static_cast<std::size_t>(i)] *
                       x.values[static_cast<std::size_t>(i + h)];
            double est = acc / (n - h);
            sum[h] += est;
            sumsq[h] += est * est;
        }
    }
    for (int h = 0; h <= H; ++h) {
        double mean = sum[h] / paths;
        double var = sumsq[h] / paths - mean * mean;
        double se = std::sqrt(var / paths);
        REQUIRE(std::abs(mean - covariance_from_spectrum(m, h)) <= 3.0 * se);
    }
}

TEST_CASE("toeplitz factorization guards", "[simulate]") {
    // r(0)=sqrt2, r(1)=1.4 is indefinite beyond 2x2
    REQUIRE_THROWS_AS(ToeplitzCholesky(make_model({1.0, 1.4}), 8), std::domain_error);
    REQUIRE_THROWS_AS(ToeplitzCholesky(make_model({1.0}), 1), std::invalid_argument);
    REQUIRE_THROWS_AS(ToeplitzCholesky(make_model({1.0}), 5000), std::invalid_argument);
    RngStream ra(12, 0), rb(12, 0);
    REQUIRE(gen_stationary_gaussian(make_model({1.0, 0.5}), 64, ra).values ==
            gen_stationary_gaussian(make_model({1.0, 0.5}), 64, rb).values);
}
