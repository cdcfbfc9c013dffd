#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dejitter/jitter.hpp"
#include "dejitter/quadrature.hpp"
#include "dejitter/signal.hpp"

using namespace dejitter;

namespace {
constexpr double kPi = std::numbers::pi;

double sample_mean(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}
}  // namespace

TEST_CASE("ar1 with negligible phi is white") {
    Ar1Params p{1e-8, 2.0e-3, 0.0};
    const auto tr = ar1_generate(p, 1u << 20, 1.0, 8001);
    double var = 0.0;
    for (double v : tr.xi) var += v * v;
    var /= static_cast<double>(tr.xi.size());
    CHECK(std::abs(var - p.sigma_eps * p.sigma_eps) / (p.sigma_eps * p.sigma_eps) < 0.02);
}

TEST_CASE("ar1 stationary variance and lag-1 autocorrelation") {
    Ar1Params p{0.95, 1.0e-3, 0.0};
    const std::size_t n = 1u << 20;  // 10^6 samples
    const auto tr = ar1_generate(p, n, 1.0, 8002);
    const double mean = sample_mean(tr.xi);
    double var = 0.0, lag1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (tr.xi[i] - mean) * (tr.xi[i] - mean);
    var /= static_cast<double>(n);
    for (std::size_t i = 0; i + 1 < n; ++i)
        lag1 += (tr.xi[i] - mean) * (tr.xi[i + 1] - mean);
    lag1 /= static_cast<double>(n - 1) * var;

    CHECK(std::abs(var - p.sigma_xi2()) / p.sigma_xi2() < 0.05);
    CHECK(std::abs(lag1 - p.phi) < 0.002);
}

TEST_CASE("subsampled AR(1) covariance follows phi^(K+1)") {
    Ar1Params p{0.999, 1.0e-3, 0.0};
    const std::size_t n = 1u << 20;
    const std::size_t gap = 100;  // K + 1
    const auto tr = ar1_generate(p, n, 1.0, 8023);
    double cov = 0.0, var = 0.0;
    for (std::size_t i = 0; i + gap < n; ++i) {
        cov += tr.xi[i] * tr.xi[i + gap];
        var += tr.xi[i] * tr.xi[i];
    }
    cov /= static_cast<double>(n - gap);
    var /= static_cast<double>(n - gap);
    const double expect = p.sigma_xi2() * std::pow(p.phi, static_cast<double>(gap));
    CHECK(std::abs(cov - expect) / expect < 0.05);
    CHECK(std::abs(var - p.sigma_xi2()) / p.sigma_xi2() < 0.05);
}

TEST_CASE("no clamping in standard configurations") {
    Ar1Params p{0.999, 0.0, 0.0};
    p.sigma_eps = sigma_eps_for_percentage(0.10, p.phi, 1.0);
    const auto tr = ar1_generate(p, 1u << 16, 1.0, 8004);
    CHECK(tr.clamp_count == 0);
}

TEST_CASE("ar1_psd closed form") {
    Ar1Params p{0.9, 0.5e-3, 0.0};
    const double s0 = ar1_psd(p, 0.0);
    const double expect = p.sigma_eps * p.sigma_eps / ((1 - p.phi) * (1 - p.phi));
    CHECK(s0 == doctest::Approx(expect).epsilon(1e-12));

    Ar1Params flat{1e-9, 0.5e-3, 0.0};
    for (double w : {-3.0, -1.0, 0.0, 0.5, 3.0})
        CHECK(ar1_psd(flat, w) ==
              doctest::Approx(flat.sigma_eps * flat.sigma_eps).epsilon(1e-6));
}

TEST_CASE("ar1_psd integrates to the stationary variance") {
    Ar1Params p{0.95, 1.2e-3, 0.0};
    const auto r = integrate_adaptive([&](double w) { return ar1_psd(p, w); }, -kPi, kPi,
                                      0.0, 1e-10, {0.0});
    const double integral = r.value / (2.0 * kPi);
    CHECK(std::abs(integral - p.sigma_xi2()) / p.sigma_xi2() < 1e-6);
}

TEST_CASE("ar1_psd low-frequency 1/w^2 approximation band") {
    Ar1Params p{0.999, 1.0e-3, 0.0};
    const double se2 = p.sigma_eps * p.sigma_eps;
    for (double w = 10.0 * (1 - p.phi) * 1.001; w < 0.1; w *= 1.5) {
        const double ratio = ar1_psd(p, w) * w * w / se2;
        CHECK(ratio > 0.8);
        CHECK(ratio < 1.25);
    }
}

TEST_CASE("make_observation with zero impairments is the identity") {
    const auto x = generate_bandlimited_gaussian(4096, 1.0, 0.4, 1.0, 8005, true);
    JitterTrace xi;
    xi.xi.assign(x.size(), 0.0);
    const auto y_exact = make_observation(x, xi, 0.0, ObservationMode::exact, 1, 64);
    const auto y_lin = make_observation(x, xi, 0.0, ObservationMode::linearized, 1, 64,
                                        DerivativeFilterSpec{64, DerivativeWindow::hann});
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(y_exact.samples[i] == x.samples[i]);
        CHECK(y_lin.samples[i] == x.samples[i]);
    }
}

TEST_CASE("linearized observation tracks the exact one under small jitter") {
    const std::size_t n = 1u << 15;
    const auto x = generate_bandlimited_gaussian(n, 1.0, 0.4, 1.0, 8006, true);
    Ar1Params p{0.999, sigma_eps_for_percentage(5e-3, 0.999, 1.0), 0.0};
    const auto xi = ar1_generate(p, n, 1.0, 8007);
    const auto y_exact = make_observation(x, xi, 0.0, ObservationMode::exact, 1);
    const auto y_lin = make_observation(x, xi, 0.0, ObservationMode::linearized, 1);
    double resid = 0.0, dist = 0.0;
    for (std::size_t i = 2048; i + 2048 < n; ++i) {
        resid += std::norm(y_exact.samples[i] - y_lin.samples[i]);
        dist += std::norm(y_lin.samples[i] - x.samples[i]);
    }
    CHECK(resid / dist < 1e-2);  // the first-order term dominates
}

TEST_CASE("linearized distortion power matches sigma_xi^2 sigma_x'^2 + sigma_w^2") {
    const std::size_t n = 1u << 16;
    const double w_hz = 0.4;
    const auto x = generate_bandlimited_gaussian(n, 1.0, w_hz, 1.0, 8008, true);
    Ar1Params p{0.95, sigma_eps_for_percentage(1.5e-2, 0.95, 1.0), 0.0};
    const double sw = 5e-3;
    const auto xi = ar1_generate(p, n, 1.0, 8009);
    const auto y = make_observation(x, xi, sw, ObservationMode::linearized, 8010);
    double resid = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 2048; i + 2048 < n; ++i) {
        resid += std::norm(y.samples[i] - x.samples[i]);
        ++cnt;
    }
    resid /= static_cast<double>(cnt);
    const double sxp2 = 4.0 * kPi * kPi * w_hz * w_hz / 3.0;
    const double expect = p.sigma_xi2() * sxp2 + sw * sw;
    CHECK(std::abs(resid - expect) / expect < 0.05);
}

TEST_CASE("jitter percentage and its inverse") {
    Ar1Params p{0.999, 0.0, 0.0};
    p.sigma_eps = sigma_eps_for_percentage(1.5e-2, p.phi, 1e-8);
    CHECK(jitter_percentage(p, 1e-8) == doctest::Approx(1.5e-2).epsilon(1e-12));

    Ar1Params zero{0.9, 0.0, 0.0};
    CHECK(jitter_percentage(zero, 1.0) == 0.0);

    for (double pct : {1e-4, 5e-3, 0.1}) {
        Ar1Params q{0.97, sigma_eps_for_percentage(pct, 0.97, 2e-9), 0.0};
        CHECK(std::abs(jitter_percentage(q, 2e-9) - pct) / pct < 1e-12);
    }
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(Ar1Params({1.2, 1e-3, 0.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(Ar1Params({0.9, -1e-3, 0.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(ar1_psd(Ar1Params{0.9, 1e-3, 0.0}, 4.0), std::invalid_argument);
}
