#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dejitter/fft.hpp"
#include "dejitter/metrics.hpp"
#include "dejitter/rng.hpp"
#include "dejitter/signal.hpp"

using namespace dejitter;

namespace {
constexpr double kPi = std::numbers::pi;

double interior_var(const SampledSignal& s, std::size_t guard) {
    return s.power(guard, s.size() - guard);
}
}  // namespace

TEST_CASE("generate_bandlimited_gaussian hits the requested power") {
    // 40 MHz cutoff at 100 MS/s, unit power
    const auto x = generate_bandlimited_gaussian(1u << 16, 1e-8, 40e6, 1.0, 7001, true);
    CHECK(x.is_real);
    CHECK(std::abs(x.power() - 1.0) < 0.03);

    const auto xc = generate_bandlimited_gaussian(1u << 14, 1e-8, 40e6, 2.5, 7002, false);
    CHECK(std::abs(xc.power() - 2.5) / 2.5 < 0.05);
}

TEST_CASE("generate at Nyquist is the white input (all-pass)") {
    const std::size_t n = 4096;
    const double t_s = 1.0;
    const auto x = generate_bandlimited_gaussian(n, t_s, 0.5, 1.0, 33, true);
    GaussianRng rng(33);
    for (std::size_t i = 0; i < n; ++i) CHECK(x.samples[i].real() == rng());
}

TEST_CASE("generated spectrum has no out-of-band energy") {
    const std::size_t n = 1u << 16;
    const auto x = generate_bandlimited_gaussian(n, 1.0, 0.4, 1.0, 7003, true);
    auto spec = fft::forward(x.samples);
    double inband = 0.0, outband = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double f = std::abs(fft::bin_freq_hz(k, n, 1.0));
        (f <= 0.4 * (1 + 1e-12) ? inband : outband) += std::norm(spec[k]);
    }
    CHECK(outband / (inband + outband) < 1e-4);
}

TEST_CASE("generator rejects bad arguments") {
    CHECK_THROWS_AS(generate_bandlimited_gaussian(4096, 1.0, 0.6, 1.0, 1, true),
                    std::invalid_argument);  // beyond Nyquist
    CHECK_THROWS_AS(generate_bandlimited_gaussian(4096, 1.0, 0.4, 0.0, 1, true),
                    std::invalid_argument);
    CHECK_THROWS_AS(generate_bandlimited_gaussian(4096, 1.0, 0.4, -1.0, 1, true),
                    std::invalid_argument);
}

TEST_CASE("Parseval: Welch integral matches time-domain variance") {
    const auto x = generate_bandlimited_gaussian(1u << 16, 1e-8, 40e6, 1.0, 7004, true);
    const auto spec = psd_welch(x, 4096, 0.5);
    const double tp = spec.total_power();
    CHECK(std::abs(tp - x.power()) / x.power() < 0.02);
}

TEST_CASE("resample with zero jitter is the identity, exactly") {
    const auto x = generate_bandlimited_gaussian(4096, 1.0, 0.4, 1.0, 7005, true);
    JitterTrace xi;
    xi.xi.assign(x.size(), 0.0);
    const auto y = resample_at_jittered_instants(x, xi, 64);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.samples[i] == x.samples[i]);
}

TEST_CASE("resample with a whole-sample shift reproduces the neighbor") {
    const auto x = generate_bandlimited_gaussian(4096, 1.0, 0.4, 1.0, 7006, true);
    JitterTrace xi;
    xi.xi.assign(x.size(), 1.0);  // one full sample
    const auto y = resample_at_jittered_instants(x, xi, 128);
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 256; i + 257 < x.size(); ++i) {
        err += std::norm(y.samples[i] - x.samples[i + 1]);
        ref += std::norm(x.samples[i + 1]);
    }
    CHECK(std::sqrt(err / ref) < 1e-6);
}

TEST_CASE("resample matches the closed-form cosine oracle") {
    const std::size_t n = 8192;
    const double omega = 0.3;  // rad/sample, inside the W t_s = 0.4 band
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::cos(omega * static_cast<double>(i));
    auto x = SampledSignal::from_real(v, 1.0, 0.4);

    std::mt19937_64 gen(7007);
    std::uniform_real_distribution<double> uni(-0.45, 0.45);
    JitterTrace xi;
    xi.xi.resize(n);
    for (auto& d : xi.xi) d = uni(gen);

    const auto y = resample_at_jittered_instants(x, xi, 512);
    double err = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 600; i + 600 < n; ++i) {
        const double expect = std::cos(omega * (static_cast<double>(i) + xi.xi[i]));
        err += (y.samples[i].real() - expect) * (y.samples[i].real() - expect);
        ++cnt;
    }
    CHECK(std::sqrt(err / static_cast<double>(cnt)) < 1e-5);
}

TEST_CASE("resample rejects mismatched lengths") {
    const auto x = generate_bandlimited_gaussian(2048, 1.0, 0.4, 1.0, 1, true);
    JitterTrace xi;
    xi.xi.assign(100, 0.0);
    CHECK_THROWS_AS(resample_at_jittered_instants(x, xi), std::invalid_argument);
}

TEST_CASE("derivative of a constant vanishes in the interior") {
    std::vector<double> v(8192, 3.75);
    auto x = SampledSignal::from_real(v, 1e-8, 40e6);
    DerivativeFilterSpec spec;
    spec.half_length = 512;
    const auto d = bandlimited_derivative(x, spec);
    const double scale = 3.75 / x.t_s;
    for (std::size_t i = 1200; i + 1200 < x.size(); i += 37)
        CHECK(std::abs(d.samples[i].real()) < 1e-10 * scale);
}

TEST_CASE("derivative of a tone has amplitude 2 pi f") {
    const std::size_t n = 16384;
    const double t_s = 1e-8;
    const double f = 12e6;  // inside the 40 MHz band
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = std::sin(2.0 * kPi * f * static_cast<double>(i) * t_s);
    auto x = SampledSignal::from_real(v, t_s, 40e6);
    DerivativeFilterSpec spec;
    spec.half_length = 256;
    const auto d = bandlimited_derivative(x, spec);
    double peak = 0.0;
    for (std::size_t i = 2048; i + 2048 < n; ++i)
        peak = std::max(peak, std::abs(d.samples[i].real()));
    const double expect = 2.0 * kPi * f;
    CHECK(std::abs(peak - expect) / expect < 0.005);
}

TEST_CASE("derivative variance approaches 4 pi^2 W^2 / 3") {
    const auto x = generate_bandlimited_gaussian(1u << 16, 1e-8, 40e6, 1.0, 7008, true);
    const auto d = bandlimited_derivative(x, {});
    const double expect = 4.0 * kPi * kPi * 40e6 * 40e6 / 3.0;
    const double got = interior_var(d, 2048);
    CHECK(std::abs(got - expect) / expect < 0.03);
}

TEST_CASE("derivative operator is linear") {
    const auto a = generate_bandlimited_gaussian(8192, 1.0, 0.4, 1.0, 7009, true);
    const auto b = generate_bandlimited_gaussian(8192, 1.0, 0.4, 1.0, 7010, true);
    SampledSignal combo = a;
    for (std::size_t i = 0; i < a.size(); ++i)
        combo.samples[i] = 2.5 * a.samples[i] - 1.25 * b.samples[i];
    DerivativeFilterSpec spec;
    spec.half_length = 64;
    const auto da = bandlimited_derivative(a, spec);
    const auto db = bandlimited_derivative(b, spec);
    const auto dc = bandlimited_derivative(combo, spec);
    double scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        scale = std::max(scale, std::abs(da.samples[i]));
    for (std::size_t i = 0; i < a.size(); ++i) {
        const cplx expect = 2.5 * da.samples[i] - 1.25 * db.samples[i];
        CHECK(std::abs(dc.samples[i] - expect) < 1e-10 * scale);
    }
}

TEST_CASE("derivative rejects short inputs") {
    const auto x = generate_bandlimited_gaussian(1024, 1.0, 0.4, 1.0, 1, true);
    DerivativeFilterSpec spec;
    spec.half_length = 512;
    CHECK_THROWS_AS(bandlimited_derivative(x, spec), std::invalid_argument);
    spec.half_length = 4;
    CHECK_THROWS_AS(bandlimited_derivative(x, spec), std::invalid_argument);
}

TEST_CASE("Gerchberg-Papoulis: full mask returns the band projection") {
    const std::size_t n = 4096;
    auto x = generate_bandlimited_gaussian(n, 1.0, 0.3, 1.0, 7011, true);
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;

    // bandlimited input: one iteration returns it unchanged
    auto r = gerchberg_papoulis_fill(x, all, 1);
    for (std::size_t i = 0; i < n; ++i)
        CHECK(std::abs(r.signal.samples[i] - x.samples[i]) < 1e-10);

    // out-of-band noise: output equals the brickwall projection
    SampledSignal noisy = x;
    GaussianRng rng(7012);
    for (auto& v : noisy.samples) v += cplx(0.3 * rng(), 0.0);
    auto spec = fft::forward(noisy.samples);
    for (std::size_t k = 0; k < n; ++k)
        if (std::abs(fft::bin_freq_hz(k, n, 1.0)) > 0.3 * (1 + 1e-12)) spec[k] = 0.0;
    const auto proj = fft::inverse(spec);
    auto r2 = gerchberg_papoulis_fill(noisy, all, 1);
    for (std::size_t i = 0; i < n; ++i)
        CHECK(std::abs(r2.signal.samples[i] - proj[i]) < 1e-10);
}

TEST_CASE("Gerchberg-Papoulis reconstruction error decreases monotonically") {
    const std::size_t n = 8192;
    const auto x = generate_bandlimited_gaussian(n, 1.0, 0.4, 1.0, 7013, true);
    std::vector<std::size_t> known;
    std::mt19937_64 gen(7014);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        if (uni(gen) > 0.10) known.push_back(i);  // delete 10%

    auto r = gerchberg_papoulis_fill(x, known, 30);
    REQUIRE(r.residuals.size() >= 10);
    for (std::size_t i = 1; i < r.residuals.size(); ++i)
        CHECK(r.residuals[i] <= r.residuals[i - 1] * (1.0 + 1e-12));
    // and the filled record approaches the truth
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        err += std::norm(r.signal.samples[i] - x.samples[i]);
        ref += std::norm(x.samples[i]);
    }
    CHECK(err / ref < 0.05);
}

TEST_CASE("Gerchberg-Papoulis enforces the uniqueness precondition") {
    const std::size_t n = 4096;
    const auto x = generate_bandlimited_gaussian(n, 1.0, 0.4, 1.0, 7015, true);
    std::vector<std::size_t> sparse;
    for (std::size_t i = 0; i < n; i += 2) sparse.push_back(i);  // 50% < 2 W t_s = 80%
    CHECK_THROWS_AS(gerchberg_papoulis_fill(x, sparse, 5), std::invalid_argument);
}
