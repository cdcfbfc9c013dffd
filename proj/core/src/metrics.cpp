#include "dejitter/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "dejitter/fft.hpp"

namespace dejitter {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kSinadrCapDb = 200.0;

double wrap_2pi(double x) {
    x = std::fmod(x + kPi, 2.0 * kPi);
    if (x < 0) x += 2.0 * kPi;
    return x - kPi;
}
}  // namespace

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

double jitter_distortion_power(const Ar1Params& params, double sigma_x2, double w_hz) {
    const double sxp2 = 4.0 * kPi * kPi * w_hz * w_hz * sigma_x2 / 3.0;
    return params.sigma_xi2() * sxp2;
}

double sinadr_analytic_db(const Ar1Params& params, double sigma_x2, double w_hz) {
    const double one_minus_phi2 = (1.0 - params.phi) * (1.0 + params.phi);
    const double num = 3.0 * one_minus_phi2 * sigma_x2;
    const double den = 3.0 * one_minus_phi2 * params.sigma_w * params.sigma_w +
                       4.0 * kPi * kPi * w_hz * w_hz * params.sigma_eps * params.sigma_eps *
                           sigma_x2;
    if (den <= 0.0) return kSinadrCapDb;
    return linear_to_db(num / den);
}

double sinadr_empirical_db(const SampledSignal& x_ref, const SampledSignal& x_test,
                           std::size_t guard) {
    if (x_ref.size() != x_test.size())
        throw std::invalid_argument("sinadr_empirical_db: length mismatch");
    const std::size_t n = x_ref.size();
    std::size_t g = guard;
    if (2 * g + 2 > n) g = (n > 2) ? (n - 2) / 2 : 0;
    double sig = 0.0, res = 0.0;
    for (std::size_t i = g; i < n - g; ++i) {
        sig += std::norm(x_ref.samples[i]);
        res += std::norm(x_test.samples[i] - x_ref.samples[i]);
    }
    if (res <= 0.0) return kSinadrCapDb;
    return std::min(kSinadrCapDb, linear_to_db(sig / res));
}

double ndr_db(const Ar1Params& params, double sigma_x2, double w_hz) {
    if (params.sigma_w == 0.0) return -std::numeric_limits<double>::infinity();
    const double dist = jitter_distortion_power(params, sigma_x2, w_hz);
    return linear_to_db(params.sigma_w * params.sigma_w / dist);
}

double sigma_w_for_ndr(double ndr_db_target, const Ar1Params& params, double sigma_x2,
                       double w_hz) {
    const double dist = jitter_distortion_power(params, sigma_x2, w_hz);
    return std::sqrt(db_to_linear(ndr_db_target) * dist);
}

double sigma_w_for_sinadr(double sinadr_db_target, const Ar1Params& params, double sigma_x2,
                          double w_hz) {
    const double dist = jitter_distortion_power(params, sigma_x2, w_hz);
    const double total = sigma_x2 / db_to_linear(sinadr_db_target);
    const double sw2 = total - dist;
    if (sw2 < 0.0)
        throw std::invalid_argument(
            "sigma_w_for_sinadr: target exceeds the jitter-limited ceiling");
    return std::sqrt(sw2);
}

double evm(std::span<const cplx> ref_symbols, std::span<const cplx> est_symbols) {
    if (ref_symbols.size() != est_symbols.size() || ref_symbols.empty())
        throw std::invalid_argument("evm: size mismatch");
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < ref_symbols.size(); ++i) {
        err += std::norm(est_symbols[i] - ref_symbols[i]);
        ref += std::norm(ref_symbols[i]);
    }
    if (ref <= 0.0) throw std::invalid_argument("evm: zero reference power");
    return std::sqrt(err / ref);
}

double delta_evm_db(double evm_uncomp, double evm_comp) {
    if (evm_comp == 0.0 && evm_uncomp == 0.0) return 0.0;
    if (evm_comp == 0.0) return std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(evm_uncomp / evm_comp);
}

cplx ls_scale(std::span<const cplx> ref, std::span<const cplx> est) {
    if (ref.size() != est.size() || ref.empty())
        throw std::invalid_argument("ls_scale: size mismatch");
    cplx num(0.0, 0.0);
    double den = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        num += ref[i] * std::conj(est[i]);
        den += std::norm(est[i]);
    }
    if (den <= 0.0) return cplx(1.0, 0.0);
    return num / den;
}

double WelchSpectrum::total_power() const {
    double acc = 0.0;
    for (double v : psd) acc += v;
    return acc * df;
}

double WelchSpectrum::band_power(double f_lo, double f_hi) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < psd.size(); ++i) {
        const double af = std::abs(freq_hz[i]);
        if (af >= f_lo && af < f_hi) acc += psd[i];
    }
    return acc * df;
}

WelchSpectrum psd_welch(const SampledSignal& x, std::size_t segment, double overlap) {
    if (segment < 8) throw std::invalid_argument("psd_welch: segment too short");
    if (overlap < 0.0 || overlap > 0.9)
        throw std::invalid_argument("psd_welch: overlap must be in [0, 0.9]");
    const std::size_t n = x.size();
    const std::size_t m = std::min(segment, n);
    const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                  std::llround((1.0 - overlap) * m)));

    std::vector<double> window(m);
    double u = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) /
                                          static_cast<double>(m)));
        u += window[i] * window[i];
    }
    u /= static_cast<double>(m);

    std::vector<double> acc(m, 0.0);
    std::size_t count = 0;
    std::vector<cplx> buf(m);
    for (std::size_t start = 0; start + m <= n; start += hop) {
        for (std::size_t i = 0; i < m; ++i) buf[i] = window[i] * x.samples[start + i];
        auto spec = fft::forward(buf);
        for (std::size_t k = 0; k < m; ++k) acc[k] += std::norm(spec[k]);
        ++count;
        if (start + m == n) break;
    }
    if (count == 0) throw std::invalid_argument("psd_welch: record shorter than a segment");

    WelchSpectrum out;
    out.df = 1.0 / (static_cast<double>(m) * x.t_s);
    const double scale = x.t_s / (u * static_cast<double>(m) * static_cast<double>(count));
    out.freq_hz.resize(m);
    out.psd.resize(m);
    // fftshift to ascending frequency
    const std::size_t half = m / 2;
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t src = (k + half) % m;
        out.freq_hz[k] = fft::bin_freq_hz(src, m, x.t_s);
        out.psd[k] = acc[src] * scale;
    }
    return out;
}

double prop1_ratio(const Ar1Params& params, double w_hz, double t_s) {
    (void)t_s;
    const double sx2 = params.sigma_xi2();
    return 36.0 * kPi * kPi / 5.0 * sx2 * w_hz * w_hz;
}

QuadResult prop2_variance(const Ar1Params& params, double w_hz, double t_s, double quad_tol,
                          double sigma_x2) {
    if (quad_tol <= 0.0) throw std::invalid_argument("prop2_variance: quad_tol must be positive");
    params.validate();
    const double a = 2.0 * kPi * w_hz * t_s;  // indicator half-width in normalized frequency
    const double phi = params.phi;

    // inner integral over omega at fixed nu, split where the wrapped support
    // or the wrap branch changes
    const auto inner = [&](double nu) {
        const auto f = [&](double om) {
            const double d = wrap_2pi(om - nu);
            if (std::abs(d) > a) return 0.0;
            return om * om * d * d;
        };
        std::vector<double> brk;
        for (double p : {nu - a, nu + a, nu - a + 2.0 * kPi, nu + a - 2.0 * kPi,
                         nu + kPi, nu - kPi})
            if (p > -kPi && p < kPi) brk.push_back(p);
        const auto r = integrate_adaptive(f, -kPi, kPi, quad_tol * 1e-3, quad_tol * 1e-3, brk);
        return r.value;
    };

    const auto outer = [&](double nu) {
        return inner(nu) / (1.0 + phi * phi - 2.0 * phi * std::cos(nu));
    };
    // the Poisson kernel concentrates at nu = 0 as phi -> 1
    const double width = std::max(1.0 - phi, 1e-9);
    const std::vector<double> brk{0.0,          -width, width, -30.0 * width,
                                  30.0 * width, -a,     a};
    auto I = integrate_adaptive(outer, -kPi, kPi, 0.0, quad_tol, brk, 40);

    const double sxp2 = 4.0 * kPi * kPi * w_hz * w_hz * sigma_x2 / 3.0;
    const double one_minus_phi2 = (1.0 - phi) * (1.0 + phi);
    const double wts = w_hz * t_s;
    const double prefactor = params.sigma_xi2() / (t_s * t_s) * 3.0 * one_minus_phi2 /
                             (32.0 * std::pow(kPi, 4) * std::pow(wts, 3)) * sxp2;
    QuadResult out;
    out.value = prefactor * I.value;
    out.abs_err = prefactor * I.abs_err;
    out.converged = I.converged;
    return out;
}

double violet_noise_variance(double sigma_w, double t_s) {
    if (t_s <= 0.0) throw std::invalid_argument("violet_noise_variance: t_s must be positive");
    return kPi * kPi * sigma_w * sigma_w / (3.0 * t_s * t_s);
}

double oob_integral(double nu, double omega_bar, double phi) {
    if (!(omega_bar > 0.0)) throw std::invalid_argument("oob_integral: omega_bar must be positive");
    if (!(phi > 0.0 && phi < 1.0)) throw std::invalid_argument("oob_integral: phi in (0,1)");
    const auto f = [&](double om) {
        return om * om / (1.0 + phi * phi - 2.0 * phi * std::cos(nu - om));
    };
    // the Poisson kernel peaks (width ~ 1-phi) wherever nu - om = 2 pi k;
    // seed panels straddling each aliased peak or the rule never sees it
    std::vector<double> brk;
    const double width = std::max(1.0 - phi, 1e-9);
    for (int k = -1; k <= 1; ++k) {
        const double c = nu - 2.0 * kPi * static_cast<double>(k);
        for (double p : {c - 30.0 * width, c - width, c, c + width, c + 30.0 * width})
            if (p > -omega_bar && p < omega_bar) brk.push_back(p);
    }
    const auto r = integrate_adaptive(f, -omega_bar, omega_bar, 0.0, 1e-9, brk, 40);
    return r.value;
}

}  // namespace dejitter
