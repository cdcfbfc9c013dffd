#include "dejitter/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dejitter/fft.hpp"
#include "dejitter/rng.hpp"

namespace dejitter {

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// Zeroes all DFT bins with |f| > w (in place, on a full-length spectrum).
void brickwall_spectrum(std::vector<cplx>& spec, std::size_t n, double t_s, double w_hz) {
    const double keep = w_hz * (1.0 + 1e-12);
    for (std::size_t k = 0; k < n; ++k) {
        if (std::abs(fft::bin_freq_hz(k, n, t_s)) > keep) spec[k] = 0.0;
    }
}

}  // namespace

void SampledSignal::validate() const {
    if (t_s <= 0.0) throw std::invalid_argument("SampledSignal: t_s must be positive");
    if (bandlimit_w <= 0.0 || bandlimit_w > 0.5 / t_s * (1.0 + 1e-12))
        throw std::invalid_argument("SampledSignal: bandlimit must satisfy 0 < W <= 1/(2 t_s)");
    if (samples.size() < 2) throw std::invalid_argument("SampledSignal: need at least 2 samples");
    if (is_real) {
        for (const auto& v : samples)
            if (v.imag() != 0.0)
                throw std::invalid_argument("SampledSignal: real signal has nonzero imaginary part");
    }
}

double SampledSignal::power(std::size_t first, std::size_t last) const {
    last = std::min(last, samples.size());
    if (first >= last) throw std::invalid_argument("SampledSignal::power: empty range");
    double acc = 0.0;
    for (std::size_t i = first; i < last; ++i) acc += std::norm(samples[i]);
    return acc / static_cast<double>(last - first);
}

SampledSignal SampledSignal::from_real(std::vector<double> values, double t_s, double w_hz) {
    SampledSignal s;
    s.samples.reserve(values.size());
    for (double v : values) s.samples.emplace_back(v, 0.0);
    s.t_s = t_s;
    s.bandlimit_w = w_hz;
    s.is_real = true;
    return s;
}

std::vector<double> SampledSignal::real_part() const {
    std::vector<double> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) out[i] = samples[i].real();
    return out;
}

double Ar1Params::sigma_xi() const { return std::sqrt(sigma_xi2()); }

double Ar1Params::sigma_xi2() const {
    return sigma_eps * sigma_eps / ((1.0 - phi) * (1.0 + phi));
}

void Ar1Params::validate() const {
    if (!(phi > 0.0 && phi < 1.0)) throw std::invalid_argument("Ar1Params: phi must be in (0,1)");
    if (sigma_eps < 0.0) throw std::invalid_argument("Ar1Params: sigma_eps must be >= 0");
    if (sigma_w < 0.0) throw std::invalid_argument("Ar1Params: sigma_w must be >= 0");
    if (!std::isfinite(sigma_xi2())) throw std::invalid_argument("Ar1Params: sigma_xi overflows");
}

void DerivativeFilterSpec::validate() const {
    if (half_length < 8) throw std::invalid_argument("DerivativeFilterSpec: half_length must be >= 8");
}

SampledSignal generate_bandlimited_gaussian(std::size_t n, double t_s, double w_hz,
                                            double power, std::uint64_t seed,
                                            bool real_valued) {
    if (n < 2) throw std::invalid_argument("generate_bandlimited_gaussian: n too small");
    if (t_s <= 0.0) throw std::invalid_argument("generate_bandlimited_gaussian: t_s must be positive");
    if (w_hz <= 0.0 || w_hz > 0.5 / t_s * (1.0 + 1e-12))
        throw std::invalid_argument("generate_bandlimited_gaussian: W exceeds Nyquist");
    if (power <= 0.0) throw std::invalid_argument("generate_bandlimited_gaussian: power must be positive");

    const double band_fraction = std::min(1.0, 2.0 * w_hz * t_s);
    const double in_var = power / band_fraction;

    GaussianRng rng(seed);
    SampledSignal out;
    out.t_s = t_s;
    out.bandlimit_w = w_hz;
    out.is_real = real_valued;
    out.samples.resize(n);
    if (real_valued) {
        const double s = std::sqrt(in_var);
        for (auto& v : out.samples) v = cplx(s * rng(), 0.0);
    } else {
        const double s = std::sqrt(in_var / 2.0);
        for (auto& v : out.samples) {
            double re = s * rng();
            double im = s * rng();
            v = cplx(re, im);
        }
    }

    if (band_fraction >= 1.0 - 1e-15) return out;  // all-pass

    auto spec = fft::forward(out.samples);
    brickwall_spectrum(spec, n, t_s, w_hz);
    out.samples = fft::inverse(spec);
    if (real_valued)
        for (auto& v : out.samples) v = cplx(v.real(), 0.0);
    return out;
}

SampledSignal resample_at_jittered_instants(const SampledSignal& x, const JitterTrace& xi,
                                            std::size_t half_width) {
    if (x.size() != xi.size())
        throw std::invalid_argument("resample_at_jittered_instants: length mismatch");
    if (half_width == 0)
        throw std::invalid_argument("resample_at_jittered_instants: half_width must be positive");

    const std::size_t n = x.size();
    const auto hw = static_cast<std::ptrdiff_t>(half_width);

    // raised-cosine taper on the outer quarter of the truncation window;
    // raw truncation floors near 1e-4 relative, the taper reaches ~1e-8
    std::vector<double> taper(half_width + 1, 1.0);
    const std::size_t flat = (3 * half_width) / 4;
    for (std::size_t j = flat + 1; j <= half_width; ++j)
        taper[j] = 0.5 * (1.0 + std::cos(kPi * static_cast<double>(j - flat) /
                                         static_cast<double>(half_width - flat)));

    SampledSignal out = x;
    for (std::size_t i = 0; i < n; ++i) {
        const double delta = xi.xi[i] / x.t_s;
        const double nearest = std::round(delta);
        if (std::abs(delta - nearest) < 1e-14) {
            // sinc kernel collapses to a Kronecker delta
            const auto src = static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(nearest);
            out.samples[i] = (src >= 0 && src < static_cast<std::ptrdiff_t>(n))
                                 ? x.samples[static_cast<std::size_t>(src)]
                                 : cplx(0.0, 0.0);
            continue;
        }
        const double sin_pd = std::sin(kPi * delta) / kPi;
        cplx acc(0.0, 0.0);
        const auto base = static_cast<std::ptrdiff_t>(i);
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(-hw, -base);
        const std::ptrdiff_t hi_ = std::min<std::ptrdiff_t>(hw, static_cast<std::ptrdiff_t>(n) - 1 - base);
        for (std::ptrdiff_t j = lo; j <= hi_; ++j) {
            const double sign = (j & 1) ? -1.0 : 1.0;
            const double w = taper[static_cast<std::size_t>(j < 0 ? -j : j)];
            acc += x.samples[static_cast<std::size_t>(base + j)] *
                   (w * sign * sin_pd / (delta - static_cast<double>(j)));
        }
        out.samples[i] = acc;
    }
    if (!x.is_real) out.is_real = false;
    return out;
}

SampledSignal bandlimited_derivative(const SampledSignal& x, const DerivativeFilterSpec& spec) {
    spec.validate();
    const std::size_t n = x.size();
    const std::size_t L = spec.half_length;
    if (n <= 4 * L)
        throw std::invalid_argument("bandlimited_derivative: input length must exceed 4*half_length");

    const std::size_t m = next_pow2(n + 2 * L);
    std::vector<cplx> xpad(m, cplx(0.0, 0.0));
    std::copy(x.samples.begin(), x.samples.end(), xpad.begin());

    std::vector<cplx> kernel(m, cplx(0.0, 0.0));
    for (std::size_t j = 1; j <= L; ++j) {
        double wnd = 1.0;
        if (spec.window == DerivativeWindow::hann) {
            wnd = 0.5 * (1.0 + std::cos(kPi * static_cast<double>(j) /
                                        static_cast<double>(L + 1)));
        }
        const double sign = (j & 1) ? -1.0 : 1.0;
        const double h = sign / static_cast<double>(j) * wnd / x.t_s;
        kernel[j] = cplx(h, 0.0);        // h_{+j}
        kernel[m - j] = cplx(-h, 0.0);   // h_{-j} = -h_{+j}
    }

    auto xs = fft::forward(xpad);
    auto ks = fft::forward(kernel);
    for (std::size_t k = 0; k < m; ++k) xs[k] *= ks[k];
    auto conv = fft::inverse(xs);

    SampledSignal out = x;
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = conv[i];
    if (x.is_real)
        for (auto& v : out.samples) v = cplx(v.real(), 0.0);
    return out;
}

GpFillResult gerchberg_papoulis_fill(const SampledSignal& y,
                                     std::span<const std::size_t> known_mask,
                                     std::size_t iterations) {
    y.validate();
    if (known_mask.empty())
        throw std::invalid_argument("gerchberg_papoulis_fill: empty known set");
    const std::size_t n = y.size();
    const double frac = static_cast<double>(known_mask.size()) / static_cast<double>(n);
    if (frac <= 2.0 * y.bandlimit_w * y.t_s * (1.0 - 1e-12))
        throw std::invalid_argument(
            "gerchberg_papoulis_fill: known fraction must exceed 2 W t_s");
    for (std::size_t idx : known_mask)
        if (idx >= n) throw std::invalid_argument("gerchberg_papoulis_fill: index out of range");

    GpFillResult result;
    result.signal = y;
    auto& z = result.signal.samples;
    std::vector<bool> known(n, false);
    for (std::size_t idx : known_mask) known[idx] = true;
    for (std::size_t i = 0; i < n; ++i)
        if (!known[i]) z[i] = cplx(0.0, 0.0);

    std::size_t stall = 0;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < iterations; ++it) {
        for (std::size_t idx : known_mask) z[idx] = y.samples[idx];
        auto spec = fft::forward(z);
        const double keep = y.bandlimit_w * (1.0 + 1e-12);
        for (std::size_t k = 0; k < n; ++k)
            if (std::abs(fft::bin_freq_hz(k, n, y.t_s)) > keep) spec[k] = 0.0;
        z = fft::inverse(spec);
        if (y.is_real)
            for (auto& v : z) v = cplx(v.real(), 0.0);

        double acc = 0.0;
        for (std::size_t idx : known_mask) acc += std::norm(z[idx] - y.samples[idx]);
        const double rms = std::sqrt(acc / static_cast<double>(known_mask.size()));
        result.residuals.push_back(rms);
        stall = (rms < prev * (1.0 - 1e-15)) ? 0 : stall + 1;
        if (stall >= 10) {
            result.converged = false;
            break;
        }
        prev = rms;
    }
    return result;
}

}  // namespace dejitter
