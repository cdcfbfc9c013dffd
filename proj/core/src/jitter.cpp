#include "dejitter/jitter.hpp"

#include <cmath>
#include <stdexcept>

#include "dejitter/rng.hpp"

namespace dejitter {

JitterTrace ar1_generate(const Ar1Params& params, std::size_t n, double t_s,
                         std::uint64_t seed) {
    params.validate();
    if (n < 1) throw std::invalid_argument("ar1_generate: n must be >= 1");
    if (t_s <= 0.0) throw std::invalid_argument("ar1_generate: t_s must be positive");

    const double clamp = 0.49 * t_s;
    GaussianRng rng(seed);
    JitterTrace trace;
    trace.xi.resize(n);
    double state = params.sigma_xi() * rng();  // stationary initialization
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) state = params.phi * state + params.sigma_eps * rng();
        double v = state;
        if (v > clamp) {
            v = clamp;
            ++trace.clamp_count;
        } else if (v < -clamp) {
            v = -clamp;
            ++trace.clamp_count;
        }
        trace.xi[i] = v;
    }
    return trace;
}

double ar1_psd(const Ar1Params& params, double omega) {
    if (std::abs(omega) > M_PI * (1.0 + 1e-12))
        throw std::invalid_argument("ar1_psd: omega outside [-pi, pi]");
    const double phi = params.phi;
    return params.sigma_eps * params.sigma_eps /
           (1.0 + phi * phi - 2.0 * phi * std::cos(omega));
}

SampledSignal make_observation(const SampledSignal& x, const JitterTrace& xi,
                               double sigma_w, ObservationMode mode, std::uint64_t seed,
                               std::size_t resample_half_width,
                               const DerivativeFilterSpec& deriv) {
    if (x.size() != xi.size()) throw std::invalid_argument("make_observation: length mismatch");
    if (sigma_w < 0.0) throw std::invalid_argument("make_observation: sigma_w must be >= 0");

    SampledSignal y;
    if (mode == ObservationMode::exact) {
        y = resample_at_jittered_instants(x, xi, resample_half_width);
    } else {
        y = x;
        const auto xp = bandlimited_derivative(x, deriv);
        for (std::size_t i = 0; i < y.size(); ++i)
            y.samples[i] += xi.xi[i] * xp.samples[i];
    }
    if (sigma_w > 0.0) {
        GaussianRng rng(seed);
        if (x.is_real) {
            for (auto& v : y.samples) v += cplx(sigma_w * rng(), 0.0);
        } else {
            const double s = sigma_w / std::sqrt(2.0);
            for (auto& v : y.samples) {
                double re = s * rng();
                double im = s * rng();
                v += cplx(re, im);
            }
        }
    }
    return y;
}

double jitter_percentage(const Ar1Params& params, double t_s) {
    if (t_s <= 0.0) throw std::invalid_argument("jitter_percentage: t_s must be positive");
    return params.sigma_xi() / t_s;
}

double sigma_eps_for_percentage(double percentage, double phi, double t_s) {
    if (percentage < 0.0) throw std::invalid_argument("sigma_eps_for_percentage: negative percentage");
    if (!(phi > 0.0 && phi < 1.0)) throw std::invalid_argument("sigma_eps_for_percentage: phi in (0,1)");
    return percentage * t_s * std::sqrt((1.0 - phi) * (1.0 + phi));
}

}  // namespace dejitter
