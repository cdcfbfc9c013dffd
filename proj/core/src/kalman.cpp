#include "dejitter/kalman.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dejitter {

namespace {

/// Reliability flags per pilot, same floor convention as pseudo_measure.
std::vector<bool> reliability_flags(const SampledSignal& y, const SampledSignal& y_prime,
                                    const PilotSchedule& sched, double deriv_floor) {
    if (deriv_floor <= 0.0) {
        const double var_y = y.power();
        deriv_floor = 1e-3 * 2.0 * std::numbers::pi * y.bandlimit_w * std::sqrt(var_y / 3.0);
    }
    std::vector<bool> ok(sched.indices.size(), true);
    for (std::size_t c = 0; c < sched.indices.size(); ++c)
        if (std::abs(y_prime.samples[sched.indices[c]]) < deriv_floor) ok[c] = false;
    return ok;
}

}  // namespace

std::vector<KalmanState> kalman_forward(const SampledSignal& y, const SampledSignal& y_prime,
                                        std::span<const cplx> x_pilot, const PilotSchedule& sched,
                                        const Ar1Params& params, KalmanInit init,
                                        double deriv_floor) {
    params.validate();
    if (y.size() != y_prime.size()) throw std::invalid_argument("kalman_forward: length mismatch");
    if (x_pilot.size() != sched.indices.size())
        throw std::invalid_argument("kalman_forward: x_pilot must cover every pilot");
    if (init.variance < 0.0 && init.variance > -1e-300)
        throw std::invalid_argument("kalman_forward: negative init variance");

    const std::size_t n = y.size();
    const double phi = params.phi;
    const double q = params.sigma_eps * params.sigma_eps;
    const double r = params.sigma_w * params.sigma_w;
    const double p0 = (init.variance > 0.0) ? init.variance : params.sigma_xi2();

    const auto ok = reliability_flags(y, y_prime, sched, deriv_floor);
    std::vector<std::ptrdiff_t> pilot_at(n, -1);
    for (std::size_t c = 0; c < sched.indices.size(); ++c)
        if (ok[c]) pilot_at[sched.indices[c]] = static_cast<std::ptrdiff_t>(c);

    std::vector<KalmanState> states(n);
    double x_prev = init.mean;
    double p_prev = p0;
    for (std::size_t i = 0; i < n; ++i) {
        KalmanState s;
        if (i == 0) {
            s.xi_pred = init.mean;
            s.p_pred = p0;
        } else {
            s.xi_pred = phi * x_prev;
            s.p_pred = phi * phi * p_prev + q;
        }
        const std::ptrdiff_t c = pilot_at[i];
        // S = 0 can only happen with sigma_w = 0 and a fully collapsed prior;
        // the measurement carries no new information then, so skip it
        if (c >= 0 && std::norm(y_prime.samples[i]) * s.p_pred + r > 0.0) {
            const cplx h = y_prime.samples[i];
            const cplx innov = y.samples[i] - x_pilot[static_cast<std::size_t>(c)] - h * s.xi_pred;
            const double s_var = std::norm(h) * s.p_pred + r;
            if (!std::isfinite(innov.real()) || !std::isfinite(innov.imag()) ||
                !std::isfinite(s_var))
                throw std::runtime_error("kalman_forward: non-finite innovation at index " +
                                         std::to_string(i));
            const cplx gain = s.p_pred * std::conj(h) / s_var;
            // xi is real; keep the real part of the complex update
            s.xi_filt = s.xi_pred + (gain * innov).real();
            s.p_filt = s.p_pred - (gain * h).real() * s.p_pred;
            s.gain = gain;
            s.innovation = innov;
            s.innovation_var = s_var;
            s.updated = true;
        } else {
            s.xi_filt = s.xi_pred;
            s.p_filt = s.p_pred;
        }
        states[i] = s;
        x_prev = s.xi_filt;
        p_prev = s.p_filt;
    }
    return states;
}

SmootherOutput kalman_smooth(std::span<const KalmanState> forward, const Ar1Params& params,
                             const SampledSignal& y, const SampledSignal& y_prime) {
    if (forward.empty()) throw std::invalid_argument("kalman_smooth: empty forward pass");
    if (forward.size() != y.size() || y.size() != y_prime.size())
        throw std::invalid_argument("kalman_smooth: length mismatch");

    const std::size_t n = forward.size();
    const double phi = params.phi;

    SmootherOutput out;
    out.xi_smooth.xi.resize(n);
    out.xi_smooth.cov = std::vector<double>(n);
    auto& xs = out.xi_smooth.xi;
    auto& ps = *out.xi_smooth.cov;

    xs[n - 1] = forward[n - 1].xi_filt;
    ps[n - 1] = forward[n - 1].p_filt;
    for (std::size_t i = n - 1; i-- > 0;) {
        const double c = (forward[i + 1].p_pred > 0.0)
                             ? phi * forward[i].p_filt / forward[i + 1].p_pred
                             : 0.0;
        xs[i] = forward[i].xi_filt + c * (xs[i + 1] - forward[i + 1].xi_pred);
        ps[i] = forward[i].p_filt + c * c * (ps[i + 1] - forward[i + 1].p_pred);
    }

    out.x_hat = y;
    for (std::size_t i = 0; i < n; ++i)
        out.x_hat.samples[i] = y.samples[i] - xs[i] * y_prime.samples[i];

    // innovations log-likelihood (real payload form)
    double ll = 0.0;
    for (const auto& s : forward) {
        if (!s.updated) continue;
        ll += -0.5 * std::log(2.0 * std::numbers::pi * s.innovation_var) -
              0.5 * std::norm(s.innovation) / s.innovation_var;
    }
    out.loglik = ll;
    return out;
}

SmootherOutput dejitter_kalman(const SampledSignal& y, const SampledSignal& y_prime,
                               std::span<const cplx> x_pilot, const PilotSchedule& sched,
                               const Ar1Params& params, KalmanInit init, double deriv_floor) {
    const auto fwd = kalman_forward(y, y_prime, x_pilot, sched, params, init, deriv_floor);
    return kalman_smooth(fwd, params, y, y_prime);
}

}  // namespace dejitter
