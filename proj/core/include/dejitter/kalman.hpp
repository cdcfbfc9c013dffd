#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dejitter/pilots.hpp"
#include "dejitter/types.hpp"

namespace dejitter {

/// Per-step filter state. At non-pilot steps the measurement update is
/// skipped entirely (equivalent to R_n = +inf), so gain = 0 there.
struct KalmanState {
    double xi_pred = 0.0;
    double xi_filt = 0.0;
    double p_pred = 0.0;
    double p_filt = 0.0;
    cplx gain{0.0, 0.0};
    cplx innovation{0.0, 0.0};
    double innovation_var = 0.0;
    bool updated = false;
};

struct KalmanInit {
    double mean = 0.0;
    double variance = 0.0;  ///< <= 0 selects the stationary prior sigma_xi^2
};

/// Forward pass of the missing-data Kalman filter for the linearized model
/// xi_n = phi xi_{n-1} + eps_n, y_n = x_n + xi_n y'_n + w_n, with
/// measurement updates only at (reliable) pilot indices. Complex payloads
/// use S = |H|^2 P + R and the state is projected to its real part after
/// each update.
std::vector<KalmanState> kalman_forward(const SampledSignal& y, const SampledSignal& y_prime,
                                        std::span<const cplx> x_pilot, const PilotSchedule& sched,
                                        const Ar1Params& params, KalmanInit init = {},
                                        double deriv_floor = 0.0);

struct SmootherOutput {
    JitterTrace xi_smooth;  ///< with per-index variance in cov
    SampledSignal x_hat;
    std::optional<double> loglik;  ///< innovations log-likelihood of the forward pass
};

/// Rauch-Tung-Striebel backward pass; x_hat = y - xi_smooth .* y'.
SmootherOutput kalman_smooth(std::span<const KalmanState> forward, const Ar1Params& params,
                             const SampledSignal& y, const SampledSignal& y_prime);

/// Convenience wrapper: forward + smooth.
SmootherOutput dejitter_kalman(const SampledSignal& y, const SampledSignal& y_prime,
                               std::span<const cplx> x_pilot, const PilotSchedule& sched,
                               const Ar1Params& params, KalmanInit init = {},
                               double deriv_floor = 0.0);

}  // namespace dejitter
