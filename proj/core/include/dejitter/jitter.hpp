#pragma once

#include <cstdint>

#include "dejitter/signal.hpp"
#include "dejitter/types.hpp"

namespace dejitter {

/// Stationary AR(1) path xi_n = phi xi_{n-1} + eps_n with
/// xi_0 ~ N(0, sigma_eps^2/(1-phi^2)). Values are clamped to
/// +/- 0.49 t_s (clamp_count reports how often).
JitterTrace ar1_generate(const Ar1Params& params, std::size_t n, double t_s,
                         std::uint64_t seed);

/// Closed-form AR(1) power spectral density sigma_eps^2 / (1 + phi^2 - 2 phi cos w),
/// omega in [-pi, pi].
double ar1_psd(const Ar1Params& params, double omega);

enum class ObservationMode { exact, linearized };

/// Builds the observed signal y. Exact mode resamples x at the jittered
/// instants (Whittaker-Shannon); linearized mode forms x + xi .* Dx. White
/// measurement noise of std sigma_w is added in both modes (circularly
/// symmetric for complex payloads).
SampledSignal make_observation(const SampledSignal& x, const JitterTrace& xi,
                               double sigma_w, ObservationMode mode, std::uint64_t seed,
                               std::size_t resample_half_width = 512,
                               const DerivativeFilterSpec& deriv = {});

/// sigma_xi / t_s.
double jitter_percentage(const Ar1Params& params, double t_s);

/// Innovation std that yields the requested jitter percentage at this phi.
double sigma_eps_for_percentage(double percentage, double phi, double t_s);

}  // namespace dejitter
