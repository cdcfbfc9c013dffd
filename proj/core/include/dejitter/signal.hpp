#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dejitter/types.hpp"

namespace dejitter {

enum class DerivativeWindow { rectangular, hann };

/// Truncation of the ideal bandlimited derivative filter h_k = (-1)^k / k.
struct DerivativeFilterSpec {
    std::size_t half_length = 512;
    DerivativeWindow window = DerivativeWindow::hann;

    void validate() const;
};

/// Synthesizes a zero-mean stationary Gaussian sequence with flat spectrum
/// on |f| <= w by brickwall-filtering white Gaussian noise in the frequency
/// domain (circular on the full record). The output variance equals `power`
/// in expectation; callers should trim a guard margin before computing
/// metrics (edge/wraparound effects).
SampledSignal generate_bandlimited_gaussian(std::size_t n, double t_s, double w_hz,
                                            double power, std::uint64_t seed,
                                            bool real_valued = true);

/// Evaluates x(n t_s + xi_n) by the Whittaker-Shannon sinc sum truncated to
/// `half_width` terms on each side; edge samples use the available terms.
SampledSignal resample_at_jittered_instants(const SampledSignal& x, const JitterTrace& xi,
                                            std::size_t half_width = 512);

/// Discrete bandlimited derivative (Dx)_n = (1/t_s) sum_k h_k x_{n-k} with a
/// windowed truncation of h_k. Output keeps t_s and W.
SampledSignal bandlimited_derivative(const SampledSignal& x,
                                     const DerivativeFilterSpec& spec = {});

struct GpFillResult {
    SampledSignal signal;
    std::vector<double> residuals;  ///< RMS on the known set, one per iteration
    bool converged = true;          ///< false if stalled 10 iterations in a row
};

/// Gerchberg-Papoulis alternating projections: reimpose known samples, then
/// project onto the bandlimit. Requires known fraction > 2 W t_s.
GpFillResult gerchberg_papoulis_fill(const SampledSignal& y,
                                     std::span<const std::size_t> known_mask,
                                     std::size_t iterations);

}  // namespace dejitter
