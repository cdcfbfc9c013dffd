#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace dejitter {

using cplx = std::complex<double>;

/// Uniformly sampled complex- or real-valued signal with its sampling
/// interval and one-sided bandlimit. The payload of real signals is stored
/// in the same complex buffer with zero imaginary parts.
struct SampledSignal {
    std::vector<cplx> samples;
    double t_s = 1.0;          ///< sampling interval [s]
    double bandlimit_w = 0.0;  ///< one-sided bandwidth W [Hz]
    bool is_real = true;

    std::size_t size() const { return samples.size(); }

    /// Throws std::invalid_argument if a type invariant is violated.
    void validate() const;

    /// Mean power (1/N) sum |x_n|^2 over [first, last).
    double power(std::size_t first, std::size_t last) const;
    double power() const { return power(0, samples.size()); }

    static SampledSignal from_real(std::vector<double> values, double t_s, double w_hz);
    std::vector<double> real_part() const;
};

/// AR(1) jitter dynamics and measurement-noise parameters.
/// Stationary jitter std is sigma_eps / sqrt(1 - phi^2).
struct Ar1Params {
    double phi = 0.0;        ///< pole, in (0,1)
    double sigma_eps = 0.0;  ///< innovation std [s]
    double sigma_w = 0.0;    ///< measurement-noise std [amplitude]

    double sigma_xi() const;   ///< stationary std [s]
    double sigma_xi2() const;  ///< stationary variance [s^2]
    void validate() const;
};

/// Jitter sequence (truth or estimate), one entry per sample. Estimators
/// attach per-sample variances in `cov`.
struct JitterTrace {
    std::vector<double> xi;  ///< [s]
    std::optional<std::vector<double>> cov;  ///< [s^2]
    std::size_t clamp_count = 0;

    std::size_t size() const { return xi.size(); }
};

}  // namespace dejitter
