#pragma once

#include <span>
#include <vector>

#include "dejitter/quadrature.hpp"
#include "dejitter/types.hpp"

namespace dejitter {

/// Default interior trim: 2 * derivative half_length samples per edge.
inline constexpr std::size_t kDefaultMetricGuard = 1024;

/// Closed-form SINADR in dB:
/// 10 log10[3 (1-phi^2) sigma_x^2 / (3 (1-phi^2) sigma_w^2 + 4 pi^2 W^2 sigma_eps^2 sigma_x^2)].
double sinadr_analytic_db(const Ar1Params& params, double sigma_x2, double w_hz);

/// Empirical SINADR of x_test against the clean reference, interior samples
/// only; a zero residual returns the +200 dB sentinel.
double sinadr_empirical_db(const SampledSignal& x_ref, const SampledSignal& x_test,
                           std::size_t guard = kDefaultMetricGuard);

/// Noise-to-distortion ratio 10 log10(var(w) / var(xi x')); sigma_w = 0
/// returns -inf.
double ndr_db(const Ar1Params& params, double sigma_x2, double w_hz);

/// Jitter-induced distortion power var(xi x') = sigma_xi^2 * 4 pi^2 W^2 sigma_x^2 / 3.
double jitter_distortion_power(const Ar1Params& params, double sigma_x2, double w_hz);

/// Measurement-noise std achieving the requested NDR (dB).
double sigma_w_for_ndr(double ndr_db_target, const Ar1Params& params, double sigma_x2,
                       double w_hz);

/// Measurement-noise std achieving the requested SINADR (dB). Throws if the
/// target exceeds the jitter-limited ceiling.
double sigma_w_for_sinadr(double sinadr_db_target, const Ar1Params& params, double sigma_x2,
                          double w_hz);

/// EVM = sqrt(sum |est - ref|^2 / sum |ref|^2). No rescaling applied here.
double evm(std::span<const cplx> ref_symbols, std::span<const cplx> est_symbols);

/// Delta EVM = 20 log10(EVM_uncomp / EVM_comp); +inf sentinel when only the
/// compensated EVM vanishes, 0 when both vanish.
double delta_evm_db(double evm_uncomp, double evm_comp);

/// Complex least-squares scale alpha minimizing |ref - alpha est|^2.
cplx ls_scale(std::span<const cplx> ref, std::span<const cplx> est);

struct WelchSpectrum {
    std::vector<double> freq_hz;  ///< bin centers in (-f_s/2, f_s/2]
    std::vector<double> psd;      ///< two-sided density [power/Hz]
    double df = 0.0;

    double total_power() const;
    /// Mean PSD over |f| in [f_lo, f_hi).
    double band_power(double f_lo, double f_hi) const;
};

/// Hann-windowed Welch periodogram. `overlap` is the segment overlap
/// fraction in [0, 0.9].
WelchSpectrum psd_welch(const SampledSignal& x, std::size_t segment, double overlap = 0.5);

/// Proposition-1 variance ratio var(xi^2 x'') / var(xi x') = (36 pi^2 / 5) sigma_xi^2 W^2.
double prop1_ratio(const Ar1Params& params, double w_hz, double t_s);

/// Proposition-2 closed form for var(D(xi .* x')):
/// (sigma_xi^2 / t_s^2) * (3 (1-phi^2) / (32 pi^4 (W t_s)^3)) * I * sigma_x'^2,
/// with I the wrap-aware double integral evaluated by nested adaptive
/// quadrature split at the indicator boundary.
QuadResult prop2_variance(const Ar1Params& params, double w_hz, double t_s,
                          double quad_tol, double sigma_x2 = 1.0);

/// Variance of the bandlimited derivative of white noise: pi^2 sigma_w^2 / (3 t_s^2).
double violet_noise_variance(double sigma_w, double t_s);

/// Out-of-band spectral integral
/// I(nu) = int_{-omega_bar}^{omega_bar} w^2 / (1 + phi^2 - 2 phi cos(nu - w)) dw.
double oob_integral(double nu, double omega_bar, double phi);

/// Runs d/dB conversions used throughout.
double db_to_linear(double db);
double linear_to_db(double linear);

}  // namespace dejitter
