#pragma once

#include <complex>
#include <vector>

namespace dejitter::fft {

/// In-order complex DFT, forward (negative exponent). Not normalized.
std::vector<std::complex<double>> forward(const std::vector<std::complex<double>>& in);

/// Inverse complex DFT, normalized by 1/N.
std::vector<std::complex<double>> inverse(const std::vector<std::complex<double>>& in);

/// Frequency of bin k for an N-point DFT at sampling interval t_s, in Hz,
/// mapped to (-f_s/2, f_s/2].
double bin_freq_hz(std::size_t k, std::size_t n, double t_s);

}  // namespace dejitter::fft
