#include "dejitter/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace dejitter::fft {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

std::vector<std::complex<double>> transform(const std::vector<std::complex<double>>& in,
                                            int sign) {
    if (in.empty()) throw std::invalid_argument("fft: empty input");
    const std::size_t n = in.size();
    std::vector<std::complex<double>> out(n);
    auto* src = reinterpret_cast<fftw_complex*>(
        const_cast<std::complex<double>*>(in.data()));
    auto* dst = reinterpret_cast<fftw_complex*>(out.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        // FFTW_ESTIMATE leaves the input untouched during planning.
        plan = fftw_plan_dft_1d(static_cast<int>(n), src, dst, sign, FFTW_ESTIMATE);
    }
    if (!plan) throw std::runtime_error("fft: planning failed");
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

}  // namespace

std::vector<std::complex<double>> forward(const std::vector<std::complex<double>>& in) {
    return transform(in, FFTW_FORWARD);
}

std::vector<std::complex<double>> inverse(const std::vector<std::complex<double>>& in) {
    auto out = transform(in, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(in.size());
    for (auto& v : out) v *= scale;
    return out;
}

double bin_freq_hz(std::size_t k, std::size_t n, double t_s) {
    const double fs = 1.0 / t_s;
    double f = static_cast<double>(k) / static_cast<double>(n) * fs;
    if (f > 0.5 * fs) f -= fs;
    return f;
}

}  // namespace dejitter::fft
