#include "dejitter/pilots.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dejitter {

double PilotSchedule::density() const {
    if (n_total == 0) return 0.0;
    return static_cast<double>(indices.size()) / static_cast<double>(n_total);
}

void PilotSchedule::validate() const {
    if (indices.empty()) throw std::invalid_argument("PilotSchedule: no pilots");
    for (std::size_t i = 0; i + 1 < indices.size(); ++i)
        if (indices[i + 1] != indices[i] + k_gap + 1)
            throw std::invalid_argument("PilotSchedule: indices not uniformly spaced");
    if (blocks.empty()) throw std::invalid_argument("PilotSchedule: no blocks");
    for (std::size_t b = 0; b + 1 < blocks.size(); ++b)
        if (blocks[b].second != blocks[b + 1].first)
            throw std::invalid_argument("PilotSchedule: blocks must share endpoints");
}

PilotSchedule build_schedule(std::size_t n_total, std::size_t k_gap, std::size_t block_size) {
    if (n_total < 2) throw std::invalid_argument("build_schedule: n_total too small");
    if (k_gap < 1) throw std::invalid_argument("build_schedule: k_gap must be >= 1");
    if (block_size < 2) throw std::invalid_argument("build_schedule: block_size must be >= 2");

    PilotSchedule sched;
    sched.n_total = n_total;
    sched.k_gap = k_gap;
    sched.block_size = block_size;
    for (std::size_t idx = 0; idx < n_total; idx += k_gap + 1) sched.indices.push_back(idx);

    const std::size_t p = sched.indices.size();
    std::size_t first = 0;
    while (true) {
        std::size_t last = std::min(first + block_size - 1, p - 1);
        sched.blocks.emplace_back(first, last);
        if (last >= p - 1) break;
        first = last;  // consecutive blocks share one endpoint
    }
    return sched;
}

PseudoMeasurements pseudo_measure(const SampledSignal& y, const SampledSignal& y_prime,
                                  std::span<const cplx> x_pilot, const PilotSchedule& sched,
                                  double deriv_floor) {
    if (y.size() != y_prime.size()) throw std::invalid_argument("pseudo_measure: length mismatch");
    if (x_pilot.size() != sched.indices.size())
        throw std::invalid_argument("pseudo_measure: x_pilot must cover every pilot");
    if (!sched.indices.empty() && sched.indices.back() >= y.size())
        throw std::invalid_argument("pseudo_measure: schedule exceeds record");

    if (deriv_floor <= 0.0) {
        // default 1e-3 * sigma_x', sigma_x'^2 = 4 pi^2 W^2 var / 3
        const double var_y = y.power();
        const double sxp = 2.0 * std::numbers::pi * y.bandlimit_w * std::sqrt(var_y / 3.0);
        deriv_floor = 1e-3 * sxp;
    }

    PseudoMeasurements pm;
    pm.deriv_floor = deriv_floor;
    pm.indices = sched.indices;
    const std::size_t p = sched.indices.size();
    pm.m.resize(p, 0.0);
    pm.weights_basis.resize(p, 0.0);
    pm.reliable.assign(p, true);
    for (std::size_t c = 0; c < p; ++c) {
        const std::size_t idx = sched.indices[c];
        const cplx dy = y.samples[idx] - x_pilot[c];
        const cplx dp = y_prime.samples[idx];
        const double mag = std::abs(dp);
        pm.weights_basis[c] = mag;
        if (mag < deriv_floor) {
            pm.reliable[c] = false;
            ++pm.flagged_count;
            continue;
        }
        // real least-squares solution of xi * y' ~ (y - x)
        pm.m[c] = (dy.real() * dp.real() + dy.imag() * dp.imag()) / (mag * mag);
        if (!std::isfinite(pm.m[c])) {
            pm.reliable[c] = false;
            pm.m[c] = 0.0;
            ++pm.flagged_count;
        }
    }
    return pm;
}

std::vector<cplx> gather_pilot_values(const SampledSignal& x, const PilotSchedule& sched) {
    std::vector<cplx> out;
    out.reserve(sched.indices.size());
    for (std::size_t idx : sched.indices) {
        if (idx >= x.size()) throw std::invalid_argument("gather_pilot_values: index out of range");
        out.push_back(x.samples[idx]);
    }
    return out;
}

}  // namespace dejitter
