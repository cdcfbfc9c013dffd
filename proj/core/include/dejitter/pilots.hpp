#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dejitter/types.hpp"

namespace dejitter {

/// Uniform pilot schedule I = {n (K+1) : n = 0, 1, ...} (0-based), blocked
/// into runs of `block_size` pilots where consecutive blocks share one
/// endpoint pilot.
struct PilotSchedule {
    std::size_t n_total = 0;
    std::size_t k_gap = 0;       ///< data samples between pilots
    std::size_t block_size = 0;  ///< pilots per block (last block may be shorter)
    std::vector<std::size_t> indices;  ///< sorted pilot sample indices
    /// [first, last] pilot ordinals (into `indices`) per block, inclusive.
    std::vector<std::pair<std::size_t, std::size_t>> blocks;

    double density() const;
    std::size_t block_count() const { return blocks.size(); }
    void validate() const;
};

PilotSchedule build_schedule(std::size_t n_total, std::size_t k_gap,
                             std::size_t block_size);

/// Noisy jitter pseudo-measurements m_n = (y_n - x_n) / y'_n at pilots.
/// For complex payloads m_n = Re[(y_n - x_n) conj(y'_n)] / |y'_n|^2 (the
/// least-squares real solution of xi y' ~ y - x). Pilots whose |y'| falls
/// below the derivative floor are flagged unreliable, not zeroed.
struct PseudoMeasurements {
    std::vector<std::size_t> indices;      ///< pilot sample indices
    std::vector<double> m;                 ///< [s]
    std::vector<double> weights_basis;     ///< |y'| at those pilots
    std::vector<bool> reliable;
    std::size_t flagged_count = 0;
    double deriv_floor = 0.0;              ///< the floor actually applied
};

/// deriv_floor <= 0 selects the default 1e-3 * sigma_x' with sigma_x'
/// estimated as 2 pi W sqrt(var(y) / 3).
PseudoMeasurements pseudo_measure(const SampledSignal& y, const SampledSignal& y_prime,
                                  std::span<const cplx> x_pilot, const PilotSchedule& sched,
                                  double deriv_floor = 0.0);

/// Gathers the clean reference values at pilot indices.
std::vector<cplx> gather_pilot_values(const SampledSignal& x, const PilotSchedule& sched);

}  // namespace dejitter
