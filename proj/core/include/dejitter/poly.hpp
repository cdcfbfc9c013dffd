#pragma once

#include <span>
#include <vector>

#include "dejitter/pilots.hpp"
#include "dejitter/types.hpp"

namespace dejitter {

struct PolyConfig {
    int degree = 4;
    std::size_t block_size = 500;  ///< pilots per block, >= degree + 2
    double ridge = 0.0;

    void validate() const;
};

/// One weighted least-squares block fit in centered/scaled local time.
struct BlockFit {
    std::vector<double> beta;  ///< coefficients in the scaled basis
    double cond = 0.0;         ///< condition number of sqrt(W) M
    std::size_t used_pilots = 0;
    bool ridged = false;   ///< rank-deficient fit fell back to ridge
    bool skipped = false;  ///< no usable pilots; block outputs xi_hat = 0
};

/// Weighted LS fit of a degree-d polynomial to pseudo-measurements at local
/// times `t` (already mapped to [-1, 1]) with weights w (= y'^2, zero for
/// flagged pilots). Falls back to a ridge-regularized solve when
/// rank-deficient and reports it.
BlockFit fit_block(std::span<const double> m, std::span<const double> w,
                   std::span<const double> t, const PolyConfig& cfg);

/// Evaluates a fitted block polynomial at scaled local time u.
double eval_block(const BlockFit& fit, double u);

struct DejitterOutput {
    JitterTrace xi_hat;
    SampledSignal x_hat;
    std::vector<BlockFit> block_diagnostics;
    std::size_t flagged_pilots = 0;
};

/// Algorithm: per-block heteroscedastic WLS polynomial fit of the pilot
/// pseudo-measurements, evaluated at every sample of the owning block
/// (block 1 owns [0, last pilot of block 1]; block l > 1 owns
/// (first pilot, last pilot]; the final block extends to the end of the
/// record), followed by x_hat = y - xi_hat .* y'.
DejitterOutput dejitter_poly(const SampledSignal& y, const SampledSignal& y_prime,
                             std::span<const cplx> x_pilot, const PilotSchedule& sched,
                             const PolyConfig& cfg, double deriv_floor = 0.0);

}  // namespace dejitter
