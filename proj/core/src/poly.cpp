#include "dejitter/poly.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace dejitter {

void PolyConfig::validate() const {
    if (degree < 0) throw std::invalid_argument("PolyConfig: degree must be >= 0");
    if (block_size < static_cast<std::size_t>(degree) + 2)
        throw std::invalid_argument("PolyConfig: block_size must be >= degree + 2");
    if (ridge < 0.0) throw std::invalid_argument("PolyConfig: ridge must be >= 0");
}

BlockFit fit_block(std::span<const double> m, std::span<const double> w,
                   std::span<const double> t, const PolyConfig& cfg) {
    if (m.size() != w.size() || m.size() != t.size())
        throw std::invalid_argument("fit_block: size mismatch");
    const std::size_t c = m.size();
    const int p = cfg.degree + 1;

    BlockFit fit;
    for (std::size_t i = 0; i < c; ++i)
        if (w[i] > 0.0) ++fit.used_pilots;
    if (fit.used_pilots == 0) {
        fit.skipped = true;
        return fit;
    }

    Eigen::MatrixXd a(c, p);  // sqrt(W) * Vandermonde
    Eigen::VectorXd b(c);
    for (std::size_t i = 0; i < c; ++i) {
        const double sw = std::sqrt(w[i]);
        double pw = 1.0;
        for (int j = 0; j < p; ++j) {
            a(static_cast<Eigen::Index>(i), j) = sw * pw;
            pw *= t[i];
        }
        b(static_cast<Eigen::Index>(i)) = sw * m[i];
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    fit.cond = (smin > 0.0) ? smax / smin : std::numeric_limits<double>::infinity();

    const bool deficient = fit.used_pilots < static_cast<std::size_t>(p) ||
                           !(smin > smax * 1e-12) || !std::isfinite(fit.cond);
    Eigen::VectorXd beta;
    if (!deficient && cfg.ridge == 0.0) {
        beta = svd.solve(b);
    } else {
        fit.ridged = true;
        const Eigen::MatrixXd g = a.transpose() * a;
        double lambda = cfg.ridge;
        if (lambda <= 0.0) lambda = 1e-10 * g.trace() / p + 1e-300;
        const Eigen::MatrixXd reg =
            g + lambda * Eigen::MatrixXd::Identity(p, p);
        beta = reg.ldlt().solve(a.transpose() * b);
    }
    fit.beta.assign(beta.data(), beta.data() + p);
    for (double v : fit.beta)
        if (!std::isfinite(v)) {
            fit.skipped = true;
            fit.beta.clear();
            break;
        }
    return fit;
}

double eval_block(const BlockFit& fit, double u) {
    if (fit.beta.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t j = fit.beta.size(); j-- > 0;) acc = acc * u + fit.beta[j];
    return acc;
}

DejitterOutput dejitter_poly(const SampledSignal& y, const SampledSignal& y_prime,
                             std::span<const cplx> x_pilot, const PilotSchedule& sched,
                             const PolyConfig& cfg, double deriv_floor) {
    cfg.validate();
    sched.validate();
    if (sched.n_total != y.size())
        throw std::invalid_argument("dejitter_poly: schedule does not cover the record");

    const auto pm = pseudo_measure(y, y_prime, x_pilot, sched, deriv_floor);
    const std::size_t n = y.size();

    DejitterOutput out;
    out.flagged_pilots = pm.flagged_count;
    out.xi_hat.xi.assign(n, 0.0);
    out.block_diagnostics.reserve(sched.blocks.size());

    for (std::size_t b = 0; b < sched.blocks.size(); ++b) {
        const auto [first, last] = sched.blocks[b];
        const std::size_t idx_first = sched.indices[first];
        const std::size_t idx_last = sched.indices[last];
        const double span = static_cast<double>(idx_last - idx_first);

        BlockFit fit;
        if (last == first || span <= 0.0) {
            fit.skipped = true;  // degenerate single-pilot block
        } else {
            std::vector<double> mv, wv, tv;
            mv.reserve(last - first + 1);
            for (std::size_t c = first; c <= last; ++c) {
                mv.push_back(pm.m[c]);
                const double wb = pm.weights_basis[c];
                wv.push_back(pm.reliable[c] ? wb * wb : 0.0);
                tv.push_back(2.0 * static_cast<double>(sched.indices[c] - idx_first) / span - 1.0);
            }
            fit = fit_block(mv, wv, tv, cfg);
        }

        // ownership: block 0 owns [0, idx_last]; later blocks (idx_first, idx_last];
        // the final block extends to the end of the record
        const std::size_t own_lo = (b == 0) ? 0 : idx_first + 1;
        const std::size_t own_hi = (b + 1 == sched.blocks.size()) ? n - 1 : idx_last;
        if (!fit.skipped) {
            for (std::size_t i = own_lo; i <= own_hi; ++i) {
                const double u =
                    2.0 * (static_cast<double>(i) - static_cast<double>(idx_first)) / span - 1.0;
                out.xi_hat.xi[i] = eval_block(fit, u);
            }
        }
        out.block_diagnostics.push_back(std::move(fit));
    }

    out.x_hat = y;
    for (std::size_t i = 0; i < n; ++i)
        out.x_hat.samples[i] = y.samples[i] - out.xi_hat.xi[i] * y_prime.samples[i];
    return out;
}

}  // namespace dejitter
