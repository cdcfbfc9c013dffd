#include "dejitter/mle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "dejitter/optimize.hpp"
#include "dejitter/rng.hpp"

namespace dejitter {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// log(1 - phi^(2g)) evaluated without cancellation for phi near 1.
double log_one_minus_pow2(double phi, double g) {
    return std::log(-std::expm1(2.0 * g * std::log(phi)));
}

/// Tridiagonal precision of a zero-mean Gauss-Markov vector with stationary
/// variance sig2 and per-step correlations r_i = phi^{gaps_i}.
struct Precision {
    std::vector<double> diag, off;
    double logdet_sigma = 0.0;  // of the covariance, not the precision
};

Precision markov_precision(double phi, double sig2, const std::vector<std::size_t>& gaps) {
    const std::size_t m = gaps.size() + 1;
    Precision p;
    p.diag.assign(m, 0.0);
    p.off.assign(gaps.size(), 0.0);
    p.logdet_sigma = static_cast<double>(m) * std::log(sig2);
    if (m == 1) {
        p.diag[0] = 1.0 / sig2;
        return p;
    }
    // logdet(Sigma) = m log sig2 + sum log(1 - r_i^2)
    std::vector<double> r(gaps.size()), one_minus_r2(gaps.size());
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        const double g = static_cast<double>(gaps[i]);
        r[i] = std::exp(g * std::log(phi));
        one_minus_r2[i] = -std::expm1(2.0 * g * std::log(phi));
        p.logdet_sigma += std::log(one_minus_r2[i]);
    }
    for (std::size_t i = 0; i < m; ++i) {
        double d;
        if (i == 0) {
            d = 1.0 / (sig2 * one_minus_r2[0]);
        } else if (i + 1 == m) {
            d = 1.0 / (sig2 * one_minus_r2[i - 1]);
        } else {
            d = 1.0 / (sig2 * one_minus_r2[i - 1]) + r[i] * r[i] / (sig2 * one_minus_r2[i]);
        }
        p.diag[i] = d;
    }
    for (std::size_t i = 0; i < gaps.size(); ++i)
        p.off[i] = -r[i] / (sig2 * one_minus_r2[i]);
    return p;
}

}  // namespace

bool MleBounds::degenerate() const {
    return sigma_eps_lo == sigma_eps_hi && phi_lo == phi_hi && sigma_w_lo == sigma_w_hi;
}

void MleProblem::validate() const {
    if (m_tilde.size() < 3) throw std::invalid_argument("MleProblem: need at least 3 measurements");
    if (deriv_sq.size() != m_tilde.size())
        throw std::invalid_argument("MleProblem: deriv_sq size mismatch");
    if (!gaps.empty() && gaps.size() != m_tilde.size() - 1)
        throw std::invalid_argument("MleProblem: gaps size mismatch");
    if (!(bounds.phi_lo > 0.0 && bounds.phi_hi < 1.0 && bounds.phi_lo <= bounds.phi_hi))
        throw std::invalid_argument("MleProblem: phi bounds must be within (0,1)");
    for (double d : deriv_sq)
        if (!(d > 0.0)) throw std::invalid_argument("MleProblem: deriv_sq entries must be positive");
}

MleProblem make_mle_problem(const PseudoMeasurements& pm, std::size_t k_gap, int starts) {
    MleProblem prob;
    prob.k_gap = k_gap;
    prob.starts = starts;
    std::size_t prev_idx = 0;
    bool have_prev = false;
    for (std::size_t c = 0; c < pm.m.size(); ++c) {
        if (!pm.reliable[c]) continue;  // removal merges the adjacent gaps
        if (have_prev) prob.gaps.push_back(pm.indices[c] - prev_idx);
        prob.m_tilde.push_back(pm.m[c]);
        prob.deriv_sq.push_back(pm.weights_basis[c] * pm.weights_basis[c]);
        prev_idx = pm.indices[c];
        have_prev = true;
    }
    const std::size_t m = prob.m_tilde.size();
    if (m >= 2) {
        double mean = 0.0;
        for (double v : prob.m_tilde) mean += v;
        mean /= static_cast<double>(m);
        double var = 0.0;
        for (double v : prob.m_tilde) var += (v - mean) * (v - mean);
        var /= static_cast<double>(m);
        const double s = std::sqrt(std::max(var, 1e-300));
        std::vector<double> d2 = prob.deriv_sq;
        std::nth_element(d2.begin(), d2.begin() + d2.size() / 2, d2.end());
        const double med_abs = std::sqrt(d2[d2.size() / 2]);
        prob.bounds.sigma_eps_lo = 1e-6 * s;
        prob.bounds.sigma_eps_hi = 4.0 * s;
        prob.bounds.sigma_w_lo = 1e-6 * s * med_abs;
        prob.bounds.sigma_w_hi = 4.0 * s * med_abs;
    }
    return prob;
}

double kms_logdet(double phi, double sigma_eps, std::size_t k_gap, std::size_t m) {
    if (!(phi > 0.0 && phi < 1.0)) throw std::invalid_argument("kms_logdet: phi in (0,1)");
    if (sigma_eps <= 0.0) throw std::invalid_argument("kms_logdet: sigma_eps must be positive");
    if (m == 0) throw std::invalid_argument("kms_logdet: m must be >= 1");
    const double log_sig2 =
        2.0 * std::log(sigma_eps) - std::log1p(-phi * phi);  // log sigma_xi^2
    double out = static_cast<double>(m) * log_sig2;
    if (m > 1)
        out += static_cast<double>(m - 1) *
               log_one_minus_pow2(phi, static_cast<double>(k_gap + 1));
    return out;
}

Tridiagonal kms_inverse_tridiag(double phi, double sigma_eps, std::size_t k_gap,
                                std::size_t m) {
    if (!(phi > 0.0 && phi < 1.0)) throw std::invalid_argument("kms_inverse_tridiag: phi in (0,1)");
    if (sigma_eps <= 0.0) throw std::invalid_argument("kms_inverse_tridiag: sigma_eps positive");
    if (m == 0) throw std::invalid_argument("kms_inverse_tridiag: m must be >= 1");

    Tridiagonal t;
    const double sig2 = sigma_eps * sigma_eps / ((1.0 - phi) * (1.0 + phi));
    if (m == 1) {
        t.diag = {1.0 / sig2};
        return t;
    }
    const double g = static_cast<double>(k_gap + 1);
    const double rho = std::exp(g * std::log(phi));
    const double one_minus_rho2 = -std::expm1(2.0 * g * std::log(phi));
    const double scale = 1.0 / (sig2 * one_minus_rho2);
    t.diag.assign(m, scale * (1.0 + rho * rho));
    t.diag.front() = scale;
    t.diag.back() = scale;
    t.off.assign(m - 1, -scale * rho);
    return t;
}

double neg_loglik_fast(const MleProblem& problem, const Ar1Params& theta) {
    const std::size_t m = problem.m_tilde.size();
    if (m == 0) return kInf;
    const double phi = theta.phi;
    const double se = theta.sigma_eps;
    const double sw = theta.sigma_w;
    if (!(phi > 0.0 && phi < 1.0) || !(se > 0.0) || sw < 0.0) return kInf;
    const double sig2 = se * se / ((1.0 - phi) * (1.0 + phi));
    if (!std::isfinite(sig2) || sig2 <= 0.0) return kInf;

    static const std::vector<std::size_t> kNoGaps;
    std::vector<std::size_t> uniform;
    const std::vector<std::size_t>* gaps = &problem.gaps;
    if (problem.gaps.empty() && m > 1) {
        uniform.assign(m - 1, problem.k_gap + 1);
        gaps = &uniform;
    }

    const auto prec = markov_precision(phi, sig2, *gaps);
    const auto& qd = prec.diag;
    const auto& qo = prec.off;

    // D = diag(sigma_w^2 / |y'|^2)
    std::vector<double> dvec(m);
    for (std::size_t i = 0; i < m; ++i) dvec[i] = sw * sw / problem.deriv_sq[i];

    // log det(I + Q D) by the three-term recursion, rescaled in log space
    double logdet_t = 0.0;
    {
        double fm2 = 1.0, fm1 = 1.0 + qd[0] * dvec[0];
        double log_scale = 0.0;
        for (std::size_t i = 1; i < m; ++i) {
            const double upper = qo[i - 1] * dvec[i];      // T[i-1][i]
            const double lower = qo[i - 1] * dvec[i - 1];  // T[i][i-1]
            double f = (1.0 + qd[i] * dvec[i]) * fm1 - upper * lower * fm2;
            fm2 = fm1;
            fm1 = f;
            while (std::abs(fm1) > 1e150) {
                fm1 *= 1e-150;
                fm2 *= 1e-150;
                log_scale += 150.0 * std::numbers::ln10;
            }
            while (fm1 != 0.0 && std::abs(fm1) < 1e-150) {
                fm1 *= 1e150;
                fm2 *= 1e150;
                log_scale -= 150.0 * std::numbers::ln10;
            }
        }
        if (!(fm1 > 0.0)) return kInf;  // I + QD is positive definite in exact arithmetic
        logdet_t = std::log(fm1) + log_scale;
    }

    // quadratic form via Woodbury: m^T Q m - (Qm)^T (D^{-1} + Q)^{-1} (Qm)
    const auto& mv = problem.m_tilde;
    std::vector<double> u(m);
    for (std::size_t i = 0; i < m; ++i) {
        double acc = qd[i] * mv[i];
        if (i > 0) acc += qo[i - 1] * mv[i - 1];
        if (i + 1 < m) acc += qo[i] * mv[i + 1];
        u[i] = acc;
    }
    double quad = 0.0;
    for (std::size_t i = 0; i < m; ++i) quad += mv[i] * u[i];

    if (sw > 0.0) {
        // LDL^T solve of the SPD tridiagonal (D^{-1} + Q) z = u
        std::vector<double> d(m), l(m > 1 ? m - 1 : 0), z(m);
        d[0] = problem.deriv_sq[0] / (sw * sw) + qd[0];
        if (!(d[0] > 0.0)) return kInf;
        for (std::size_t i = 1; i < m; ++i) {
            l[i - 1] = qo[i - 1] / d[i - 1];
            d[i] = problem.deriv_sq[i] / (sw * sw) + qd[i] - l[i - 1] * qo[i - 1];
            if (!(d[i] > 0.0)) return kInf;
        }
        z[0] = u[0];
        for (std::size_t i = 1; i < m; ++i) z[i] = u[i] - l[i - 1] * z[i - 1];
        for (std::size_t i = 0; i < m; ++i) z[i] /= d[i];
        for (std::size_t i = m - 1; i-- > 0;) z[i] -= l[i] * z[i + 1];
        double corr = 0.0;
        for (std::size_t i = 0; i < m; ++i) corr += u[i] * z[i];
        quad -= corr;
    }

    const double ll = 0.5 * static_cast<double>(m) * std::log(2.0 * std::numbers::pi) +
                      0.5 * (prec.logdet_sigma + logdet_t) + 0.5 * quad;
    return std::isfinite(ll) ? ll : kInf;
}

namespace {

struct BoxTransform {
    MleBounds b;

    static double squash(double t) { return 1.0 / (1.0 + std::exp(-t)); }
    static double unsquash(double u) {
        u = std::clamp(u, 1e-12, 1.0 - 1e-12);
        return std::log(u / (1.0 - u));
    }

    Ar1Params to_theta(const std::vector<double>& t) const {
        Ar1Params th;
        th.sigma_eps = (b.sigma_eps_lo == b.sigma_eps_hi)
                           ? b.sigma_eps_lo
                           : std::exp(std::log(b.sigma_eps_lo) +
                                      squash(t[0]) * (std::log(b.sigma_eps_hi) -
                                                      std::log(b.sigma_eps_lo)));
        th.phi = (b.phi_lo == b.phi_hi)
                     ? b.phi_lo
                     : b.phi_lo + squash(t[1]) * (b.phi_hi - b.phi_lo);
        th.sigma_w = (b.sigma_w_lo == b.sigma_w_hi)
                         ? b.sigma_w_lo
                         : std::exp(std::log(std::max(b.sigma_w_lo, 1e-300)) +
                                    squash(t[2]) * (std::log(b.sigma_w_hi) -
                                                    std::log(std::max(b.sigma_w_lo, 1e-300))));
        return th;
    }

    std::vector<double> from_theta(const Ar1Params& th) const {
        auto frac_log = [](double v, double lo, double hi) {
            if (lo == hi) return 0.0;
            return unsquash((std::log(v) - std::log(lo)) / (std::log(hi) - std::log(lo)));
        };
        auto frac_lin = [](double v, double lo, double hi) {
            if (lo == hi) return 0.0;
            return unsquash((v - lo) / (hi - lo));
        };
        return {frac_log(th.sigma_eps, b.sigma_eps_lo, b.sigma_eps_hi),
                frac_lin(th.phi, b.phi_lo, b.phi_hi),
                frac_log(th.sigma_w, std::max(b.sigma_w_lo, 1e-300), b.sigma_w_hi)};
    }
};

}  // namespace

MleResult estimate_parameters(const MleProblem& problem, std::uint64_t seed) {
    problem.validate();
    if (problem.starts < 1) throw std::invalid_argument("estimate_parameters: starts must be >= 1");

    const BoxTransform box{problem.bounds};
    MleResult result;
    result.starts_tried = problem.starts;

    if (problem.bounds.degenerate()) {
        result.theta_hat = Ar1Params{problem.bounds.phi_lo, problem.bounds.sigma_eps_lo,
                                     problem.bounds.sigma_w_lo};
        result.neg_loglik = neg_loglik_fast(problem, result.theta_hat);
        result.converged_flags.assign(static_cast<std::size_t>(problem.starts), true);
        result.best_start = 0;
        return result;
    }

    const auto objective = [&](const std::vector<double>& t) {
        return neg_loglik_fast(problem, box.to_theta(t));
    };

    GaussianRng rng(derive_seed(seed, 0xA71E57ULL));
    double best_f = kInf;
    Ar1Params best_theta;
    int best_start = -1;
    result.converged_flags.assign(static_cast<std::size_t>(problem.starts), false);

    const double phi_start_lo = std::max(0.9, problem.bounds.phi_lo);
    const double phi_start_hi = std::min(0.99999, problem.bounds.phi_hi);
    for (int s = 0; s < problem.starts; ++s) {
        Ar1Params start;
        const auto logu = [&](double lo, double hi) {
            return std::exp(std::log(lo) + rng.uniform() * (std::log(hi) - std::log(lo)));
        };
        start.sigma_eps = logu(problem.bounds.sigma_eps_lo, problem.bounds.sigma_eps_hi);
        start.sigma_w = logu(std::max(problem.bounds.sigma_w_lo, 1e-12 * problem.bounds.sigma_w_hi),
                             problem.bounds.sigma_w_hi);
        start.phi = (phi_start_lo < phi_start_hi)
                        ? phi_start_lo + rng.uniform() * (phi_start_hi - phi_start_lo)
                        : 0.5 * (problem.bounds.phi_lo + problem.bounds.phi_hi);

        NelderMeadOptions opts;
        opts.max_iter = 800;
        opts.f_tol = 1e-11;
        opts.x_tol = 1e-9;
        const auto res = nelder_mead(objective, box.from_theta(start), opts);
        result.converged_flags[static_cast<std::size_t>(s)] = res.converged;
        if (std::isfinite(res.f) && res.f < best_f) {
            best_f = res.f;
            best_theta = box.to_theta(res.x);
            best_start = s;
        }
    }
    if (best_start < 0) throw std::runtime_error("likelihood degenerate");
    result.theta_hat = best_theta;
    result.neg_loglik = best_f;
    result.best_start = best_start;
    return result;
}

}  // namespace dejitter
