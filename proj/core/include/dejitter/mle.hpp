#pragma once

#include <cstdint>
#include <vector>

#include "dejitter/pilots.hpp"
#include "dejitter/types.hpp"

namespace dejitter {

struct MleBounds {
    double sigma_eps_lo = 0.0, sigma_eps_hi = 0.0;
    double phi_lo = 0.5, phi_hi = 0.999999;
    double sigma_w_lo = 0.0, sigma_w_hi = 0.0;

    bool degenerate() const;  ///< all three intervals collapsed to points
};

/// Conditional MLE problem for theta = (sigma_eps, phi, sigma_w) from pilot
/// pseudo-measurements. `gaps` holds the index distance between consecutive
/// retained pilots; uniform schedules use k_gap + 1 everywhere, and removing
/// a flagged pilot merges its two adjacent gaps (the AR(1) Markov structure
/// keeps the precision matrix tridiagonal for arbitrary gaps).
struct MleProblem {
    std::vector<double> m_tilde;    ///< pseudo-measurements [s]
    std::vector<double> deriv_sq;   ///< |y'|^2 at the same pilots
    std::size_t k_gap = 0;
    std::vector<std::size_t> gaps;  ///< size M-1
    MleBounds bounds;
    int starts = 32;

    std::size_t size() const { return m_tilde.size(); }
    void validate() const;
};

/// Builds a problem from pseudo-measurements: flagged pilots are removed
/// (gaps merged) and default search bounds are derived from the data scale.
MleProblem make_mle_problem(const PseudoMeasurements& pm, std::size_t k_gap,
                            int starts = 32);

/// log det of the KMS Toeplitz covariance Sigma_ij = sigma_xi^2 phi^{(K+1)|i-j|}:
/// M log(sigma_eps^2/(1-phi^2)) + (M-1) log(1 - phi^{2(K+1)}), computed in
/// log space.
double kms_logdet(double phi, double sigma_eps, std::size_t k_gap, std::size_t m);

/// Symmetric tridiagonal matrix stored as main diagonal + one off diagonal.
struct Tridiagonal {
    std::vector<double> diag;
    std::vector<double> off;
};

/// Closed-form tridiagonal inverse of the KMS covariance.
Tridiagonal kms_inverse_tridiag(double phi, double sigma_eps, std::size_t k_gap,
                                std::size_t m);

/// O(M) evaluation of the conditional negative log-likelihood
/// l(theta) = (M/2) log 2pi + (1/2) log det(Sigma + D) + (1/2) m^T (Sigma+D)^{-1} m,
/// using det(Sigma + D) = det(Sigma) det(I + Sigma^{-1} D) (tridiagonal
/// three-term recursion in log space) and the Woodbury identity with one
/// tridiagonal solve for the quadratic form. Non-finite values map to +inf.
double neg_loglik_fast(const MleProblem& problem, const Ar1Params& theta);

struct MleResult {
    Ar1Params theta_hat;
    double neg_loglik = 0.0;
    int starts_tried = 0;
    std::vector<bool> converged_flags;
    int best_start = -1;
};

/// Multi-start Nelder-Mead minimization of neg_loglik_fast over the bounds
/// box, searched in (log sigma_eps, scaled-logit phi, log sigma_w)
/// coordinates. Ties break on the lowest start index. Throws
/// std::runtime_error("likelihood degenerate") if every start is non-finite.
MleResult estimate_parameters(const MleProblem& problem, std::uint64_t seed);

}  // namespace dejitter
