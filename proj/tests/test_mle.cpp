#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "dejitter/jitter.hpp"
#include "dejitter/mle.hpp"
#include "dejitter/rng.hpp"

using namespace dejitter;

namespace {

Eigen::MatrixXd dense_sigma(double phi, double sigma_eps, std::size_t k_gap, std::size_t m) {
    const double sig2 = sigma_eps * sigma_eps / (1.0 - phi * phi);
    const double rho = std::pow(phi, static_cast<double>(k_gap + 1));
    Eigen::MatrixXd s(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                sig2 * std::pow(rho, std::abs(static_cast<double>(i) - static_cast<double>(j)));
    return s;
}

double dense_neg_loglik(const MleProblem& prob, const Ar1Params& th) {
    const std::size_t m = prob.size();
    Eigen::MatrixXd s = dense_sigma(th.phi, th.sigma_eps, prob.k_gap, m);
    for (std::size_t i = 0; i < m; ++i)
        s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) +=
            th.sigma_w * th.sigma_w / prob.deriv_sq[i];
    Eigen::VectorXd mv(m);
    for (std::size_t i = 0; i < m; ++i) mv(static_cast<Eigen::Index>(i)) = prob.m_tilde[i];
    const Eigen::LLT<Eigen::MatrixXd> llt(s);
    REQUIRE(llt.info() == Eigen::Success);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < llt.matrixL().rows(); ++i)
        logdet += 2.0 * std::log(llt.matrixL()(i, i));
    const double quad = mv.dot(llt.solve(mv));
    return 0.5 * static_cast<double>(m) * std::log(2.0 * std::numbers::pi) + 0.5 * logdet +
           0.5 * quad;
}

MleProblem random_problem(std::mt19937_64& gen, std::size_t m, std::size_t k_gap) {
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.1, 3.0);
    MleProblem prob;
    prob.k_gap = k_gap;
    prob.m_tilde.resize(m);
    prob.deriv_sq.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        prob.m_tilde[i] = nd(gen);
        prob.deriv_sq[i] = ud(gen);
    }
    return prob;
}

}  // namespace

TEST_CASE("kms_logdet closed form") {
    // single element: log sigma_xi^2
    const double v1 = kms_logdet(0.9, 0.5, 3, 1);
    CHECK(v1 == doctest::Approx(std::log(0.25 / (1 - 0.81))).epsilon(1e-12));

    // dense comparison, M = 5
    const auto s = dense_sigma(0.9, 0.7, 3, 5);
    const double dense = std::log(s.determinant());
    CHECK(kms_logdet(0.9, 0.7, 3, 5) == doctest::Approx(dense).epsilon(1e-10));

    // phi -> 0 diagonal limit: M log sigma_eps^2
    CHECK(kms_logdet(1e-9, 0.3, 2, 7) ==
          doctest::Approx(7.0 * std::log(0.09)).epsilon(1e-9));
}

TEST_CASE("kms_inverse_tridiag matches the printed case table for M=2") {
    const double phi = 0.95, se = 0.4;
    const std::size_t k = 4;
    const auto t = kms_inverse_tridiag(phi, se, k, 2);
    const double sig2 = se * se / (1 - phi * phi);
    const double rho = std::pow(phi, 5.0);
    const double scale = 1.0 / (sig2 * (1 - rho * rho));
    REQUIRE(t.diag.size() == 2);
    CHECK(t.diag[0] == doctest::Approx(scale).epsilon(1e-12));
    CHECK(t.diag[1] == doctest::Approx(scale).epsilon(1e-12));
    CHECK(t.off[0] == doctest::Approx(-scale * rho).epsilon(1e-12));
}

TEST_CASE("Sigma times its closed-form inverse is the identity") {
    const double phi = 0.999, se = 1e-3;
    const std::size_t k = 19, m = 16;
    const auto t = kms_inverse_tridiag(phi, se, k, m);
    Eigen::MatrixXd inv = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t i = 0; i < m; ++i) inv(i, i) = t.diag[i];
    for (std::size_t i = 0; i + 1 < m; ++i) {
        inv(i, i + 1) = t.off[i];
        inv(i + 1, i) = t.off[i];
    }
    const Eigen::MatrixXd prod = dense_sigma(phi, se, k, m) * inv;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(m, m);
    CHECK((prod - eye).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("inverse approaches (1-phi^2)/sigma_eps^2 I when phi^(K+1) vanishes") {
    const double phi = 0.5, se = 0.2;
    const auto t = kms_inverse_tridiag(phi, se, 60, 4);  // rho = 0.5^61 ~ 4e-19
    const double expect = (1 - phi * phi) / (se * se);
    for (double d : t.diag) CHECK(d == doctest::Approx(expect).epsilon(1e-10));
    for (double o : t.off) CHECK(std::abs(o) < 1e-12 * expect);
}

TEST_CASE("fast likelihood equals the dense evaluation, sigma_w = 0") {
    std::mt19937_64 gen(13001);
    auto prob = random_problem(gen, 512, 7);
    const Ar1Params th{0.99, 0.8, 0.0};
    const double fast = neg_loglik_fast(prob, th);
    const double dense = dense_neg_loglik(prob, th);
    CHECK(std::abs(fast - dense) / std::abs(dense) < 1e-8);
}

TEST_CASE("fast likelihood equals the dense evaluation, general case") {
    std::mt19937_64 gen(13002);
    auto prob = random_problem(gen, 2048, 19);
    const Ar1Params th{0.999, 0.05, 0.3};
    const double fast = neg_loglik_fast(prob, th);
    const double dense = dense_neg_loglik(prob, th);
    CHECK(std::abs(fast - dense) / std::abs(dense) < 1e-8);
}

TEST_CASE("fast likelihood handles non-uniform gaps after pilot removal") {
    std::mt19937_64 gen(13003);
    const std::size_t m = 64;
    auto prob = random_problem(gen, m, 9);
    prob.gaps.assign(m - 1, 10);
    prob.gaps[5] = 20;   // merged gap from a removed pilot
    prob.gaps[40] = 30;  // two removed in a row
    const Ar1Params th{0.995, 0.2, 0.15};
    const double fast = neg_loglik_fast(prob, th);

    // dense oracle with explicit positions
    std::vector<double> pos(m, 0.0);
    for (std::size_t i = 1; i < m; ++i)
        pos[i] = pos[i - 1] + static_cast<double>(prob.gaps[i - 1]);
    const double sig2 = th.sigma_eps * th.sigma_eps / (1 - th.phi * th.phi);
    Eigen::MatrixXd s(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            s(i, j) = sig2 * std::pow(th.phi, std::abs(pos[i] - pos[j]));
    for (std::size_t i = 0; i < m; ++i)
        s(i, i) += th.sigma_w * th.sigma_w / prob.deriv_sq[i];
    Eigen::VectorXd mv(m);
    for (std::size_t i = 0; i < m; ++i) mv(i) = prob.m_tilde[i];
    const Eigen::LLT<Eigen::MatrixXd> llt(s);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m); ++i)
        logdet += 2.0 * std::log(llt.matrixL()(i, i));
    const double dense = 0.5 * m * std::log(2.0 * std::numbers::pi) + 0.5 * logdet +
                         0.5 * mv.dot(llt.solve(mv));
    CHECK(std::abs(fast - dense) / std::abs(dense) < 1e-8);
}

TEST_CASE("likelihood is invariant under a sign flip of the measurements") {
    std::mt19937_64 gen(13004);
    auto prob = random_problem(gen, 128, 9);
    const Ar1Params th{0.99, 0.4, 0.2};
    const double a = neg_loglik_fast(prob, th);
    for (auto& v : prob.m_tilde) v = -v;
    const double b = neg_loglik_fast(prob, th);
    CHECK(a == doctest::Approx(b).epsilon(1e-14));
}

TEST_CASE("non-finite parameters map to +inf") {
    std::mt19937_64 gen(13005);
    auto prob = random_problem(gen, 32, 4);
    CHECK(std::isinf(neg_loglik_fast(prob, Ar1Params{1.5, 0.1, 0.1})));
    CHECK(std::isinf(neg_loglik_fast(prob, Ar1Params{0.9, -0.1, 0.1})));
    CHECK(std::isinf(neg_loglik_fast(prob, Ar1Params{0.9, 0.0, 0.1})));
}

TEST_CASE("estimate_parameters recovers phi on dense noiseless pilots") {
    // K = 0: the pseudo-measurements are the AR(1) path itself. The CRLB for
    // phi at this length is ~1.2e-3, so +/-0.003 needs ~2.5 sigma.
    const double phi_true = 0.95;
    const double se_true = 1.0e-3;
    int ok = 0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
        Ar1Params gen_p{phi_true, se_true, 0.0};
        const auto tr = ar1_generate(gen_p, 1u << 16, 1.0, 13100 + s);
        MleProblem prob;
        prob.k_gap = 0;
        prob.m_tilde = tr.xi;
        prob.deriv_sq.assign(tr.xi.size(), 1.0);
        prob.starts = 2;
        const double sd = se_true / std::sqrt(1 - phi_true * phi_true);
        prob.bounds.sigma_eps_lo = 1e-4 * sd;
        prob.bounds.sigma_eps_hi = 4.0 * sd;
        prob.bounds.sigma_w_lo = 1e-8 * sd;
        prob.bounds.sigma_w_hi = 4.0 * sd;
        const auto res = estimate_parameters(prob, 13200 + s);
        if (std::abs(res.theta_hat.phi - phi_true) <= 0.003) ++ok;
    }
    CHECK(ok >= 18);  // within +/-0.003 of truth, rare boundary seeds tolerated
}

TEST_CASE("collapsed bounds return the pinned point") {
    std::mt19937_64 gen(13006);
    auto prob = random_problem(gen, 32, 4);
    prob.bounds = MleBounds{0.3, 0.3, 0.9, 0.9, 0.1, 0.1};
    const auto res = estimate_parameters(prob, 7);
    CHECK(res.theta_hat.sigma_eps == 0.3);
    CHECK(res.theta_hat.phi == 0.9);
    CHECK(res.theta_hat.sigma_w == 0.1);
    CHECK(res.neg_loglik ==
          doctest::Approx(neg_loglik_fast(prob, res.theta_hat)).epsilon(1e-14));
}

TEST_CASE("degenerate likelihood raises") {
    std::mt19937_64 gen(13007);
    auto prob = random_problem(gen, 16, 2);
    prob.m_tilde[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(estimate_parameters(prob, 1), "likelihood degenerate",
                         std::runtime_error);
}

TEST_CASE("gradient vanishes at the optimum relative to interior points") {
    // synthetic problem with a well-identified optimum
    const double phi_true = 0.99;
    const double se_true = 5e-4;
    const double sw_eff = 2e-4;  // sigma_w with |y'| = 1
    Ar1Params gen_p{phi_true, se_true, 0.0};
    const auto tr = ar1_generate(gen_p, 4096, 1.0, 13008);
    GaussianRng nrng(13009);
    MleProblem prob;
    prob.k_gap = 0;
    prob.m_tilde.resize(tr.xi.size());
    prob.deriv_sq.assign(tr.xi.size(), 1.0);
    for (std::size_t i = 0; i < tr.xi.size(); ++i)
        prob.m_tilde[i] = tr.xi[i] + sw_eff * nrng();
    prob.starts = 8;
    const double sd = se_true / std::sqrt(1 - phi_true * phi_true);
    prob.bounds.sigma_eps_lo = 1e-4 * sd;
    prob.bounds.sigma_eps_hi = 4.0 * sd;
    prob.bounds.sigma_w_lo = 1e-6 * sd;
    prob.bounds.sigma_w_hi = 4.0 * sd;
    const auto res = estimate_parameters(prob, 13010);

    // finite-difference gradient in (log sigma_eps, phi, log sigma_w)
    const auto grad_norm = [&](const Ar1Params& th) {
        const double h = 1e-5;
        const auto f = [&](double a, double b, double c) {
            return neg_loglik_fast(prob, Ar1Params{b, std::exp(a), std::exp(c)});
        };
        const double a = std::log(th.sigma_eps), b = th.phi, c = std::log(th.sigma_w);
        const double ga = (f(a + h, b, c) - f(a - h, b, c)) / (2 * h);
        const double gb = (f(a, b + h * 1e-2, c) - f(a, b - h * 1e-2, c)) / (2 * h * 1e-2);
        const double gc = (f(a, b, c + h) - f(a, b, c - h)) / (2 * h);
        return std::sqrt(ga * ga + gb * gb + gc * gc);
    };
    const double g_opt = grad_norm(res.theta_hat);
    std::mt19937_64 gen(13011);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double g_interior = 0.0;
    for (int i = 0; i < 5; ++i) {
        Ar1Params th{0.9 + 0.09 * u01(gen), sd * (0.2 + u01(gen)), sd * (0.05 + 0.5 * u01(gen))};
        g_interior += grad_norm(th);
    }
    g_interior /= 5.0;
    CHECK(g_opt < 1e-3 * g_interior);
}
