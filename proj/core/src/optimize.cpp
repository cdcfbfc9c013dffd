#include "dejitter/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dejitter {

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0, const NelderMeadOptions& opts) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> simplex;
    simplex.push_back(x0);
    for (std::size_t i = 0; i < n; ++i) {
        auto p = x0;
        p[i] += (p[i] == 0.0) ? opts.initial_step : opts.initial_step * (std::abs(p[i]) + 1.0);
        simplex.push_back(std::move(p));
    }
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(simplex[i]);

    NelderMeadResult res;
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        std::vector<std::size_t> order(n + 1);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
        std::vector<std::vector<double>> sx(n + 1);
        std::vector<double> sf(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            sx[i] = simplex[order[i]];
            sf[i] = fv[order[i]];
        }
        simplex.swap(sx);
        fv.swap(sf);

        double spread = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            spread = std::max(spread, std::abs(simplex[n][i] - simplex[0][i]));
        if (std::abs(fv[n] - fv[0]) <= opts.f_tol * (std::abs(fv[0]) + opts.f_tol) &&
            spread <= opts.x_tol) {
            res.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j];
        }
        for (auto& c : centroid) c /= static_cast<double>(n);

        auto blend = [&](double t) {
            std::vector<double> p(n);
            for (std::size_t j = 0; j < n; ++j)
                p[j] = centroid[j] + t * (centroid[j] - simplex[n][j]);
            return p;
        };

        auto xr = blend(1.0);
        const double fr = f(xr);
        if (fr < fv[0]) {
            auto xe = blend(2.0);
            const double fe = f(xe);
            if (fe < fr) {
                simplex[n] = std::move(xe);
                fv[n] = fe;
            } else {
                simplex[n] = std::move(xr);
                fv[n] = fr;
            }
        } else if (fr < fv[n - 1]) {
            simplex[n] = std::move(xr);
            fv[n] = fr;
        } else {
            auto xc = blend(fr < fv[n] ? 0.5 : -0.5);
            const double fc = f(xc);
            if (fc < std::min(fr, fv[n])) {
                simplex[n] = std::move(xc);
                fv[n] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t j = 0; j < n; ++j)
                        simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
                    fv[i] = f(simplex[i]);
                }
            }
        }
    }
    res.iterations = it;
    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fv[i] < fv[best]) best = i;
    res.x = simplex[best];
    res.f = fv[best];
    return res;
}

}  // namespace dejitter
