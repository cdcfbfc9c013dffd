#pragma once

#include <functional>
#include <vector>

namespace dejitter {

struct NelderMeadOptions {
    int max_iter = 600;
    double f_tol = 1e-10;
    double x_tol = 1e-10;
    double initial_step = 0.5;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Unconstrained Nelder-Mead simplex minimization. Box constraints are
/// handled by the caller through smooth reparameterization.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0,
                             const NelderMeadOptions& opts = {});

}  // namespace dejitter
