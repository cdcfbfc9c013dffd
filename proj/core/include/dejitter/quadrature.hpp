#pragma once

#include <functional>
#include <vector>

namespace dejitter {

struct QuadResult {
    double value = 0.0;
    double abs_err = 0.0;
    bool converged = true;
};

/// Adaptive Gauss-Kronrod (G7, K15) on [a, b]. `break_points` force initial
/// subdivision there (integrand kinks / singular points).
QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              double abs_tol, double rel_tol,
                              const std::vector<double>& break_points = {},
                              int max_depth = 30);

}  // namespace dejitter
