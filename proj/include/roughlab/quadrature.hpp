#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

namespace roughlab {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;   // estimated absolute error
    int evaluations = 0;
    bool converged = true;
};

struct QuadOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    int max_intervals = 4000;
};

// Adaptive Gauss-Kronrod (7/15) on [a,b].  Optional breakpoints force initial
// subdivision at known kinks of the integrand.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const QuadOptions& opt = {},
                     const std::vector<double>& breakpoints = {});

// Convenience wrapper that throws on non-convergence.
double integrate_strict(const std::function<double(double)>& f, double a, double b,
                        const QuadOptions& opt = {},
                        const std::vector<double>& breakpoints = {});

} // namespace roughlab
