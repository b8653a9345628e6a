#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace roughlab {

// Values tabulated on a uniform grid, evaluated by local 4-point cubic
// Lagrange interpolation (error O(h^4) for smooth data).
class UniformTable {
public:
    UniformTable() = default;
    UniformTable(double a, double h, std::vector<double> values)
        : a_(a), h_(h), v_(std::move(values)) {
        if (v_.size() < 4) throw std::invalid_argument("table needs at least 4 points");
    }

    double min() const { return a_; }
    double max() const { return a_ + h_ * static_cast<double>(v_.size() - 1); }
    double step() const { return h_; }

    double operator()(double x) const {
        const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(v_.size());
        double u = (x - a_) / h_;
        std::ptrdiff_t i = static_cast<std::ptrdiff_t>(u) - 1; // window start
        if (i < 0) i = 0;
        if (i > n - 4) i = n - 4;
        const double t = u - static_cast<double>(i); // in [~1,~2] inside window
        const double t0 = t, t1 = t - 1.0, t2 = t - 2.0, t3 = t - 3.0;
        return v_[i]     * (t1 * t2 * t3) / (-6.0)
             + v_[i + 1] * (t0 * t2 * t3) / (2.0)
             + v_[i + 2] * (t0 * t1 * t3) / (-2.0)
             + v_[i + 3] * (t0 * t1 * t2) / (6.0);
    }

private:
    double a_ = 0.0, h_ = 1.0;
    std::vector<double> v_;
};

} // namespace roughlab
