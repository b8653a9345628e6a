#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "roughlab/kernels.hpp"
#include "roughlab/moments.hpp"
#include "roughlab/rng.hpp"

namespace roughlab {

// Uniform-grid sample paths of an m-component two-sided process, anchored so
// that the value at time 0 is exactly 0 when the grid contains it.
struct GridPath {
    double t0 = 0.0, t1 = 1.0, dt = 0.0;
    int n = 0; // grid points, times t0 + i*dt
    double hurst = 0.0;
    std::uint64_t seed = 0;
    bool dense_fallback = false; // circulant embedding was not PSD
    std::vector<Eigen::ArrayXd> values;

    double time(int i) const { return t0 + i * dt; }
    int index_of(double t) const; // nearest grid index; throws out of range
};

// Exact-in-law fractional Brownian motion via circulant embedding of the
// stationary increment process; independent components from split RNG streams,
// deterministic per (seed, component, sample_index, grid).
GridPath sample_fbm(double H, double t0, double t1, int n, int m, std::uint64_t seed,
                    std::uint64_t sample_index = 0);

// Smoothed derivative xi_eps = C_eps d/dt (B * rho_eps) by discrete
// convolution with the analytic rho'.
struct DriverSet {
    double eps = 0.0, c_eps = 0.0;
    double t0 = 0.0, dt = 0.0;
    int n = 0;
    double valid_lo = 0.0, valid_hi = 0.0;
    std::vector<Eigen::ArrayXd> xi;

    double time(int i) const { return t0 + i * dt; }
    int index_of(double t) const;
};

DriverSet mollify(const GridPath& path, double eps, const Mollifier& moll, double c_eps);

// Truncated signature levels 1..4 over [s,t]; component arguments are 1-based
// to match multiindex conventions.
struct TensorLevels {
    int m = 0, max_level = 0;
    double s = 0.0, t = 0.0;
    std::vector<std::vector<double>> level; // level[k-1] has m^k entries, row-major

    double x1(int i) const { return level[0][i - 1]; }
    double x2(int i, int j) const { return level[1][(i - 1) * m + (j - 1)]; }
    double x3(int i, int j, int k) const {
        return level[2][((i - 1) * m + (j - 1)) * m + (k - 1)];
    }
    double x4(int i, int j, int k, int l) const {
        return level[3][(((i - 1) * m + (j - 1)) * m + (k - 1)) * m + (l - 1)];
    }
    double component(const std::vector<int>& idx) const;
};

TensorLevels iterated_integrals(const DriverSet& drv, double s, double t, int max_level = 4);

// Chen composition: signature over [s,u] from signatures over [s,t] and [t,u].
TensorLevels chen_compose(const TensorLevels& a, const TensorLevels& b);

struct McMomentResult {
    double estimate = 0.0;
    double stderr_est = 0.0;
    long long samples = 0;
    double eps = 0.0;
    std::vector<double> batch_means;
};

// Monte Carlo estimate of E prod_i X^{(k_i)}_{I_i}(s_i, t_i) for the mollified
// driver at scale eps; deterministic per (seed, sample index).
McMomentResult mc_moment(const MomentSpec& spec, double H, double eps, const Mollifier& moll,
                         double t0, double t1, int grid_n, long long samples,
                         std::uint64_t seed, int batches = 20);

} // namespace roughlab
