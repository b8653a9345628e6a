#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "roughlab/interp.hpp"

namespace roughlab {

// Smooth mollifier supported in [-1,1], normalised to integrate to 1.
struct Mollifier {
    std::string name;
    std::function<double(double)> evaluate;   // rho
    std::function<double(double)> derivative; // rho'
    double support_radius = 1.0;

    static Mollifier bump();      // exp(-1/(1-t^2)), normalised
    static Mollifier poly_bump(); // (1-t^2)^3 exp(-1/(1-t^2)), normalised
    static Mollifier by_name(const std::string& name);
};

// C_eps: eps^{1/4-H} for H < 1/4, |log eps|^{-1/2} at H = 1/4.
double scaling_constant(double hurst, double eps);

// Scale-free kernel profiles for one (mollifier, hurst) pair:
//   K_eps(t)    = -1/2 C^2 eps^{2H-2} k0(t/eps)
//   Kbar_eps(t) =  1/2 C^2 eps^{2H-1} kappa0(t/eps) * sign(t)
// with k0(y) = int w(u) |y-u|^{2H} du, w = autocorrelation of rho',
// and kappa0 = (rho * rho~ * F_H), F_H(t) = 2H |t|^{2H-1} sign(t).
// Profiles are tabulated on [0, far_field_start] and continued by an
// asymptotic moment series beyond it.
class KernelProfile {
public:
    KernelProfile(const Mollifier& m, double hurst);

    double hurst() const { return hurst_; }
    double k0(double y) const;      // even in y
    double kappa0(double y) const;  // evaluated at |y|; caller applies sign
    double far_field_start() const { return y_max_; }

    // leading far-field forms (exact limits of the series)
    double k0_leading(double y) const;
    double kappa0_leading(double y) const;

    // int_0^Y kappa0(y)^2 dy; Y may be +infinity for H < 1/4.
    double kappa0_sq_integral(double upper) const;

    const UniformTable& w_table() const { return w_; }
    const UniformTable& q_table() const { return q_; }

    // cached lookup keyed by (mollifier name, hurst)
    static std::shared_ptr<const KernelProfile> get(const Mollifier& m, double hurst);

private:
    double hurst_;
    double y_max_ = 40.0;
    UniformTable w_, q_, k0_, kappa0_;
    std::vector<double> k0_series_;     // coeffs of y^{2H-2j}, j = 1..
    std::vector<double> kappa0_series_; // coeffs of y^{2H-1-2j}, j = 0..

    double k0_series_at(double y) const;
    double kappa0_series_at(double y) const;
};

// Frozen kernel model for one (hurst, eps, mollifier) triple.
class KernelModel {
public:
    KernelModel(double hurst, double eps, Mollifier m);

    double hurst() const { return hurst_; }
    double eps() const { return eps_; }
    double c_eps() const { return c_eps_; }
    const Mollifier& mollifier() const { return mollifier_; }
    const KernelProfile& profile() const { return *profile_; }

    double k(double t) const;    // K_eps(t), even
    double kbar(double t) const; // Kbar_eps(t), odd, exactly 0 at t=0

private:
    double hurst_, eps_, c_eps_;
    Mollifier mollifier_;
    std::shared_ptr<const KernelProfile> profile_;
};

struct ConstantCRow {
    double eps;
    double value; // int_{-delta}^{delta} Kbar_eps^2
};

struct ConstantCResult {
    double estimate = 0.0;          // extrapolated limit (smallest-eps value)
    double direct_limit = 0.0;      // 1/2 int_0^inf kappa0^2 (H < 1/4 only, else 0)
    std::vector<ConstantCRow> per_eps;
    bool monotone_tail = true;      // diagnostic: successive differences shrink
};

ConstantCResult constant_c(double hurst, const Mollifier& m,
                           const std::vector<double>& eps_list, double delta);

struct KbarBoundsReport {
    std::vector<double> eps_list;
    std::vector<double> envelope_half;   // sup |Kbar| t^{1/2} over the t-grid
    std::vector<double> l1_norm;         // int_{-1}^{1} |Kbar|
    std::vector<double> envelope_alpha;  // sup |Kbar| t^{alpha}, alpha = 0.6
    double alpha = 0.6;
};

KbarBoundsReport verify_kbar_bounds(double hurst, const Mollifier& m,
                                    const std::vector<double>& eps_list);

} // namespace roughlab
