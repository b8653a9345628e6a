#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "roughlab/kernels.hpp"

namespace roughlab {

// Product mollifier on space-time in parabolic coordinates: rho(t,x) =
// time(t) * space(x), supported in the unit box, unit space-time integral.
// The rescaled family is rho_eps(t,x) = eps^{-3} rho(t/eps^2, x/eps).
struct Mollifier2d {
    Mollifier time;
    Mollifier space;

    static Mollifier2d bump();
    static Mollifier2d poly_bump();
    static Mollifier2d by_name(const std::string& name);
};

// int rho(t,x)^2 dt dx for the unscaled product profile
double mollifier2d_l2sq(const Mollifier2d& m);

// Fourier transform int m(t) cos(w t) dt of a 1-d profile (real, even in w)
double mollifier_ft(const Mollifier& m, double w);

// Discretisation of the unit-circumference torus times a time window.  The
// retained window is [0, t_end]; [-t_burn, 0) is spin-up that is discarded.
struct SpaceTimeGrid {
    int nx = 256;
    double dt = 1e-4;
    double t_burn = 1.0;
    double t_end = 0.25;

    double dx() const { return 1.0 / nx; }
};

struct KpzConstants {
    double c_eps = 0.0;  // E[eps^{3/2} (dx P * dx eta_eps)^2] = K_eps(0)
    double sigma2 = 0.0; // 2 int K_eps(z)^2 dz, eps-independent by scaling
};

// Deterministic mode-sum quadrature of the chi-covariance kernel on the torus.
KpzConstants kpz_constants(const Mollifier2d& moll, double eps);

// K_eps(t,x): covariance E chi_eps(z') chi_eps(z'+z) on the torus
double kpz_kernel(const Mollifier2d& moll, double eps, double t, double x);

// Frames of the stationary fields over the retained window.  Rows are output
// frames (spaced frame_dt apart), columns are the nx spatial points.
struct KpzFields {
    double eps = 0.0;
    double c_eps = 0.0;
    int nx = 0;
    double dx = 0.0;
    double frame_dt = 0.0;
    std::vector<double> frame_times;
    Eigen::MatrixXd chi; // eps^{3/4} dx v,  dt v = dxx v + dx eta_eps from rest
    Eigen::MatrixXd xi;  // chi^2 - c_eps
    Eigen::MatrixXd eta; // eta_eps = rho_eps * eta
};

// Spectral solve of dt v = dxx v + dx eta_eps from rest at -t_burn with a
// per-mode exact exponential integrator; throws if eps < 10 max(dx, sqrt(dt)).
KpzFields build_chi_xi(const SpaceTimeGrid& grid, double eps, const Mollifier2d& moll,
                       std::uint64_t seed, std::uint64_t sample_index = 0);

// <field, phi^lambda_z> with phi^lambda_z(t,x) = lambda^{-3}
// phi((t-tc)/lambda^2, (x-xc)/lambda); Riemann sum over frames, periodic in x.
// `field` must have the shape of the arrays in `f`.
double pair_field(const KpzFields& f, const Eigen::MatrixXd& field,
                  const Mollifier2d& phi, double lambda, double t_centre,
                  double x_centre);

// Pairings on the lattice of disjoint translates of phi^lambda inside the
// retained window (row-major: time-major order).
std::vector<double> harvest_pairings(const KpzFields& f, const Eigen::MatrixXd& field,
                                     const Mollifier2d& phi, double lambda);

// 2 int int phi^lambda(z1) phi^lambda(z2) K_eps(z1-z2)^2 dz1 dz2 by quadrature:
// the exact variance of <phi^lambda, xi_eps>.
double pairing_variance_quadrature(const Mollifier2d& moll, double eps,
                                   const Mollifier2d& phi, double lambda);

struct NoiseReport {
    long long samples = 0;
    int batches = 0;
    double mean_xi = 0.0, mean_xi_se = 0.0;
    double var_xi = 0.0, var_xi_se = 0.0;
    double corr_xi_eta = 0.0, corr_se = 0.0;
    double c4_xi = 0.0, c4_xi_se = 0.0;   // fourth cumulant of <phi, xi_eps>
    double c4_eta = 0.0, c4_eta_se = 0.0; // fourth cumulant of <psi, eta_eps>
    double var_eta = 0.0, var_eta_se = 0.0;
    double var_chi = 0.0, var_chi_se = 0.0;
};

// Harvests the translate lattice of every realisation (one batch each) and
// reports batch-mean statistics with standard errors across batches.
NoiseReport decorrelation_and_cumulants(const std::vector<KpzFields>& realisations,
                                        const Mollifier2d& phi, const Mollifier2d& psi,
                                        double lambda);

enum class KpzVariant {
    U_FORM,       // dt u = dxx u + (dx u)^2 + eps^a dx eta_eps - C
    H_FORM,       // dt h = dxx h + (dx h)^2 + 2 chi dx h + xi
    COLE_HOPF_REF // log of dt Z = dxx Z + sigma Z zeta (Ito, fresh noise)
};

struct KpzSolution {
    std::vector<double> times;
    std::vector<Eigen::ArrayXd> h;
    Eigen::ArrayXd shift_final; // eps^a v(t_end); zero for COLE_HOPF_REF
    bool positivity_ok = true;  // Cole-Hopf Z stayed positive
};

// Semi-implicit spectral integrator from h0 at t = 0 (no spin-up; v starts at
// rest, so U_FORM and H_FORM solutions with the same seed satisfy
// u = h + eps^a v up to discretisation error).  noise_power is the exponent a
// in eps^a dx eta_eps; the centring constant is (noise_scale eps^a)^2
// eps^{-3/2} c_eps.  noise_scale = 0 gives the noise-free equation in every
// variant.  noise_micro_dt > 0 resolves the driving noise on that finer time
// lattice (each step averages dt / noise_micro_dt cells), so solves with
// different dt but a common noise_micro_dt share one noise realisation.
KpzSolution solve_kpz(const SpaceTimeGrid& grid, double eps, const Mollifier2d& moll,
                      const Eigen::ArrayXd& h0, KpzVariant variant, std::uint64_t seed,
                      double noise_power = 0.75, double noise_scale = 1.0,
                      double noise_micro_dt = 0.0);

// Noise-free reference: dt h = dxx h + (dx h)^2 with the same integrator.
KpzSolution solve_kpz_deterministic(const SpaceTimeGrid& grid,
                                    const Eigen::ArrayXd& h0);

} // namespace roughlab
