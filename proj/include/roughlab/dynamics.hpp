#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "roughlab/fbm.hpp"
#include "roughlab/rng.hpp"

namespace roughlab {

struct VectorField {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> value;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian; // optional
};

// finite-difference Jacobian for fields without an analytic one
Eigen::MatrixXd numeric_jacobian(const VectorField& f, const Eigen::VectorXd& x,
                                 double h = 1e-5);

struct VectorFieldSystem {
    int dimension = 0;
    std::vector<VectorField> fields;

    static VectorFieldSystem heisenberg(); // d=3, m=2
    static VectorFieldSystem commuting();  // d=3, m=2, constant fields
    static VectorFieldSystem so3();        // d=3, m=3, rotation generators
    static VectorFieldSystem by_name(const std::string& name);
};

// [V_i, V_j] = DV_j V_i - DV_i V_j; the zero field when i == j
VectorField lie_bracket(const VectorFieldSystem& sys, int i, int j);

struct OdePath {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    bool guard_hit = false; // frozen at the guard radius once exceeded
};

// RK4 on xdot = sum_i V_i(x) xi_i(t) for an analytic driver
OdePath solve_driven_ode(const VectorFieldSystem& sys,
                         const std::function<Eigen::VectorXd(double)>& xi,
                         const Eigen::VectorXd& x0, double t_begin, double t_end,
                         double step, double guard_radius = 1e3);

// same with the grid driver, linearly interpolated
OdePath solve_driven_ode(const VectorFieldSystem& sys, const DriverSet& driver,
                         const Eigen::VectorXd& x0, double t_begin, double t_end,
                         double step, double guard_radius = 1e3);

// Stratonovich-Heun scheme for dx = (sigma/2) sum_{i<j} [V_i,V_j](x) o dW_ij
OdePath solve_limit_sde(const VectorFieldSystem& sys, double sigma,
                        const Eigen::VectorXd& x0, double step, std::uint64_t seed,
                        std::uint64_t sample_index, double horizon,
                        double guard_radius = 1e3);

struct LawReport {
    int dimension = 0;
    long long count_a = 0, count_b = 0;
    Eigen::VectorXd mean_a, mean_b, var_a, var_b, skew_a, skew_b, kurt_a, kurt_b;
    Eigen::VectorXd mean_stderr_a, mean_stderr_b, var_stderr_a, var_stderr_b;
    Eigen::VectorXd ks_statistic; // two-sample KS distance per coordinate
};

LawReport compare_laws(const std::vector<Eigen::VectorXd>& samples_a,
                       const std::vector<Eigen::VectorXd>& samples_b);

struct RdeReductionReport {
    // residual norms of the Davie-step comparison at a sampled state/lift
    double level3_terms = 0.0;       // X^{(3)}-coupled terms (zero lift level)
    double sym_level4_terms = 0.0;   // symmetric prefactors against antisymmetric B2
    double step_mismatch = 0.0;      // |RDE4 step - RDE2 step|
    double scale = 0.0;              // |RDE2 step| for relative comparison
    bool ok = false;
};

// One Euler-style step of the level-4 Davie expansion driven by the lift
// (X1,X2,X3,X4) = (0, B1, 0, B2) versus the bracket form with coefficients
// 1/2 [V_i,V_j] B1_ij + 1/4 D[V_i,V_j]([V_k,V_l]) B2_klij, at a random state
// and a random lift satisfying the antisymmetry relations.
RdeReductionReport verify_rde_reduction(const VectorFieldSystem& sys,
                                        std::uint64_t seed = 1);

} // namespace roughlab
