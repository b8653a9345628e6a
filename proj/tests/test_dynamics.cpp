#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "roughlab/dynamics.hpp"

using namespace roughlab;

TEST_CASE("lie brackets") {
    auto heis = VectorFieldSystem::heisenberg();
    SUBCASE("Heisenberg bracket is the constant (0,0,1)") {
        auto br = lie_bracket(heis, 0, 1);
        for (double s : {-1.3, 0.0, 2.7}) {
            Eigen::Vector3d x(s, -s, 0.5 * s);
            Eigen::VectorXd v = br.value(x);
            CHECK(v(0) == doctest::Approx(0.0).epsilon(1e-12));
            CHECK(v(1) == doctest::Approx(0.0).epsilon(1e-12));
            CHECK(v(2) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("[V,V] = 0 and antisymmetry") {
        Eigen::Vector3d x(0.3, -0.4, 0.9);
        CHECK(lie_bracket(heis, 0, 0).value(x).norm() == 0.0);
        Eigen::VectorXd a = lie_bracket(heis, 0, 1).value(x);
        Eigen::VectorXd b = lie_bracket(heis, 1, 0).value(x);
        CHECK((a + b).norm() == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("commuting constant fields") {
        auto sys = VectorFieldSystem::commuting();
        Eigen::Vector3d x(1, 2, 3);
        CHECK(lie_bracket(sys, 0, 1).value(x).norm() == doctest::Approx(0.0));
    }
    SUBCASE("finite-difference Jacobian matches the analytic one") {
        Eigen::Vector3d x(0.2, -0.7, 0.4);
        for (int i = 0; i < 2; ++i) {
            Eigen::MatrixXd a = heis.fields[i].jacobian(x);
            Eigen::MatrixXd n = numeric_jacobian(heis.fields[i], x);
            CHECK((a - n).norm() < 1e-7);
        }
    }
    SUBCASE("so3 generators close: [V1,V2] = -V3") {
        auto sys = VectorFieldSystem::so3();
        Eigen::Vector3d x(0.5, -0.2, 0.8);
        Eigen::VectorXd br = lie_bracket(sys, 0, 1).value(x);
        Eigen::VectorXd v3 = sys.fields[2].value(x);
        CHECK((br + v3).norm() < 1e-7);
    }
}

TEST_CASE("driven ODE solver") {
    SUBCASE("RK4 order on a smooth scalar problem") {
        VectorFieldSystem sys;
        sys.dimension = 1;
        sys.fields.push_back({[](const Eigen::VectorXd& x) { return x; }, nullptr});
        auto xi = [](double t) { return Eigen::VectorXd::Constant(1, std::cos(t)); };
        Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 1.0);
        double exact = std::exp(std::sin(1.0));
        double e1 = std::abs(
            solve_driven_ode(sys, xi, x0, 0.0, 1.0, 0.02).states.back()(0) - exact);
        double e2 = std::abs(
            solve_driven_ode(sys, xi, x0, 0.0, 1.0, 0.01).states.back()(0) - exact);
        CHECK(e1 / e2 > 12.0);
        CHECK(e1 / e2 < 20.0);
    }
    SUBCASE("zero driver holds still") {
        auto sys = VectorFieldSystem::heisenberg();
        auto xi = [](double) { return Eigen::VectorXd::Zero(2).eval(); };
        Eigen::Vector3d x0(1, 2, 3);
        auto path = solve_driven_ode(sys, xi, x0, 0.0, 1.0, 0.01);
        CHECK((path.states.back() - x0).norm() == 0.0);
        CHECK(!path.guard_hit);
    }
    SUBCASE("guard freezes the path") {
        VectorFieldSystem sys;
        sys.dimension = 1;
        sys.fields.push_back({[](const Eigen::VectorXd& x) { return x; }, nullptr});
        auto xi = [](double) { return Eigen::VectorXd::Constant(1, 1.0).eval(); };
        Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 1.0);
        auto path = solve_driven_ode(sys, xi, x0, 0.0, 3.0, 0.01, 2.0);
        CHECK(path.guard_hit);
        CHECK(path.states.back()(0) < 2.1);
        CHECK(path.states.back()(0) > 1.99);
    }
    SUBCASE("commuting constants integrate the driver exactly") {
        const double H = 0.1, eps = 0.05;
        GridPath p = sample_fbm(H, -1.0, 2.0, 4097, 2, 3, 0);
        DriverSet d = mollify(p, eps, Mollifier::bump(), scaling_constant(H, eps));
        auto sys = VectorFieldSystem::commuting();
        Eigen::Vector3d x0(0, 0, 0);
        // align the window with grid nodes so both integrators see the same interval
        double s = d.t0 + std::lround((0.1 - d.t0) / d.dt) * d.dt;
        double t = d.t0 + std::lround((0.9 - d.t0) / d.dt) * d.dt;
        auto path = solve_driven_ode(sys, d, x0, s, t, d.dt / 2);
        auto tl = iterated_integrals(d, s, t, 1);
        CHECK(path.states.back()(0) == doctest::Approx(tl.x1(1)).epsilon(1e-6));
        CHECK(path.states.back()(1) == doctest::Approx(tl.x1(2)).epsilon(1e-6));
        CHECK(path.states.back()(2) == 0.0);
    }
    SUBCASE("Heisenberg z equals the antisymmetric Levy area per sample") {
        const double H = 0.1, eps = 0.05;
        auto sys = VectorFieldSystem::heisenberg();
        for (int i = 0; i < 3; ++i) {
            GridPath p = sample_fbm(H, -1.0, 2.0, 32769, 2, 13, i);
            DriverSet d = mollify(p, eps, Mollifier::bump(), scaling_constant(H, eps));
            Eigen::Vector3d x0(0, 0, 0);
            double s = d.t0 + std::lround((0.1 - d.t0) / d.dt) * d.dt;
            double t = d.t0 + std::lround((0.9 - d.t0) / d.dt) * d.dt;
            auto path = solve_driven_ode(sys, d, x0, s, t, d.dt / 2);
            auto tl = iterated_integrals(d, s, t, 2);
            double area = 0.5 * (tl.x2(1, 2) - tl.x2(2, 1));
            CHECK(path.states.back()(2) ==
                  doctest::Approx(area).epsilon(1e-4).scale(1.0));
        }
    }
}

TEST_CASE("limit SDE solver") {
    auto sys = VectorFieldSystem::heisenberg();
    Eigen::Vector3d x0(0, 0, 0);
    SUBCASE("Heisenberg z(1) has variance sigma^2/4") {
        const double sigma = 0.8;
        const int n = 4000;
        double acc = 0.0, acc4 = 0.0;
        for (int i = 0; i < n; ++i) {
            auto path = solve_limit_sde(sys, sigma, x0, 1e-3, 77, i, 1.0);
            double z = path.states.back()(2);
            acc += z * z;
            acc4 += z * z * z * z;
        }
        double var = acc / n;
        double se = std::sqrt((acc4 / n - var * var) / n);
        CHECK(std::abs(var - sigma * sigma / 4.0) < 3.0 * se + 0.01 * sigma * sigma);
        // x and y are standard-free: they stay at 0 for this bracket system
        auto path = solve_limit_sde(sys, sigma, x0, 1e-3, 77, 0, 1.0);
        CHECK(std::abs(path.states.back()(0)) == 0.0);
    }
    SUBCASE("variance is linear in the horizon") {
        const double sigma = 1.0;
        const int n = 3000;
        double v_half = 0.0, v_one = 0.0;
        for (int i = 0; i < n; ++i) {
            auto a = solve_limit_sde(sys, sigma, x0, 1e-3, 5, i, 1.0);
            double z1 = a.states.back()(2);
            double zh = a.states[a.states.size() / 2](2);
            v_one += z1 * z1;
            v_half += zh * zh;
        }
        CHECK(v_one / v_half == doctest::Approx(2.0).epsilon(0.10));
    }
    SUBCASE("sigma = 0 and commuting systems stay put") {
        auto path = solve_limit_sde(sys, 0.0, x0, 1e-2, 1, 0, 1.0);
        CHECK((path.states.back() - x0).norm() == 0.0);
        auto c = solve_limit_sde(VectorFieldSystem::commuting(), 1.0, x0, 1e-2, 1, 0, 1.0);
        CHECK((c.states.back() - x0).norm() == 0.0);
    }
}

TEST_CASE("compare_laws") {
    std::vector<Eigen::VectorXd> a, b;
    RngStream rng(3, 4, 5);
    for (int i = 0; i < 500; ++i) {
        Eigen::VectorXd x(2);
        x << rng.gaussian(), rng.gaussian() + 1.0;
        a.push_back(x);
    }
    SUBCASE("identical inputs have zero distance") {
        auto r = compare_laws(a, a);
        CHECK(r.ks_statistic.maxCoeff() == doctest::Approx(0.0));
        CHECK(r.mean_a(1) == doctest::Approx(r.mean_b(1)));
    }
    SUBCASE("shifted laws are detected") {
        for (const auto& x : a) b.push_back(x + Eigen::Vector2d(3.0, 0.0).eval());
        auto r = compare_laws(a, b);
        // true distance for unit normals 3 apart is Phi(1.5)-Phi(-1.5) ~ 0.866
        CHECK(r.ks_statistic(0) > 0.8);
        CHECK(r.ks_statistic(1) == doctest::Approx(0.0));
    }
    SUBCASE("empty input throws") {
        CHECK_THROWS(compare_laws(a, {}));
    }
}

TEST_CASE("RDE reduction to the bracket form") {
    SUBCASE("Heisenberg") {
        auto rep = verify_rde_reduction(VectorFieldSystem::heisenberg(), 11);
        CHECK(rep.level3_terms == 0.0);
        CHECK(rep.sym_level4_terms < 1e-8);
        CHECK(rep.ok);
    }
    SUBCASE("so3") {
        auto rep = verify_rde_reduction(VectorFieldSystem::so3(), 12);
        CHECK(rep.ok);
    }
    SUBCASE("nonlinear perturbed system") {
        VectorFieldSystem sys;
        sys.dimension = 3;
        sys.fields.push_back({[](const Eigen::VectorXd& x) {
                                  return Eigen::Vector3d(1.0, 0.1 * x(2) * x(2),
                                                         -0.5 * x(1));
                              },
                              nullptr});
        sys.fields.push_back({[](const Eigen::VectorXd& x) {
                                  return Eigen::Vector3d(0.2 * std::sin(x(2)), 1.0,
                                                         0.5 * x(0));
                              },
                              nullptr});
        auto rep = verify_rde_reduction(sys, 13);
        CHECK(rep.sym_level4_terms < 1e-3 * std::max(1.0, rep.scale));
        CHECK(rep.step_mismatch < 1e-3 * std::max(1.0, rep.scale));
    }
}
