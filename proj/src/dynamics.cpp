#include "roughlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace roughlab {

Eigen::MatrixXd numeric_jacobian(const VectorField& f, const Eigen::VectorXd& x, double h) {
    const int d = static_cast<int>(x.size());
    Eigen::MatrixXd J(f.value(x).size(), d);
    for (int c = 0; c < d; ++c) {
        Eigen::VectorXd xp = x, xm = x;
        xp(c) += h;
        xm(c) -= h;
        J.col(c) = (f.value(xp) - f.value(xm)) / (2.0 * h);
    }
    return J;
}

namespace {

Eigen::MatrixXd jac_of(const VectorField& f, const Eigen::VectorXd& x) {
    return f.jacobian ? f.jacobian(x) : numeric_jacobian(f, x);
}

VectorField constant_field(Eigen::VectorXd v) {
    const int d = static_cast<int>(v.size());
    return {[v](const Eigen::VectorXd&) { return v; },
            [d](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(d, d); }};
}

VectorField linear_field(Eigen::MatrixXd A, Eigen::VectorXd b) {
    return {[A, b](const Eigen::VectorXd& x) -> Eigen::VectorXd { return A * x + b; },
            [A](const Eigen::VectorXd&) { return A; }};
}

} // namespace

VectorFieldSystem VectorFieldSystem::heisenberg() {
    VectorFieldSystem s;
    s.dimension = 3;
    Eigen::MatrixXd A1 = Eigen::MatrixXd::Zero(3, 3), A2 = Eigen::MatrixXd::Zero(3, 3);
    A1(2, 1) = -0.5; // V1 = (1, 0, -y/2)
    A2(2, 0) = 0.5;  // V2 = (0, 1, x/2)
    s.fields.push_back(linear_field(A1, Eigen::Vector3d(1, 0, 0)));
    s.fields.push_back(linear_field(A2, Eigen::Vector3d(0, 1, 0)));
    return s;
}

VectorFieldSystem VectorFieldSystem::commuting() {
    VectorFieldSystem s;
    s.dimension = 3;
    s.fields.push_back(constant_field(Eigen::Vector3d(1, 0, 0)));
    s.fields.push_back(constant_field(Eigen::Vector3d(0, 1, 0)));
    return s;
}

VectorFieldSystem VectorFieldSystem::so3() {
    VectorFieldSystem s;
    s.dimension = 3;
    for (int i = 0; i < 3; ++i) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 3);
        // V_i(x) = e_i x x (cross product generator)
        int a = (i + 1) % 3, b = (i + 2) % 3;
        A(b, a) = 1.0;
        A(a, b) = -1.0;
        s.fields.push_back(linear_field(A, Eigen::Vector3d::Zero()));
    }
    return s;
}

VectorFieldSystem VectorFieldSystem::by_name(const std::string& name) {
    if (name == "heisenberg") return heisenberg();
    if (name == "commuting") return commuting();
    if (name == "so3") return so3();
    throw std::invalid_argument("unknown vector field system: " + name);
}

VectorField lie_bracket(const VectorFieldSystem& sys, int i, int j) {
    const int d = sys.dimension;
    if (i == j)
        return {[d](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(d).eval(); },
                [d](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(d, d); }};
    VectorField vi = sys.fields[i], vj = sys.fields[j];
    return {[vi, vj](const Eigen::VectorXd& x) -> Eigen::VectorXd {
                return jac_of(vj, x) * vi.value(x) - jac_of(vi, x) * vj.value(x);
            },
            nullptr};
}

namespace {

OdePath rk4(const VectorFieldSystem& sys, const std::function<Eigen::VectorXd(double)>& xi,
            const Eigen::VectorXd& x0, double t_begin, double t_end, double step,
            double guard) {
    OdePath path;
    auto rhs = [&](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
        Eigen::VectorXd w = xi(t);
        Eigen::VectorXd v = Eigen::VectorXd::Zero(sys.dimension);
        for (std::size_t i = 0; i < sys.fields.size(); ++i)
            v += sys.fields[i].value(x) * w(static_cast<int>(i));
        return v;
    };
    Eigen::VectorXd x = x0;
    double t = t_begin;
    path.times.push_back(t);
    path.states.push_back(x);
    const long long n = std::llround((t_end - t_begin) / step);
    for (long long k = 0; k < n; ++k) {
        if (!path.guard_hit) {
            Eigen::VectorXd k1 = rhs(t, x);
            Eigen::VectorXd k2 = rhs(t + step / 2, x + (step / 2) * k1);
            Eigen::VectorXd k3 = rhs(t + step / 2, x + (step / 2) * k2);
            Eigen::VectorXd k4 = rhs(t + step, x + step * k3);
            x += (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
            if (x.norm() > guard) path.guard_hit = true; // frozen from here on
        }
        t = t_begin + (k + 1) * step;
        path.times.push_back(t);
        path.states.push_back(x);
    }
    return path;
}

} // namespace

OdePath solve_driven_ode(const VectorFieldSystem& sys,
                         const std::function<Eigen::VectorXd(double)>& xi,
                         const Eigen::VectorXd& x0, double t_begin, double t_end,
                         double step, double guard_radius) {
    return rk4(sys, xi, x0, t_begin, t_end, step, guard_radius);
}

OdePath solve_driven_ode(const VectorFieldSystem& sys, const DriverSet& driver,
                         const Eigen::VectorXd& x0, double t_begin, double t_end,
                         double step, double guard_radius) {
    const int m = static_cast<int>(driver.xi.size());
    auto xi = [&driver, m](double t) -> Eigen::VectorXd {
        double u = (t - driver.t0) / driver.dt;
        int i = std::min(std::max(0, static_cast<int>(u)), driver.n - 2);
        double w = u - i;
        Eigen::VectorXd out(m);
        for (int c = 0; c < m; ++c)
            out(c) = (1.0 - w) * driver.xi[c](i) + w * driver.xi[c](i + 1);
        return out;
    };
    return rk4(sys, xi, x0, t_begin, t_end, step, guard_radius);
}

OdePath solve_limit_sde(const VectorFieldSystem& sys, double sigma,
                        const Eigen::VectorXd& x0, double step, std::uint64_t seed,
                        std::uint64_t sample_index, double horizon, double guard_radius) {
    const int m = static_cast<int>(sys.fields.size());
    std::vector<VectorField> brackets;
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            brackets.push_back(lie_bracket(sys, i, j));
            pairs.emplace_back(i, j);
        }
    auto drift_free = [&](const Eigen::VectorXd& x,
                          const Eigen::VectorXd& dw) -> Eigen::VectorXd {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(sys.dimension);
        for (std::size_t p = 0; p < brackets.size(); ++p)
            v += (sigma / 2.0) * brackets[p].value(x) * dw(static_cast<int>(p));
        return v;
    };
    RngStream rng(seed, 0x5DEULL, sample_index);
    OdePath path;
    Eigen::VectorXd x = x0;
    const long long n = std::llround(horizon / step);
    const double sqdt = std::sqrt(step);
    path.times.push_back(0.0);
    path.states.push_back(x);
    for (long long k = 0; k < n; ++k) {
        Eigen::VectorXd dw(static_cast<int>(pairs.size()));
        for (int p = 0; p < dw.size(); ++p) dw(p) = sqdt * rng.gaussian();
        if (!path.guard_hit) {
            Eigen::VectorXd f0 = drift_free(x, dw);
            Eigen::VectorXd pred = x + f0;
            x += 0.5 * (f0 + drift_free(pred, dw));
            if (x.norm() > guard_radius) path.guard_hit = true;
        }
        path.times.push_back((k + 1) * step);
        path.states.push_back(x);
    }
    return path;
}

namespace {

void law_moments(const std::vector<Eigen::VectorXd>& s, Eigen::VectorXd& mean,
                 Eigen::VectorXd& var, Eigen::VectorXd& skew, Eigen::VectorXd& kurt,
                 Eigen::VectorXd& mean_se, Eigen::VectorXd& var_se) {
    const int d = static_cast<int>(s[0].size());
    const double n = static_cast<double>(s.size());
    mean = Eigen::VectorXd::Zero(d);
    for (const auto& x : s) mean += x;
    mean /= n;
    var = Eigen::VectorXd::Zero(d);
    skew = Eigen::VectorXd::Zero(d);
    kurt = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd m4 = Eigen::VectorXd::Zero(d);
    for (const auto& x : s) {
        Eigen::ArrayXd c = (x - mean).array();
        var.array() += c * c;
        skew.array() += c * c * c;
        m4.array() += c * c * c * c;
    }
    var /= n;
    for (int i = 0; i < d; ++i) {
        double sd = std::sqrt(std::max(var(i), 1e-300));
        skew(i) = skew(i) / n / (sd * sd * sd);
        kurt(i) = m4(i) / n / (var(i) * var(i)) - 3.0;
    }
    mean_se = (var / n).cwiseSqrt();
    var_se = ((m4 / n - var.cwiseProduct(var)).cwiseMax(0.0) / n).cwiseSqrt();
}

} // namespace

LawReport compare_laws(const std::vector<Eigen::VectorXd>& a,
                       const std::vector<Eigen::VectorXd>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("compare_laws: empty samples");
    LawReport r;
    r.dimension = static_cast<int>(a[0].size());
    r.count_a = static_cast<long long>(a.size());
    r.count_b = static_cast<long long>(b.size());
    law_moments(a, r.mean_a, r.var_a, r.skew_a, r.kurt_a, r.mean_stderr_a, r.var_stderr_a);
    law_moments(b, r.mean_b, r.var_b, r.skew_b, r.kurt_b, r.mean_stderr_b, r.var_stderr_b);
    r.ks_statistic = Eigen::VectorXd::Zero(r.dimension);
    for (int c = 0; c < r.dimension; ++c) {
        std::vector<double> xa, xb;
        for (const auto& x : a) xa.push_back(x(c));
        for (const auto& x : b) xb.push_back(x(c));
        std::sort(xa.begin(), xa.end());
        std::sort(xb.begin(), xb.end());
        double ks = 0.0;
        std::size_t i = 0, j = 0;
        while (i < xa.size() && j < xb.size()) {
            // advance both runs past a tied value before comparing the CDFs
            double v = std::min(xa[i], xb[j]);
            while (i < xa.size() && xa[i] == v) ++i;
            while (j < xb.size() && xb[j] == v) ++j;
            ks = std::max(ks, std::abs(static_cast<double>(i) / xa.size() -
                                       static_cast<double>(j) / xb.size()));
        }
        r.ks_statistic(c) = ks;
    }
    return r;
}

namespace {

using Vec = Eigen::VectorXd;

// nested central differences of a vector field along directions
Vec dir1(const VectorField& f, const Vec& x, const Vec& a, double h) {
    return (f.value(x + h * a) - f.value(x - h * a)) / (2.0 * h);
}
Vec dir2(const VectorField& f, const Vec& x, const Vec& a, const Vec& b, double h) {
    auto g = [&](const Vec& y) { return dir1(f, y, a, h); };
    return (g(x + h * b) - g(x - h * b)) / (2.0 * h);
}
Vec dir3(const VectorField& f, const Vec& x, const Vec& a, const Vec& b, const Vec& c,
         double h) {
    auto g = [&](const Vec& y) { return dir2(f, y, a, b, h); };
    return (g(x + h * c) - g(x - h * c)) / (2.0 * h);
}

} // namespace

RdeReductionReport verify_rde_reduction(const VectorFieldSystem& sys, std::uint64_t seed) {
    const int m = static_cast<int>(sys.fields.size());
    const int d = sys.dimension;
    RngStream rng(seed, 0xDAE1ULL, 0);

    // random state
    Vec x(d);
    for (int i = 0; i < d; ++i) x(i) = rng.uniform(-0.5, 0.5);

    // exact polyline lift of an antisymmetric matrix path: all Chen/shuffle
    // identities plus the antisymmetry relations hold by construction
    const int K = 6;
    const double amp = 0.3;
    std::vector<Eigen::MatrixXd> incr;
    for (int s = 0; s < K; ++s) {
        Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) {
                delta(i, j) = amp * rng.uniform(-1.0, 1.0);
                delta(j, i) = -delta(i, j);
            }
        incr.push_back(delta);
    }
    Eigen::MatrixXd b1 = Eigen::MatrixXd::Zero(m, m);
    for (const auto& dm : incr) b1 += dm;
    auto idx4 = [m](int i, int j, int k, int l) { return ((i * m + j) * m + k) * m + l; };
    std::vector<double> b2(static_cast<std::size_t>(m) * m * m * m, 0.0);
    for (int s = 0; s < K; ++s)
        for (int sp = 0; sp < K; ++sp) {
            double w = sp > s ? 1.0 : (sp == s ? 0.5 : 0.0);
            if (w == 0.0) continue;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    for (int k = 0; k < m; ++k)
                        for (int l = 0; l < m; ++l)
                            b2[idx4(i, j, k, l)] += w * incr[s](i, j) * incr[sp](k, l);
        }

    // lift levels per the zero-odd-level embedding: X2 = B1, X4 = B2
    auto x2 = [&](int i, int j) { return b1(i, j); };
    auto x4 = [&](int i, int j, int k, int l) { return b2[idx4(i, j, k, l)]; };

    const double h = 2e-3;
    std::vector<Vec> v(m);
    std::vector<Eigen::MatrixXd> J(m);
    for (int i = 0; i < m; ++i) {
        v[i] = sys.fields[i].value(x);
        J[i] = jac_of(sys.fields[i], x);
    }

    RdeReductionReport rep;

    // level-3 terms couple to X3 = 0
    rep.level3_terms = 0.0;

    // symmetric prefactors against the (k,l)-antisymmetric level 4
    Vec sym4 = Vec::Zero(d);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k)
                for (int l = 0; l < m; ++l) {
                    double w = x4(l, k, j, i);
                    if (w == 0.0) continue;
                    sym4 += w * dir3(sys.fields[i], x, v[j], v[k], v[l], h);
                    sym4 += w * dir1(sys.fields[i], x,
                                     dir2(sys.fields[j], x, v[k], v[l], h), h);
                }
    rep.sym_level4_terms = sym4.norm();

    // full Davie step of the level-4 expansion
    Vec step4 = Vec::Zero(d);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) step4 += J[i] * v[j] * x2(j, i);
    step4 += sym4; // included for completeness; numerically ~0
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k)
                for (int l = 0; l < m; ++l) {
                    double w = x4(l, k, j, i);
                    double w3 = x4(j, l, k, i) + x4(l, j, k, i) + x4(l, k, j, i);
                    if (w != 0.0) step4 += w * (J[i] * (J[j] * (J[k] * v[l])));
                    if (w3 != 0.0)
                        step4 += w3 * dir2(sys.fields[i], x, v[j],
                                           J[k] * v[l], h);
                }

    // bracket form: 1/2 [V_i,V_j] B1_ij + 1/4 D[V_i,V_j]([V_k,V_l]) B2_klij
    Vec step2 = Vec::Zero(d);
    std::vector<std::vector<VectorField>> br(m, std::vector<VectorField>(m));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) br[i][j] = lie_bracket(sys, i, j);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) step2 += 0.5 * br[i][j].value(x) * b1(i, j);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k)
                for (int l = 0; l < m; ++l) {
                    double w = b2[idx4(k, l, i, j)];
                    if (w == 0.0) continue;
                    step2 += 0.25 * w * dir1(br[i][j], x, br[k][l].value(x), h);
                }

    rep.step_mismatch = (step4 - step2).norm();
    rep.scale = step2.norm();
    rep.ok = rep.sym_level4_terms <= 1e-6 + 1e-4 * rep.scale &&
             rep.step_mismatch <= 1e-7 + 1e-4 * std::max(rep.scale, 1.0);
    return rep;
}

} // namespace roughlab
