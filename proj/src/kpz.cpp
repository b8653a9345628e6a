#include "roughlab/kpz.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "roughlab/interp.hpp"
#include "roughlab/quadrature.hpp"
#include "roughlab/rng.hpp"

namespace roughlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// spatial Fourier cutoff: modes with |k| eps > kKappaCut carry a mollifier
// factor below ~1e-8 and are dropped
constexpr double kKappaCut = 60.0;
constexpr double kFtMax = 80.0; // profile transforms treated as 0 beyond this

using Cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// profile Fourier transforms, tabulated once per mollifier name

UniformTable build_ft_table(const Mollifier& m) {
    // composite Gauss-Legendre nodes on [-1,1], fine enough for ~13 periods
    constexpr int panels = 24, per_panel = 12;
    static const double gx[per_panel] = {
        -0.9815606342467192, -0.9041172563704749, -0.7699026741943047,
        -0.5873179542866175, -0.3678314989981802, -0.1252334085114689,
        0.1252334085114689,  0.3678314989981802,  0.5873179542866175,
        0.7699026741943047,  0.9041172563704749,  0.9815606342467192};
    static const double gw[per_panel] = {
        0.0471753363865118, 0.1069393259953184, 0.1600783285433462,
        0.2031674267230659, 0.2334925365383548, 0.2491470458134028,
        0.2491470458134028, 0.2334925365383548, 0.2031674267230659,
        0.1600783285433462, 0.1069393259953184, 0.0471753363865118};
    std::vector<double> nodes, fw;
    const double R = m.support_radius;
    for (int p = 0; p < panels; ++p) {
        double a = -R + 2.0 * R * p / panels, b = -R + 2.0 * R * (p + 1) / panels;
        for (int q = 0; q < per_panel; ++q) {
            double t = 0.5 * (a + b) + 0.5 * (b - a) * gx[q];
            nodes.push_back(t);
            fw.push_back(0.5 * (b - a) * gw[q] * m.evaluate(t));
        }
    }
    const double step = 0.02;
    const int n = static_cast<int>(kFtMax / step) + 4;
    std::vector<double> vals(n);
    for (int i = 0; i < n; ++i) {
        double w = i * step, acc = 0.0;
        for (std::size_t j = 0; j < nodes.size(); ++j) acc += fw[j] * std::cos(w * nodes[j]);
        vals[i] = acc;
    }
    return UniformTable(0.0, step, std::move(vals));
}

const UniformTable& ft_table(const Mollifier& m) {
    static std::map<std::string, UniformTable> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(m.name);
    if (it == cache.end()) it = cache.emplace(m.name, build_ft_table(m)).first;
    return it->second;
}

double ft_eval(const UniformTable& tab, double w) {
    w = std::abs(w);
    return w >= kFtMax ? 0.0 : tab(w);
}

int mode_cutoff(double eps, int nx) {
    int m = static_cast<int>(std::floor(kKappaCut / (kTwoPi * eps)));
    return std::min(m, nx / 2 - 1);
}

// int_0^{kFtMax} f(u) / (a^2 + u^2)^pow du with the Lorentzian peak resolved
double lorentz_integral(const std::function<double(double)>& num, double a, int pow) {
    QuadOptions opt;
    opt.rel_tol = 1e-9;
    opt.abs_tol = 1e-16;
    std::vector<double> brk;
    for (double b : {a, 4.0 * a, 16.0 * a})
        if (b > 1e-12 && b < kFtMax) brk.push_back(b);
    auto f = [&](double u) {
        double den = a * a + u * u;
        if (pow == 2) den *= den;
        return num(u) / den;
    };
    return integrate(f, 0.0, kFtMax, opt, brk).value;
}

// per-mode time-covariance of chi at lag t:
//   Khat_m(t) = eps^{7/2} k^4 bx(k eps)^2 / pi * int_0^inf bt(u)^2 cos(u t/eps^2)
//               / (a^2 + u^2) du,   a = k^2 eps^2
// (the full omega-integral is twice the half-line one by symmetry)
Eigen::VectorXd kernel_row(const Mollifier2d& moll, double eps, double t, int m_max) {
    const UniformTable& bt = ft_table(moll.time);
    const UniformTable& bx = ft_table(moll.space);
    const double tau = t / (eps * eps);
    Eigen::VectorXd row(m_max + 1);
    row(0) = 0.0;
    for (int m = 1; m <= m_max; ++m) {
        double k = kTwoPi * m, a = k * k * eps * eps;
        double sx = ft_eval(bx, k * eps);
        if (sx == 0.0) {
            row(m) = 0.0;
            continue;
        }
        double integ = lorentz_integral(
            [&](double u) {
                double b = ft_eval(bt, u);
                return b * b * std::cos(u * tau);
            },
            a, 1);
        row(m) = std::pow(eps, 3.5) * std::pow(k, 4) * sx * sx / std::numbers::pi * integ;
    }
    return row;
}

Eigen::ArrayXd synth(Eigen::FFT<double>& fft, const Eigen::VectorXcd& half, int nx) {
    Eigen::VectorXcd full = Eigen::VectorXcd::Zero(nx);
    int m_max = std::min<int>(static_cast<int>(half.size()) - 1, nx / 2 - 1);
    full(0) = Cplx(half(0).real(), 0.0);
    for (int m = 1; m <= m_max; ++m) {
        full(m) = half(m);
        full(nx - m) = std::conj(half(m));
    }
    Eigen::VectorXcd out;
    fft.inv(out, full);
    return static_cast<double>(nx) * out.real().array();
}

Eigen::VectorXcd coeffs(Eigen::FFT<double>& fft, const Eigen::ArrayXd& f, int m_max) {
    Eigen::VectorXd tmp = f.matrix();
    Eigen::VectorXcd freq;
    fft.fwd(freq, tmp);
    return freq.head(m_max + 1) / static_cast<double>(f.size());
}

// ---------------------------------------------------------------------------
// streaming mollified noise in spatial Fourier space
//
// White-noise cells are N(0, 1/(dt dx)); the torus Fourier coefficients
// eta_hat_m(t_i) are then complex Gaussian with E|eta_hat|^2 = 1/dt.  The
// mollifier acts as a spatial multiplier bx(k eps) and a (2J+1)-tap temporal
// convolution with b_eps(j dt) dt, J = eps^2/dt.

class NoiseStream {
public:
    // micro_dt <= 0 means one noise cell per step; otherwise each step
    // averages dt/micro_dt micro-cells, so runs with different dt but the same
    // (seed, stream, micro_dt) share one underlying noise realisation
    NoiseStream(int nx, double dt, double eps, const Mollifier2d& moll,
                std::uint64_t seed, std::uint64_t stream, double micro_dt = 0.0)
        : nx_(nx), dt_(dt), seed_(seed), stream_(stream) {
        n_agg_ = micro_dt > 0.0 ? std::max<long>(1, std::lround(dt / micro_dt)) : 1;
        modes_ = mode_cutoff(eps, nx);
        half_taps_ = std::max<long>(1, std::lround(eps * eps / dt));
        taps_ = 2 * half_taps_ + 1;
        w_.resize(taps_);
        for (long j = -half_taps_; j <= half_taps_; ++j)
            w_(j + half_taps_) = moll.time.evaluate(static_cast<double>(j) * dt / (eps * eps));
        w_ /= w_.sum(); // discrete unit mass, matching int rho = 1
        const UniformTable& bx = ft_table(moll.space);
        smul_.resize(modes_ + 1);
        for (int m = 0; m <= modes_; ++m) smul_(m) = ft_eval(bx, kTwoPi * m * eps);
        ring_.setZero(2 * (modes_ + 1), taps_);
        slice_.resize(modes_ + 1);
        next_step_ = 0;
        gen_upto_ = -half_taps_;
        while (gen_upto_ < half_taps_) gen_slice();
    }

    int modes() const { return modes_; }

    // mollified noise coefficients at consecutive steps 0, 1, 2, ...
    const Eigen::VectorXcd& next() {
        gen_slice(); // slice next_step_ + J
        long r = (next_step_ - half_taps_) % taps_;
        if (r < 0) r += taps_;
        Eigen::VectorXd out = ring_.middleCols(r, taps_ - r) * w_.head(taps_ - r);
        if (r > 0) out += ring_.leftCols(r) * w_.tail(r);
        for (int m = 0; m <= modes_; ++m) slice_(m) = Cplx(out(2 * m), out(2 * m + 1));
        ++next_step_;
        return slice_;
    }

private:
    void gen_slice() {
        long s = gen_upto_++;
        long col = s % taps_;
        if (col < 0) col += taps_;
        // the average of n_agg micro-cells of variance n_agg/dt has variance 1/dt
        const double full = std::sqrt(static_cast<double>(n_agg_) / dt_) / n_agg_;
        const double half = full / std::sqrt(2.0);
        ring_.col(col).setZero();
        for (long j = 0; j < n_agg_; ++j) {
            RngStream rng(seed_, stream_,
                          static_cast<std::uint64_t>(s * n_agg_ + j + (1LL << 40)));
            ring_(0, col) += smul_(0) * full * rng.gaussian();
            for (int m = 1; m <= modes_; ++m) {
                ring_(2 * m, col) += smul_(m) * half * rng.gaussian();
                ring_(2 * m + 1, col) += smul_(m) * half * rng.gaussian();
            }
        }
    }

    int nx_;
    double dt_;
    std::uint64_t seed_, stream_;
    int modes_;
    long half_taps_, taps_, next_step_, gen_upto_;
    long n_agg_ = 1;
    Eigen::VectorXd w_, smul_;
    Eigen::MatrixXd ring_;
    Eigen::VectorXcd slice_;
};

void check_resolution(double eps, double dx, double dt) {
    if (eps + 1e-12 < 10.0 * std::max(dx, std::sqrt(dt)))
        throw std::invalid_argument("grid does not resolve eps: need eps >= 10 max(dx, sqrt(dt))");
}

struct BatchStats {
    double mean = 0.0, var = 0.0, c4 = 0.0;
};

BatchStats moments_of(const std::vector<double>& v) {
    BatchStats b;
    const double n = static_cast<double>(v.size());
    for (double x : v) b.mean += x;
    b.mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double x : v) {
        double d = x - b.mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    b.var = m2;
    b.c4 = m4 - 3.0 * m2 * m2;
    return b;
}

void mean_se(const std::vector<double>& per_batch, double& mean, double& se) {
    const double n = static_cast<double>(per_batch.size());
    mean = 0.0;
    for (double x : per_batch) mean += x;
    mean /= n;
    double s = 0.0;
    for (double x : per_batch) s += (x - mean) * (x - mean);
    se = n > 1 ? std::sqrt(s / (n - 1) / n) : 0.0;
}

} // namespace

// ---------------------------------------------------------------------------

Mollifier2d Mollifier2d::bump() { return {Mollifier::bump(), Mollifier::bump()}; }

Mollifier2d Mollifier2d::poly_bump() {
    return {Mollifier::poly_bump(), Mollifier::poly_bump()};
}

Mollifier2d Mollifier2d::by_name(const std::string& name) {
    if (name == "bump") return bump();
    if (name == "poly_bump") return poly_bump();
    throw std::invalid_argument("unknown mollifier: " + name);
}

double mollifier2d_l2sq(const Mollifier2d& m) {
    auto sq = [](const Mollifier& p) {
        return integrate_strict([&](double t) { return p.evaluate(t) * p.evaluate(t); },
                                -p.support_radius, p.support_radius);
    };
    return sq(m.time) * sq(m.space);
}

double mollifier_ft(const Mollifier& m, double w) { return ft_eval(ft_table(m), w); }

KpzConstants kpz_constants(const Mollifier2d& moll, double eps) {
    const UniformTable& bt = ft_table(moll.time);
    const UniformTable& bx = ft_table(moll.space);
    auto bt2 = [&](double u) {
        double b = ft_eval(bt, u);
        return b * b;
    };
    auto bt4 = [&](double u) {
        double b = ft_eval(bt, u);
        return b * b * b * b;
    };
    const int m_max = static_cast<int>(std::floor(kKappaCut / (kTwoPi * eps)));
    double sum2 = 0.0, sum4 = 0.0;
    for (int m = 1; m <= m_max; ++m) {
        double k = kTwoPi * m, a = k * k * eps * eps;
        double sx = ft_eval(bx, k * eps);
        if (sx == 0.0) continue;
        // I2 = (1/2pi) int |Ghat|^2 dw, I4 = (1/2pi) int |Ghat|^4 dw with
        // Ghat(w,k) = -k^2 bx(k eps) bt(eps^2 w) / (k^2 + i w)
        double i2 = std::pow(k, 4) * sx * sx * eps * eps / std::numbers::pi *
                    lorentz_integral(bt2, a, 1);
        double i4 = std::pow(k, 8) * std::pow(sx, 4) * std::pow(eps, 6) / std::numbers::pi *
                    lorentz_integral(bt4, a, 2);
        sum2 += i2;
        sum4 += i4;
    }
    KpzConstants out;
    out.c_eps = std::pow(eps, 1.5) * 2.0 * sum2;
    out.sigma2 = 4.0 * std::pow(eps, 3) * sum4;
    return out;
}

double kpz_kernel(const Mollifier2d& moll, double eps, double t, double x) {
    const int m_max = static_cast<int>(std::floor(kKappaCut / (kTwoPi * eps)));
    Eigen::VectorXd row = kernel_row(moll, eps, t, m_max);
    double acc = 0.0;
    for (int m = 1; m <= m_max; ++m) acc += 2.0 * row(m) * std::cos(kTwoPi * m * x);
    return acc;
}

KpzFields build_chi_xi(const SpaceTimeGrid& grid, double eps, const Mollifier2d& moll,
                       std::uint64_t seed, std::uint64_t sample_index) {
    check_resolution(eps, grid.dx(), grid.dt);
    const int nx = grid.nx;
    const long burn_steps = std::lround(grid.t_burn / grid.dt);
    const long out_steps = std::lround(grid.t_end / grid.dt);
    const long stride = std::max<long>(1, std::lround(eps * eps / (4.0 * grid.dt)));
    const long n_frames = out_steps / stride;
    if (n_frames < 1) throw std::invalid_argument("retained window shorter than one frame");

    KpzFields f;
    f.eps = eps;
    f.c_eps = kpz_constants(moll, eps).c_eps;
    f.nx = nx;
    f.dx = grid.dx();
    f.frame_dt = stride * grid.dt;
    f.chi.resize(n_frames, nx);
    f.xi.resize(n_frames, nx);
    f.eta.resize(n_frames, nx);
    f.frame_times.resize(n_frames);

    NoiseStream ns(nx, grid.dt, eps, moll, seed,
                   0x4B5AULL ^ splitmix64(sample_index));
    const int M = ns.modes();
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(M + 1);
    Eigen::VectorXd alpha(M + 1), beta(M + 1);
    for (int m = 0; m <= M; ++m) {
        double k2 = std::pow(kTwoPi * m, 2);
        alpha(m) = std::exp(-k2 * grid.dt);
        beta(m) = m == 0 ? grid.dt : (1.0 - alpha(m)) / k2;
    }
    Eigen::FFT<double> fft;
    Eigen::VectorXcd chihat(M + 1);
    const double amp = std::pow(eps, 0.75);

    for (long i = 0; i < burn_steps + out_steps; ++i) {
        const Eigen::VectorXcd& e = ns.next();
        for (int m = 0; m <= M; ++m)
            v(m) = alpha(m) * v(m) + beta(m) * Cplx(0.0, kTwoPi * m) * e(m);
        long after = i + 1 - burn_steps;
        if (after > 0 && after % stride == 0) {
            long row = after / stride - 1;
            for (int m = 0; m <= M; ++m) chihat(m) = amp * Cplx(0.0, kTwoPi * m) * v(m);
            Eigen::ArrayXd chi = synth(fft, chihat, nx);
            f.chi.row(row) = chi.matrix().transpose();
            f.xi.row(row) = (chi * chi - f.c_eps).matrix().transpose();
            f.eta.row(row) = synth(fft, e, nx).matrix().transpose();
            f.frame_times[row] = after * grid.dt;
        }
    }
    return f;
}

double pair_field(const KpzFields& f, const Eigen::MatrixXd& field,
                  const Mollifier2d& phi, double lambda, double t_centre,
                  double x_centre) {
    if (field.rows() != f.chi.rows() || field.cols() != f.nx)
        throw std::invalid_argument("field shape does not match the frame set");
    if (lambda > 0.45) throw std::invalid_argument("test function wraps the torus");
    const double l2 = lambda * lambda;
    if (t_centre - l2 < f.frame_times.front() - 0.5 * f.frame_dt ||
        t_centre + l2 > f.frame_times.back() + 0.5 * f.frame_dt)
        throw std::invalid_argument("test function support leaves the retained window");

    Eigen::ArrayXd wx(f.nx);
    for (int j = 0; j < f.nx; ++j) {
        double d = j * f.dx - x_centre;
        d -= std::round(d); // periodic distance on the unit torus
        wx(j) = std::abs(d) < lambda ? phi.space.evaluate(d / lambda) : 0.0;
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < field.rows(); ++i) {
        double dtc = f.frame_times[i] - t_centre;
        if (std::abs(dtc) >= l2) continue;
        acc += phi.time.evaluate(dtc / l2) * (field.row(i).array().transpose() * wx).sum();
    }
    return acc * std::pow(lambda, -3) * f.frame_dt * f.dx;
}

std::vector<double> harvest_pairings(const KpzFields& f, const Eigen::MatrixXd& field,
                                     const Mollifier2d& phi, double lambda) {
    const int x_slots = static_cast<int>(std::floor(1.0 / (2.0 * lambda)));
    if (x_slots < 1) throw std::invalid_argument("lambda too large for disjoint translates");
    const double l2 = lambda * lambda;
    std::vector<double> out;
    for (double tc = f.frame_times.front() + l2; tc + l2 <= f.frame_times.back() + 1e-12;
         tc += 2.0 * l2)
        for (int s = 0; s < x_slots; ++s)
            out.push_back(pair_field(f, field, phi, lambda, tc, (s + 0.5) / x_slots));
    return out;
}

double pairing_variance_quadrature(const Mollifier2d& moll, double eps,
                                   const Mollifier2d& phi, double lambda) {
    // 1-d autocorrelations of the test-function profiles
    auto autocorr = [](const Mollifier& p) {
        const double R = p.support_radius;
        const double step = 0.01 * R;
        int n = static_cast<int>(2.0 * R / step) + 3;
        std::vector<double> vals(n);
        for (int i = 0; i < n; ++i) {
            double tau = i * step;
            vals[i] = tau >= 2.0 * R
                          ? 0.0
                          : integrate_strict(
                                [&](double s) { return p.evaluate(s) * p.evaluate(s + tau); },
                                -R, R - tau);
        }
        return UniformTable(0.0, step, std::move(vals));
    };
    UniformTable at = autocorr(phi.time), ax = autocorr(phi.space);
    const double rt = phi.time.support_radius, rx = phi.space.support_radius;
    auto at_eval = [&](double u) { return std::abs(u) >= 2.0 * rt ? 0.0 : at(std::abs(u)); };
    auto ax_eval = [&](double u) { return std::abs(u) >= 2.0 * rx ? 0.0 : ax(std::abs(u)); };

    const double l2 = lambda * lambda;
    const double tau_max = std::min(2.0 * rt * l2, 60.0 * eps * eps);
    const double y_max = std::min(2.0 * rx * lambda, 15.0 * eps);
    const int m_max = mode_cutoff(eps, 1 << 20);

    // graded panels resolve the kernel peak (width ~ eps^2 x eps)
    auto panels = [](double scale, double upper) {
        std::vector<double> edges{0.0};
        for (double e : {1.0, 4.0, 16.0})
            if (e * scale < upper) edges.push_back(e * scale);
        edges.push_back(upper);
        return edges;
    };
    static const double gx[8] = {-0.9602898564975363, -0.7966664774136267,
                                 -0.5255324099163290, -0.1834346424956498,
                                 0.1834346424956498,  0.5255324099163290,
                                 0.7966664774136267,  0.9602898564975363};
    static const double gw[8] = {0.1012285362903763, 0.2223810344533745,
                                 0.3137066458778873, 0.3626837833783620,
                                 0.3626837833783620, 0.3137066458778873,
                                 0.2223810344533745, 0.1012285362903763};
    std::vector<double> tn, tw, yn, yw;
    auto fill = [&](std::vector<double>& nodes, std::vector<double>& weights,
                    const std::vector<double>& edges) {
        for (std::size_t p = 0; p + 1 < edges.size(); ++p)
            for (int q = 0; q < 8; ++q) {
                nodes.push_back(0.5 * (edges[p] + edges[p + 1]) +
                                0.5 * (edges[p + 1] - edges[p]) * gx[q]);
                weights.push_back(0.5 * (edges[p + 1] - edges[p]) * gw[q]);
            }
    };
    fill(tn, tw, panels(eps * eps, tau_max));
    fill(yn, yw, panels(eps, y_max));

    // K(tau, y) for each tau node via one mode row, then the cos sum per y
    double acc = 0.0;
    for (std::size_t i = 0; i < tn.size(); ++i) {
        Eigen::VectorXd row = kernel_row(moll, eps, tn[i], m_max);
        for (std::size_t j = 0; j < yn.size(); ++j) {
            double kv = 0.0;
            for (int m = 1; m <= m_max; ++m)
                kv += 2.0 * row(m) * std::cos(kTwoPi * m * yn[j]);
            acc += tw[i] * yw[j] * at_eval(tn[i] / l2) * ax_eval(yn[j] / lambda) * kv * kv;
        }
    }
    // quadrant x4 (both arguments even), overall factor 2, parabolic rescale
    return 8.0 * std::pow(lambda, -3) * acc;
}

NoiseReport decorrelation_and_cumulants(const std::vector<KpzFields>& realisations,
                                        const Mollifier2d& phi, const Mollifier2d& psi,
                                        double lambda) {
    if (realisations.empty()) throw std::invalid_argument("no realisations");
    NoiseReport r;
    std::vector<double> b_mean, b_var, b_corr, b_c4x, b_c4e, b_veta, b_vchi;
    for (const auto& f : realisations) {
        std::vector<double> px = harvest_pairings(f, f.xi, phi, lambda);
        std::vector<double> pe = harvest_pairings(f, f.eta, psi, lambda);
        r.samples += static_cast<long long>(px.size());
        BatchStats sx = moments_of(px), se_ = moments_of(pe);
        double cov = 0.0;
        for (std::size_t i = 0; i < px.size(); ++i)
            cov += (px[i] - sx.mean) * (pe[i] - se_.mean);
        cov /= static_cast<double>(px.size());
        b_mean.push_back(sx.mean);
        b_var.push_back(sx.var);
        b_corr.push_back(cov / std::sqrt(std::max(sx.var * se_.var, 1e-300)));
        b_c4x.push_back(sx.c4);
        b_c4e.push_back(se_.c4);
        b_veta.push_back(se_.var);
        b_vchi.push_back(f.chi.array().square().mean());
    }
    r.batches = static_cast<int>(realisations.size());
    mean_se(b_mean, r.mean_xi, r.mean_xi_se);
    mean_se(b_var, r.var_xi, r.var_xi_se);
    mean_se(b_corr, r.corr_xi_eta, r.corr_se);
    mean_se(b_c4x, r.c4_xi, r.c4_xi_se);
    mean_se(b_c4e, r.c4_eta, r.c4_eta_se);
    mean_se(b_veta, r.var_eta, r.var_eta_se);
    mean_se(b_vchi, r.var_chi, r.var_chi_se);
    return r;
}

// ---------------------------------------------------------------------------
// SPDE integrators

namespace {

struct SolveCore {
    // shared semi-implicit spectral machinery on the half spectrum 0..nx/2-1
    int nx;
    double dt;
    Eigen::VectorXd alpha, beta, kvec;
    Eigen::FFT<double> fft;

    explicit SolveCore(const SpaceTimeGrid& g) : nx(g.nx), dt(g.dt) {
        int h = nx / 2;
        alpha.resize(h);
        beta.resize(h);
        kvec.resize(h);
        for (int m = 0; m < h; ++m) {
            double k = kTwoPi * m, k2 = k * k;
            kvec(m) = k;
            alpha(m) = std::exp(-k2 * dt);
            beta(m) = m == 0 ? dt : (1.0 - alpha(m)) / k2;
        }
    }

    Eigen::ArrayXd deriv(const Eigen::VectorXcd& hhat) {
        Eigen::VectorXcd d(hhat.size());
        for (Eigen::Index m = 0; m < hhat.size(); ++m) d(m) = Cplx(0.0, kvec(m)) * hhat(m);
        return synth(fft, d, nx);
    }

    void step(Eigen::VectorXcd& hhat, const Eigen::ArrayXd& forcing_real,
              const Eigen::VectorXcd& forcing_hat) {
        Eigen::VectorXcd nh = coeffs(fft, forcing_real, nx / 2 - 1);
        for (Eigen::Index m = 0; m < hhat.size(); ++m) {
            Cplx add = nh(m);
            if (m < forcing_hat.size()) add += forcing_hat(m);
            hhat(m) = alpha(m) * hhat(m) + beta(m) * add;
        }
    }
};

} // namespace

KpzSolution solve_kpz(const SpaceTimeGrid& grid, double eps, const Mollifier2d& moll,
                      const Eigen::ArrayXd& h0, KpzVariant variant, std::uint64_t seed,
                      double noise_power, double noise_scale, double noise_micro_dt) {
    check_resolution(eps, grid.dx(), grid.dt);
    if (h0.size() != grid.nx) throw std::invalid_argument("h0 size mismatch");
    const int nx = grid.nx;
    const long steps = std::lround(grid.t_end / grid.dt);
    SolveCore core(grid);
    KpzSolution sol;
    const long out_stride = std::max<long>(1, steps / 32);

    if (variant == KpzVariant::COLE_HOPF_REF) {
        const double sigma = noise_scale * std::sqrt(kpz_constants(moll, eps).sigma2);
        Eigen::ArrayXd z = h0.exp();
        const double noise_scale = sigma * std::sqrt(grid.dt / grid.dx());
        sol.times.push_back(0.0);
        sol.h.push_back(h0);
        for (long i = 0; i < steps; ++i) {
            RngStream rng(seed, 0xC01EULL, static_cast<std::uint64_t>(i));
            for (int j = 0; j < nx; ++j) z(j) *= 1.0 + noise_scale * rng.gaussian();
            Eigen::VectorXcd zh = coeffs(core.fft, z, nx / 2 - 1);
            for (int m = 0; m < nx / 2; ++m) zh(m) *= core.alpha(m);
            z = synth(core.fft, zh, nx);
            if (z.minCoeff() <= 0.0) {
                sol.positivity_ok = false;
                z = z.max(1e-300);
            }
            if ((i + 1) % out_stride == 0 || i + 1 == steps) {
                sol.times.push_back((i + 1) * grid.dt);
                sol.h.push_back(z.log());
            }
        }
        sol.shift_final = Eigen::ArrayXd::Zero(nx);
        return sol;
    }

    const double a = noise_power;
    const double noise_amp = noise_scale * std::pow(eps, a);
    const double centring =
        noise_amp * noise_amp * std::pow(eps, -1.5) * kpz_constants(moll, eps).c_eps;
    const std::uint64_t stream = 0x4B50ULL;

    NoiseStream ns(nx, grid.dt, eps, moll, seed, stream, noise_micro_dt);
    const int M = ns.modes();
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(M + 1);
    Eigen::VectorXcd v_next(M + 1), tmp(M + 1);
    Eigen::VectorXcd hhat = coeffs(core.fft, h0, nx / 2 - 1);
    Eigen::VectorXcd fhat = Eigen::VectorXcd::Zero(M + 1);
    sol.times.push_back(0.0);
    sol.h.push_back(h0);

    for (long i = 0; i < steps; ++i) {
        const Eigen::VectorXcd& e = ns.next();
        for (int m = 0; m <= M; ++m) {
            double k2 = std::pow(kTwoPi * m, 2);
            double al = std::exp(-k2 * grid.dt);
            double be = m == 0 ? grid.dt : (1.0 - al) / k2;
            v_next(m) = al * v(m) + be * Cplx(0.0, kTwoPi * m) * e(m);
        }
        Eigen::ArrayXd dxh = core.deriv(hhat);
        Eigen::ArrayXd forcing;
        if (variant == KpzVariant::U_FORM) {
            forcing = dxh * dxh - centring;
            for (int m = 0; m <= M; ++m) fhat(m) = noise_amp * Cplx(0.0, kTwoPi * m) * e(m);
        } else {
            // chi and xi evaluated at the midpoint of the v-integrator step
            for (int m = 0; m <= M; ++m)
                tmp(m) = noise_amp * Cplx(0.0, kTwoPi * m) * 0.5 * (v(m) + v_next(m));
            Eigen::ArrayXd chi = synth(core.fft, tmp, nx);
            forcing = dxh * dxh + 2.0 * chi * dxh + (chi * chi - centring);
            fhat.setZero();
        }
        core.step(hhat, forcing, fhat);
        v = v_next;
        if (!hhat.allFinite()) throw std::runtime_error("kpz solver lost stability");
        if ((i + 1) % out_stride == 0 || i + 1 == steps) {
            sol.times.push_back((i + 1) * grid.dt);
            sol.h.push_back(synth(core.fft, hhat, nx));
        }
    }
    sol.shift_final = noise_amp * synth(core.fft, v, nx);
    return sol;
}

KpzSolution solve_kpz_deterministic(const SpaceTimeGrid& grid, const Eigen::ArrayXd& h0) {
    if (h0.size() != grid.nx) throw std::invalid_argument("h0 size mismatch");
    const long steps = std::lround(grid.t_end / grid.dt);
    SolveCore core(grid);
    Eigen::VectorXcd hhat = coeffs(core.fft, h0, grid.nx / 2 - 1);
    Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(1);
    KpzSolution sol;
    sol.times.push_back(0.0);
    sol.h.push_back(h0);
    const long out_stride = std::max<long>(1, steps / 32);
    for (long i = 0; i < steps; ++i) {
        Eigen::ArrayXd dxh = core.deriv(hhat);
        core.step(hhat, (dxh * dxh).eval(), zero);
        if (!hhat.allFinite()) throw std::runtime_error("kpz solver lost stability");
        if ((i + 1) % out_stride == 0 || i + 1 == steps) {
            sol.times.push_back((i + 1) * grid.dt);
            sol.h.push_back(synth(core.fft, hhat, grid.nx));
        }
    }
    sol.shift_final = Eigen::ArrayXd::Zero(grid.nx);
    return sol;
}

} // namespace roughlab
