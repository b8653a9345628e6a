#include "roughlab/fbm.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>

namespace roughlab {
namespace {

int nearest_index(double t, double t0, double dt, int n, const char* what) {
    // snap to the nearest grid node; only genuinely out-of-range times fail
    int i = static_cast<int>(std::lround((t - t0) / dt));
    if (i < 0 || i >= n)
        throw std::out_of_range(std::string(what) + ": time off the grid");
    return i;
}

// autocovariance of unit-step fractional Gaussian noise
double fgn_gamma(int k, double H) {
    double a = std::abs(k);
    return 0.5 * (std::pow(a + 1.0, 2 * H) - 2.0 * std::pow(a, 2 * H) +
                  std::pow(std::abs(a - 1.0), 2 * H));
}

// one fGn sample of length `steps` (unit step), either circulant or dense
Eigen::ArrayXd sample_fgn(int steps, double H, RngStream& rng, bool& dense_fallback) {
    const int M = 2 * steps;
    std::vector<double> c(M);
    for (int j = 0; j <= steps; ++j) c[j] = fgn_gamma(j, H);
    for (int j = steps + 1; j < M; ++j) c[j] = c[M - j];
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> lambda;
    fft.fwd(lambda, c);
    double min_ev = 0.0;
    for (const auto& l : lambda) min_ev = std::min(min_ev, l.real());
    if (min_ev < -1e-9 * std::abs(lambda[0].real())) {
        // exact dense factorisation fallback (only reachable at tiny grids)
        dense_fallback = true;
        Eigen::MatrixXd cov(steps, steps);
        for (int i = 0; i < steps; ++i)
            for (int j = 0; j < steps; ++j) cov(i, j) = fgn_gamma(i - j, H);
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        Eigen::VectorXd z(steps);
        for (int i = 0; i < steps; ++i) z(i) = rng.gaussian();
        return (llt.matrixL() * z).array();
    }
    std::vector<std::complex<double>> y(M);
    y[0] = std::sqrt(std::max(0.0, lambda[0].real())) * rng.gaussian();
    y[steps] = std::sqrt(std::max(0.0, lambda[steps].real())) * rng.gaussian();
    for (int k = 1; k < steps; ++k) {
        double s = std::sqrt(std::max(0.0, lambda[k].real()) * 0.5);
        double a = rng.gaussian(), b = rng.gaussian();
        y[k] = std::complex<double>(s * a, s * b);
        y[M - k] = std::conj(y[k]);
    }
    std::vector<std::complex<double>> x;
    fft.inv(x, y); // inv includes the 1/M factor
    Eigen::ArrayXd out(steps);
    // undo 1/M and apply the 1/sqrt(M) of the synthesis formula
    double scale = std::sqrt(static_cast<double>(M));
    for (int i = 0; i < steps; ++i) out(i) = x[i].real() * scale;
    return out;
}

// linear convolution of `sig` with a centred kernel (offsets -K..K), same size
Eigen::ArrayXd convolve_centred(const Eigen::ArrayXd& sig, const Eigen::ArrayXd& kernel) {
    const int n = static_cast<int>(sig.size());
    const int kw = static_cast<int>(kernel.size()); // 2K+1
    const int K = (kw - 1) / 2;
    int len = 1;
    while (len < n + kw) len <<= 1;
    std::vector<double> a(len, 0.0), b(len, 0.0);
    for (int i = 0; i < n; ++i) a[i] = sig(i);
    for (int i = 0; i < kw; ++i) b[i] = kernel(i);
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> fa, fb;
    fft.fwd(fa, a);
    fft.fwd(fb, b);
    for (int i = 0; i < len; ++i) fa[i] *= fb[i];
    std::vector<std::complex<double>> prod;
    fft.inv(prod, fa);
    Eigen::ArrayXd out(n);
    for (int i = 0; i < n; ++i) out(i) = prod[i + K].real();
    return out;
}

} // namespace

int GridPath::index_of(double t) const { return nearest_index(t, t0, dt, n, "GridPath"); }
int DriverSet::index_of(double t) const { return nearest_index(t, t0, dt, n, "DriverSet"); }

GridPath sample_fbm(double H, double t0, double t1, int n, int m, std::uint64_t seed,
                    std::uint64_t sample_index) {
    if (n < 2 || !(t1 > t0)) throw std::invalid_argument("sample_fbm: bad grid");
    if (!(H > 0.0) || H > 0.5) throw std::invalid_argument("sample_fbm: H out of range");
    GridPath p;
    p.t0 = t0;
    p.t1 = t1;
    p.n = n;
    p.dt = (t1 - t0) / (n - 1);
    p.hurst = H;
    p.seed = seed;
    const int steps = n - 1;
    const double scale = std::pow(p.dt, H);
    int anchor = -1;
    if (t0 <= 0.0 && 0.0 <= t1) anchor = static_cast<int>(std::lround(-t0 / p.dt));
    for (int comp = 0; comp < m; ++comp) {
        RngStream rng(seed, mix_key(0xFB3ULL, static_cast<std::uint64_t>(comp), 0),
                      sample_index);
        Eigen::ArrayXd incr = scale * sample_fgn(steps, H, rng, p.dense_fallback);
        Eigen::ArrayXd path(n);
        path(0) = 0.0;
        for (int i = 0; i < steps; ++i) path(i + 1) = path(i) + incr(i);
        if (anchor >= 0 && anchor < n) path -= path(anchor);
        p.values.push_back(std::move(path));
    }
    return p;
}

DriverSet mollify(const GridPath& path, double eps, const Mollifier& moll, double c_eps) {
    if (eps < 10.0 * path.dt)
        throw std::invalid_argument("mollify: eps too small for the grid");
    const int K = static_cast<int>(std::ceil(eps / path.dt));
    Eigen::ArrayXd kernel(2 * K + 1);
    // xi(t) = C_eps int B(t - s) rho'(s/eps)/eps^2 ds, rectangle rule
    // (the integrand vanishes at both support endpoints)
    for (int j = -K; j <= K; ++j)
        kernel(K + j) = moll.derivative(j * path.dt / eps) / (eps * eps) * path.dt;
    DriverSet d;
    d.eps = eps;
    d.c_eps = c_eps;
    d.t0 = path.t0;
    d.dt = path.dt;
    d.n = path.n;
    d.valid_lo = path.t0 + eps;
    d.valid_hi = path.t1 - eps;
    // convolution picks B(t - s_j) for kernel offset j directly
    for (const auto& b : path.values) d.xi.push_back(c_eps * convolve_centred(b, kernel));
    return d;
}

double TensorLevels::component(const std::vector<int>& idx) const {
    switch (idx.size()) {
        case 1: return x1(idx[0]);
        case 2: return x2(idx[0], idx[1]);
        case 3: return x3(idx[0], idx[1], idx[2]);
        case 4: return x4(idx[0], idx[1], idx[2], idx[3]);
        default: throw std::invalid_argument("component: level out of range");
    }
}

TensorLevels iterated_integrals(const DriverSet& drv, double s, double t, int max_level) {
    if (max_level < 1 || max_level > 4)
        throw std::invalid_argument("iterated_integrals: level out of range");
    if (s < drv.valid_lo - 1e-12 || t > drv.valid_hi + 1e-12 || !(s < t))
        throw std::out_of_range("iterated_integrals: interval outside valid range");
    const int a = drv.index_of(s), b = drv.index_of(t);
    const int len = b - a + 1;
    const int m = static_cast<int>(drv.xi.size());
    const double dt = drv.dt;

    TensorLevels out;
    out.m = m;
    out.max_level = max_level;
    out.s = s;
    out.t = t;

    // exact truncated signature of the polyline with per-step increments
    // delta_i = (xi(i) + xi(i+1))/2 * dt: the running product of tensor
    // exponentials satisfies the Chen and shuffle identities to roundoff
    std::vector<int> size{1};
    for (int k = 1; k <= max_level; ++k) size.push_back(size.back() * m);
    std::vector<std::vector<double>> sig(max_level + 1);
    sig[0] = {1.0};
    for (int k = 1; k <= max_level; ++k) sig[k].assign(size[k], 0.0);
    std::vector<std::vector<double>> expd(max_level + 1), next(max_level + 1);
    expd[0] = {1.0};
    std::vector<double> delta(m);
    for (int i = 0; i + 1 < len; ++i) {
        for (int comp = 0; comp < m; ++comp)
            delta[comp] = 0.5 * (drv.xi[comp](a + i) + drv.xi[comp](a + i + 1)) * dt;
        double fact = 1.0;
        for (int k = 1; k <= max_level; ++k) {
            fact /= k;
            expd[k].assign(size[k], 0.0);
            // delta^{(x)k} / k!
            for (int idx = 0; idx < size[k]; ++idx) {
                double v = fact;
                int w = idx;
                for (int pos = 0; pos < k; ++pos) {
                    v *= delta[w % m];
                    w /= m;
                }
                expd[k][idx] = v;
            }
        }
        next[0] = {1.0};
        for (int k = 1; k <= max_level; ++k) {
            next[k].assign(size[k], 0.0);
            for (int j = 0; j <= k; ++j) {
                const auto& lhs = sig[j];
                const auto& rhs = expd[k - j];
                for (int p = 0; p < size[j]; ++p) {
                    if (lhs[p] == 0.0) continue;
                    double* dst = next[k].data() + p * size[k - j];
                    for (int q = 0; q < size[k - j]; ++q) dst[q] += lhs[p] * rhs[q];
                }
            }
        }
        for (int k = 1; k <= max_level; ++k) sig[k].swap(next[k]);
    }
    for (int k = 1; k <= max_level; ++k) out.level.push_back(std::move(sig[k]));
    return out;
}

TensorLevels chen_compose(const TensorLevels& a, const TensorLevels& b) {
    if (a.m != b.m || a.max_level != b.max_level)
        throw std::invalid_argument("chen_compose: level/width mismatch");
    if (std::abs(a.t - b.s) > 1e-9)
        throw std::invalid_argument("chen_compose: junction mismatch");
    const int m = a.m;
    TensorLevels c;
    c.m = m;
    c.max_level = a.max_level;
    c.s = a.s;
    c.t = b.t;
    // sizes m^1..m^L
    std::vector<int> size{1};
    for (int k = 1; k <= a.max_level; ++k) size.push_back(size.back() * m);
    auto get = [&](const TensorLevels& x, int lvl, int flat) -> double {
        if (lvl == 0) return 1.0;
        return x.level[lvl - 1][flat];
    };
    for (int k = 1; k <= a.max_level; ++k) {
        std::vector<double> flat(size[k], 0.0);
        for (int idx = 0; idx < size[k]; ++idx) {
            // split the word at every position: prefix from a, suffix from b
            for (int j = 0; j <= k; ++j) {
                int prefix = idx / size[k - j];
                int suffix = idx % size[k - j];
                flat[idx] += get(a, j, prefix) * get(b, k - j, suffix);
            }
        }
        c.level.push_back(std::move(flat));
    }
    return c;
}

McMomentResult mc_moment(const MomentSpec& spec, double H, double eps, const Mollifier& moll,
                         double t0, double t1, int grid_n, long long samples,
                         std::uint64_t seed, int batches) {
    if (samples < batches) batches = static_cast<int>(samples);
    const double c_eps = scaling_constant(H, eps);
    McMomentResult res;
    res.eps = eps;
    res.samples = samples;
    std::vector<double> batch_sum(batches, 0.0);
    std::vector<long long> batch_count(batches, 0);
    for (long long i = 0; i < samples; ++i) {
        GridPath path = sample_fbm(H, t0, t1, grid_n, spec.component_count, seed, i);
        DriverSet drv = mollify(path, eps, moll, c_eps);
        double prod = 1.0;
        std::map<std::pair<long long, long long>, TensorLevels> cache;
        for (const auto& f : spec.factors) {
            auto key = std::make_pair(std::llround(f.s * 1e12), std::llround(f.t * 1e12));
            auto it = cache.find(key);
            if (it == cache.end())
                it = cache.emplace(key, iterated_integrals(drv, f.s, f.t, 4)).first;
            prod *= it->second.component(f.index);
        }
        int bidx = static_cast<int>(i * batches / samples);
        batch_sum[bidx] += prod;
        ++batch_count[bidx];
    }
    std::vector<double> means(batches);
    double total = 0.0;
    for (int bidx = 0; bidx < batches; ++bidx) {
        means[bidx] = batch_sum[bidx] / static_cast<double>(batch_count[bidx]);
        total += batch_sum[bidx];
    }
    res.estimate = total / static_cast<double>(samples);
    double var = 0.0;
    for (double mu : means) var += (mu - res.estimate) * (mu - res.estimate);
    var /= std::max(1, batches - 1);
    res.stderr_est = std::sqrt(var / batches);
    res.batch_means = std::move(means);
    return res;
}

} // namespace roughlab
