#include "roughlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>

#include "roughlab/quadrature.hpp"

namespace roughlab {
namespace {

double bump_raw(double t) {
    if (std::abs(t) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - t * t));
}
double bump_raw_d(double t) {
    if (std::abs(t) >= 1.0) return 0.0;
    double s = 1.0 - t * t;
    return bump_raw(t) * (-2.0 * t / (s * s));
}
double poly_raw(double t) {
    if (std::abs(t) >= 1.0) return 0.0;
    double s = 1.0 - t * t;
    return s * s * s * std::exp(-1.0 / s);
}
double poly_raw_d(double t) {
    if (std::abs(t) >= 1.0) return 0.0;
    double s = 1.0 - t * t;
    return -2.0 * t * std::exp(-1.0 / s) * (s + 3.0 * s * s);
}

Mollifier make_normalised(std::string name, double (*raw)(double), double (*raw_d)(double)) {
    QuadOptions opt;
    opt.abs_tol = 1e-13;
    opt.rel_tol = 1e-13;
    double z = integrate_strict([&](double t) { return raw(t); }, -1.0, 1.0, opt);
    Mollifier m;
    m.name = std::move(name);
    m.evaluate = [raw, z](double t) { return raw(t) / z; };
    m.derivative = [raw_d, z](double t) { return raw_d(t) / z; };
    return m;
}

double binom_frac(double x, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= (x - i) / (i + 1);
    return r;
}

} // namespace

Mollifier Mollifier::bump() { return make_normalised("bump", bump_raw, bump_raw_d); }
Mollifier Mollifier::poly_bump() { return make_normalised("poly_bump", poly_raw, poly_raw_d); }

Mollifier Mollifier::by_name(const std::string& name) {
    if (name == "bump") return bump();
    if (name == "poly_bump") return poly_bump();
    throw std::invalid_argument("unknown mollifier: " + name);
}

double scaling_constant(double hurst, double eps) {
    if (hurst <= 0.0 || hurst > 0.25) throw std::invalid_argument("hurst must be in (0, 1/4]");
    if (eps <= 0.0) throw std::invalid_argument("eps must be positive");
    if (hurst < 0.25) return std::pow(eps, 0.25 - hurst);
    if (eps >= 1.0) throw std::invalid_argument("eps must be < 1 at hurst = 1/4");
    return 1.0 / std::sqrt(-std::log(eps));
}

KernelProfile::KernelProfile(const Mollifier& m, double hurst) : hurst_(hurst) {
    const double twoH = 2.0 * hurst;
    QuadOptions tight;
    tight.abs_tol = 1e-12;
    tight.rel_tol = 1e-12;

    // autocorrelations of rho' (w) and rho (q) on u in [0,2]
    const int nw = 2001;
    const double hw = 2.0 / (nw - 1);
    std::vector<double> wv(nw), qv(nw);
    for (int i = 0; i < nw; ++i) {
        double u = i * hw;
        double lo = std::max(-1.0, u - 1.0);
        if (lo >= 1.0) { wv[i] = qv[i] = 0.0; continue; }
        wv[i] = integrate([&](double x) { return m.derivative(x) * m.derivative(x - u); },
                          lo, 1.0, tight).value;
        qv[i] = integrate([&](double x) { return m.evaluate(x) * m.evaluate(x - u); },
                          lo, 1.0, tight).value;
    }
    w_ = UniformTable(0.0, hw, std::move(wv));
    q_ = UniformTable(0.0, hw, std::move(qv));

    auto weval = [&](double u) { double a = std::abs(u); return a > 2.0 ? 0.0 : w_(a); };
    auto qeval = [&](double u) { double a = std::abs(u); return a > 2.0 ? 0.0 : q_(a); };

    // even moments for the far-field series
    auto moment = [&](const UniformTable& tab, int p) {
        return 2.0 * integrate([&](double u) { return std::pow(u, p) * tab(u); },
                               0.0, 2.0, tight).value;
    };
    std::vector<double> mw(5, 0.0), mq(4, 0.0);
    for (int j = 1; j <= 4; ++j) mw[j] = moment(w_, 2 * j);
    for (int j = 0; j <= 3; ++j) mq[j] = moment(q_, 2 * j);

    k0_series_.assign(4, 0.0);
    for (int j = 1; j <= 4; ++j) k0_series_[j - 1] = binom_frac(twoH, 2 * j) * mw[j];
    kappa0_series_.assign(4, 0.0);
    for (int j = 0; j <= 3; ++j) {
        double coeff = twoH;
        double fact = 1.0;
        for (int i = 1; i <= 2 * j; ++i) { coeff *= (twoH - i); fact *= i; }
        kappa0_series_[j] = mq[j] / fact * coeff;
    }

    // exact 1-d reductions, tabulated on [0, y_max]
    const int np = 8001;
    const double hp = y_max_ / (np - 1);
    QuadOptions ptol;
    ptol.abs_tol = 1e-11;
    ptol.rel_tol = 1e-11;
    std::vector<double> k0v(np), kapv(np);
    for (int i = 0; i < np; ++i) {
        double y = i * hp;
        // k0(y) = int w(u) |y-u|^{2H} du over [-2,2]
        std::vector<double> bp;
        if (y < 2.0) bp.push_back(y);
        k0v[i] = integrate([&](double u) { return weval(u) * std::pow(std::abs(y - u), twoH); },
                           -2.0, 2.0, ptol, bp).value;
        // kappa0(y) = int q(u) F_H(y-u) du, with the algebraic singularity at
        // u = y removed by the substitution tau = |y-u|^{2H}
        const double inv = 1.0 / twoH;
        double part1 = integrate(
            [&](double tau) { return qeval(y - std::pow(tau, inv)); },
            0.0, std::pow(y + 2.0, twoH), ptol).value;
        double part2 = 0.0;
        if (y < 2.0)
            part2 = integrate(
                [&](double tau) { return qeval(y + std::pow(tau, inv)); },
                0.0, std::pow(2.0 - y, twoH), ptol).value;
        kapv[i] = part1 - part2;
    }
    k0_ = UniformTable(0.0, hp, std::move(k0v));
    kappa0_ = UniformTable(0.0, hp, std::move(kapv));
}

double KernelProfile::k0_series_at(double y) const {
    const double twoH = 2.0 * hurst_;
    double s = 0.0;
    for (std::size_t j = 0; j < k0_series_.size(); ++j)
        s += k0_series_[j] * std::pow(y, twoH - 2.0 * static_cast<double>(j + 1));
    return s;
}

double KernelProfile::kappa0_series_at(double y) const {
    const double twoH = 2.0 * hurst_;
    double s = 0.0;
    for (std::size_t j = 0; j < kappa0_series_.size(); ++j)
        s += kappa0_series_[j] * std::pow(y, twoH - 1.0 - 2.0 * static_cast<double>(j));
    return s;
}

double KernelProfile::k0(double y) const {
    y = std::abs(y);
    return y <= y_max_ ? k0_(y) : k0_series_at(y);
}

double KernelProfile::kappa0(double y) const {
    y = std::abs(y);
    return y <= y_max_ ? kappa0_(y) : kappa0_series_at(y);
}

double KernelProfile::k0_leading(double y) const {
    return k0_series_[0] * std::pow(std::abs(y), 2.0 * hurst_ - 2.0);
}

double KernelProfile::kappa0_leading(double y) const {
    return kappa0_series_[0] * std::pow(std::abs(y), 2.0 * hurst_ - 1.0);
}

double KernelProfile::kappa0_sq_integral(double upper) const {
    QuadOptions opt;
    opt.abs_tol = 1e-12;
    opt.rel_tol = 1e-10;
    double head_to = std::min(upper, y_max_);
    double head = integrate([&](double y) { double v = kappa0_(y); return v * v; },
                            0.0, head_to, opt).value;
    if (upper <= y_max_) return head;
    // tail of the squared series integrates in closed form term by term
    const double twoH = 2.0 * hurst_;
    double tail = 0.0;
    for (std::size_t j = 0; j < kappa0_series_.size(); ++j)
        for (std::size_t k = 0; k < kappa0_series_.size(); ++k) {
            double beta = 2.0 * twoH - 2.0 - 2.0 * static_cast<double>(j + k);
            double a = kappa0_series_[j] * kappa0_series_[k];
            if (std::isinf(upper)) {
                if (beta + 1.0 >= 0.0)
                    throw std::invalid_argument("kappa0^2 tail diverges (hurst = 1/4)");
                tail += -a * std::pow(y_max_, beta + 1.0) / (beta + 1.0);
            } else if (std::abs(beta + 1.0) < 1e-14) {
                tail += a * std::log(upper / y_max_);
            } else {
                tail += a * (std::pow(upper, beta + 1.0) - std::pow(y_max_, beta + 1.0)) /
                        (beta + 1.0);
            }
        }
    return head + tail;
}

std::shared_ptr<const KernelProfile> KernelProfile::get(const Mollifier& m, double hurst) {
    static std::mutex mu;
    static std::map<std::pair<std::string, long long>, std::shared_ptr<const KernelProfile>> cache;
    auto key = std::make_pair(m.name, static_cast<long long>(std::llround(hurst * 1e12)));
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto p = std::make_shared<const KernelProfile>(m, hurst);
    cache[key] = p;
    return p;
}

KernelModel::KernelModel(double hurst, double eps, Mollifier m)
    : hurst_(hurst), eps_(eps), c_eps_(scaling_constant(hurst, eps)),
      mollifier_(std::move(m)), profile_(KernelProfile::get(mollifier_, hurst)) {}

double KernelModel::k(double t) const {
    double pref = -0.5 * c_eps_ * c_eps_ * std::pow(eps_, 2.0 * hurst_ - 2.0);
    return pref * profile_->k0(std::abs(t) / eps_);
}

double KernelModel::kbar(double t) const {
    if (t == 0.0) return 0.0;
    double pref = 0.5 * c_eps_ * c_eps_ * std::pow(eps_, 2.0 * hurst_ - 1.0);
    double v = pref * profile_->kappa0(std::abs(t) / eps_);
    return t > 0.0 ? v : -v;
}

ConstantCResult constant_c(double hurst, const Mollifier& m,
                           const std::vector<double>& eps_list, double delta) {
    if (delta <= 0.0 || delta > 1.0) throw std::invalid_argument("delta must be in (0,1]");
    auto profile = KernelProfile::get(m, hurst);
    ConstantCResult res;
    for (double eps : eps_list) {
        double c = scaling_constant(hurst, eps);
        double pref = 0.5 * std::pow(c, 4) * std::pow(eps, 4.0 * hurst - 1.0);
        res.per_eps.push_back({eps, pref * profile->kappa0_sq_integral(delta / eps)});
    }
    if (!res.per_eps.empty()) res.estimate = res.per_eps.back().value;
    if (hurst < 0.25)
        res.direct_limit =
            0.5 * profile->kappa0_sq_integral(std::numeric_limits<double>::infinity());
    for (std::size_t i = 2; i < res.per_eps.size(); ++i) {
        double d1 = std::abs(res.per_eps[i - 1].value - res.per_eps[i - 2].value);
        double d2 = std::abs(res.per_eps[i].value - res.per_eps[i - 1].value);
        if (d2 > d1 * (1.0 + 1e-9)) res.monotone_tail = false;
    }
    return res;
}

KbarBoundsReport verify_kbar_bounds(double hurst, const Mollifier& m,
                                    const std::vector<double>& eps_list) {
    KbarBoundsReport rep;
    rep.eps_list = eps_list;
    for (double eps : eps_list) {
        KernelModel model(hurst, eps, m);
        double env_half = 0.0, env_alpha = 0.0;
        const int n = 200;
        for (int i = 0; i < n; ++i) {
            double t = (eps / 10.0) *
                       std::pow(10.0 / eps, static_cast<double>(i) / (n - 1));
            double v = std::abs(model.kbar(t));
            env_half = std::max(env_half, v * std::sqrt(t));
            env_alpha = std::max(env_alpha, v * std::pow(t, rep.alpha));
        }
        QuadOptions opt;
        opt.abs_tol = 1e-10;
        opt.rel_tol = 1e-8;
        double l1 = 2.0 * integrate([&](double t) { return std::abs(model.kbar(t)); },
                                    0.0, 1.0, opt, {eps, 2.0 * eps}).value;
        rep.envelope_half.push_back(env_half);
        rep.envelope_alpha.push_back(env_alpha);
        rep.l1_norm.push_back(l1);
    }
    return rep;
}

} // namespace roughlab
