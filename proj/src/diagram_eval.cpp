#include "roughlab/diagram.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "roughlab/quadrature.hpp"

namespace roughlab {
namespace {

double expo(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }

} // namespace

double chi_cutoff(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double f = expo(x), g = expo(1.0 - x);
    return f / (f + g);
}

double chi_cutoff_derivative(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    double f = expo(x), g = expo(1.0 - x);
    double fp = f / (x * x);
    double gp = -g / ((1.0 - x) * (1.0 - x));
    double denom = f + g;
    return (fp * g - f * gp) / (denom * denom);
}

namespace {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration, cached per order.
std::pair<std::vector<double>, std::vector<double>> compute_gl(int n) {
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
        double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (t * p1 - p0) / (t * t - 1.0);
            double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (t * p1 - p0) / (t * t - 1.0);
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    return {x, w};
}

const std::pair<std::vector<double>, std::vector<double>>& gl_rule(int n) {
    static std::mutex mu;
    static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gl(n)).first;
    return it->second;
}

struct EvalContext {
    const Diagram* d;
    const KernelModel* model;
    double delta = 0.0;
    bool with_chi = false;

    // integration order: per chain, active interior vertices top-down
    std::vector<int> vars;
    std::vector<double> chain_lo; // lower boundary value per variable
    std::vector<int> hi_source;   // ambient vertex whose value bounds this one above
    std::vector<double> r;        // current point, indexed by ambient id

    double integrand() const {
        const Poset& p = *d->poset;
        double prod = 1.0;
        for (auto [a, b] : d->gk) prod *= model->k(r[b] - r[a]);
        for (auto [a, b] : d->ek) prod *= model->kbar(r[b] - r[a]);
        if (with_chi) {
            for (auto [a, b] : d->gchi) {
                int up = p.leq(a, b) ? b : a;
                int lo = p.leq(a, b) ? a : b;
                prod *= 1.0 - chi_cutoff((r[up] - r[lo]) / delta);
            }
            for (auto [a, b] : d->echi) {
                int up = p.leq(a, b) ? b : a;
                int lo = p.leq(a, b) ? a : b;
                // +1 when the tail is the upper endpoint: the boundary term of
                // the integration-by-parts identity fixes this orientation
                double sign = p.leq(b, a) ? 1.0 : -1.0;
                prod *= sign * chi_cutoff_derivative((r[up] - r[lo]) / delta) / delta;
            }
        }
        return prod;
    }
};

EvalContext make_context(const Diagram& d, const KernelModel& model,
                         const BoundaryValues& b, bool with_chi, double delta) {
    const Poset& p = *d.poset;
    if (!p.is_linear()) throw std::invalid_argument("evaluation requires a linear ambient poset");
    EvalContext ctx;
    ctx.d = &d;
    ctx.model = &model;
    ctx.with_chi = with_chi;
    ctx.delta = delta;
    ctx.r.assign(p.size(), 0.0);
    for (auto [v, s] : b.lower) ctx.r[v] = s;
    for (auto [v, t] : b.upper) ctx.r[v] = t;
    for (const auto& chain : p.chains()) {
        double lo = b.lower.at(chain.front());
        for (std::size_t i = chain.size(); i-- > 1;) {
            int v = chain[i - 1];
            if (!p.is_interior(v) || !d.active[v]) continue;
            ctx.vars.push_back(v);
            ctx.chain_lo.push_back(lo);
            ctx.hi_source.push_back(p.up_in(d.active, v));
        }
    }
    return ctx;
}

double nested_adaptive(EvalContext& ctx, std::size_t idx, const EvalOptions& opt, double scale) {
    if (idx == ctx.vars.size()) return ctx.integrand();
    QuadOptions q;
    q.abs_tol = opt.abs_tol * scale;
    q.rel_tol = opt.rel_tol;
    double lo = ctx.chain_lo[idx];
    double hi = ctx.r[ctx.hi_source[idx]];
    if (hi <= lo) return 0.0;
    int v = ctx.vars[idx];
    return integrate(
               [&](double x) {
                   ctx.r[v] = x;
                   return nested_adaptive(ctx, idx + 1, opt, scale * 0.1);
               },
               lo, hi, q)
        .value;
}

double tensor_gl(EvalContext& ctx, std::size_t idx, int n) {
    if (idx == ctx.vars.size()) return ctx.integrand();
    const auto& [xs, ws] = gl_rule(n);
    double lo = ctx.chain_lo[idx];
    double hi = ctx.r[ctx.hi_source[idx]];
    if (hi <= lo) return 0.0;
    double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    int v = ctx.vars[idx];
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        ctx.r[v] = mid + half * xs[i];
        sum += ws[i] * tensor_gl(ctx, idx + 1, n);
    }
    return sum * half;
}

EvalResult evaluate(const Diagram& d, const KernelModel& model, const BoundaryValues& b,
                    bool with_chi, double delta, const EvalOptions& opt) {
    EvalContext ctx = make_context(d, model, b, with_chi, delta);
    const int depth = static_cast<int>(ctx.vars.size());
    EvalResult res;
    if (depth == 0) {
        res.value = ctx.integrand();
        return res;
    }
    if (depth <= 2) {
        res.value = nested_adaptive(ctx, 0, opt, 1.0);
        res.error = opt.abs_tol * 10.0;
        return res;
    }
    if (depth <= 6) {
        int n = opt.gl_points;
        if (n == 0) n = depth <= 3 ? 64 : depth == 4 ? 40 : depth == 5 ? 24 : 16;
        res.value = tensor_gl(ctx, 0, n);
        if (opt.estimate_error) {
            double v2 = tensor_gl(ctx, 0, std::max(8, (3 * n) / 4));
            res.error = std::abs(res.value - v2);
        }
        return res;
    }

    // Monte Carlo over the monotone domain of the active sub-poset
    res.monte_carlo = true;
    auto view = d.active_view();
    BoundaryValues vb;
    for (auto [v, s] : b.lower) vb.lower[view.from_ambient[v]] = s;
    for (auto [v, t] : b.upper) vb.upper[view.from_ambient[v]] = t;
    VolumeResult vol = polytope_volume(view.poset, vb);
    if (vol.value == 0.0) return res;
    RngStream rng(opt.seed, 0xD1A6ULL, 0);
    double sum = 0.0, sumsq = 0.0;
    for (long long i = 0; i < opt.mc_samples; ++i) {
        auto x = sample_monotone(view.poset, vb, rng);
        for (auto [vid, val] : x) ctx.r[view.to_ambient[vid]] = val;
        double f = ctx.integrand();
        sum += f;
        sumsq += f * f;
    }
    double mean = sum / static_cast<double>(opt.mc_samples);
    double var = std::max(0.0, sumsq / static_cast<double>(opt.mc_samples) - mean * mean);
    res.value = vol.value * mean;
    res.error = vol.value * std::sqrt(var / static_cast<double>(opt.mc_samples)) +
                std::abs(mean) * vol.std_error;
    return res;
}

} // namespace

EvalResult evaluate_J_numeric(const Diagram& d, const KernelModel& model,
                              const BoundaryValues& b, const EvalOptions& opt) {
    if (!d.gchi.empty() || !d.echi.empty())
        throw std::invalid_argument("evaluate_J_numeric: diagram has chi edges");
    return evaluate(d, model, b, false, 0.0, opt);
}

EvalResult evaluate_J_eps_delta_numeric(const Diagram& d, const KernelModel& model,
                                        double delta, const BoundaryValues& b,
                                        const EvalOptions& opt) {
    if (delta <= 0.0) throw std::invalid_argument("delta must be positive");
    return evaluate(d, model, b, true, delta, opt);
}

} // namespace roughlab
