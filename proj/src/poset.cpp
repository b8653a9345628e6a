#include "roughlab/poset.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace roughlab {

Poset Poset::from_relations(int n, const std::vector<std::pair<int, int>>& relations,
                            std::vector<int> bottom, std::vector<int> top) {
    Poset p;
    p.n_ = n;
    p.leq_.assign(n, std::vector<char>(n, 0));
    for (int i = 0; i < n; ++i) p.leq_[i][i] = 1;
    for (auto [a, b] : relations) {
        if (a < 0 || a >= n || b < 0 || b >= n)
            throw std::invalid_argument("poset relation out of range");
        p.leq_[a][b] = 1;
    }
    // transitive closure
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            if (p.leq_[i][k])
                for (int j = 0; j < n; ++j)
                    if (p.leq_[k][j]) p.leq_[i][j] = 1;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && p.leq_[i][j] && p.leq_[j][i])
                throw std::invalid_argument("relation contains a cycle");

    p.role_.assign(n, 0);
    for (int v : bottom) p.role_[v] = -1;
    for (int v : top) {
        if (p.role_[v] != 0) throw std::invalid_argument("element is both bottom and top");
        p.role_[v] = 1;
    }
    for (int v = 0; v < n; ++v) {
        for (int u = 0; u < n; ++u) {
            if (u == v) continue;
            if (p.role_[v] == -1 && p.leq_[u][v])
                throw std::invalid_argument("bottom element is not minimal");
            if (p.role_[v] == 1 && p.leq_[v][u])
                throw std::invalid_argument("top element is not maximal");
        }
    }
    p.finalize();
    return p;
}

Poset Poset::chain(int k) {
    if (k < 0) throw std::invalid_argument("negative interior size");
    std::vector<std::pair<int, int>> rel;
    for (int i = 0; i + 1 < k + 2; ++i) rel.push_back({i, i + 1});
    return from_relations(k + 2, rel, {0}, {k + 1});
}

Poset Poset::disjoint_sum(const std::vector<Poset>& parts) {
    int n = 0;
    std::vector<std::pair<int, int>> rel;
    std::vector<int> bottom, top;
    for (const auto& q : parts) {
        for (auto [a, b] : q.covers_) rel.push_back({a + n, b + n});
        for (int v : q.bottom_) bottom.push_back(v + n);
        for (int v : q.top_) top.push_back(v + n);
        n += q.n_;
    }
    return from_relations(n, rel, bottom, top);
}

void Poset::finalize() {
    const int n = n_;
    bottom_.clear(); top_.clear(); interior_.clear();
    for (int v = 0; v < n; ++v) {
        if (role_[v] == -1) bottom_.push_back(v);
        else if (role_[v] == 1) top_.push_back(v);
        else interior_.push_back(v);
    }

    // transitive reduction -> covers
    covers_.clear();
    std::vector<std::vector<char>> cov(n, std::vector<char>(n, 0));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            if (a == b || !leq_[a][b]) continue;
            bool direct = true;
            for (int m = 0; m < n && direct; ++m)
                if (m != a && m != b && leq_[a][m] && leq_[m][b]) direct = false;
            if (direct) { cov[a][b] = 1; covers_.push_back({a, b}); }
        }

    up_.assign(n, -1);
    down_.assign(n, -1);
    std::vector<int> out_deg(n, 0), in_deg(n, 0);
    for (auto [a, b] : covers_) {
        ++out_deg[a]; ++in_deg[b];
        up_[a] = (out_deg[a] == 1) ? b : -2;
        down_[b] = (in_deg[b] == 1) ? a : -2;
    }
    // a poset is linear when every element has at most one immediate
    // predecessor/successor and each component is a bottom-to-top path
    linear_ = true;
    for (int v = 0; v < n; ++v) {
        if (up_[v] == -2 || down_[v] == -2) linear_ = false;
        if (role_[v] == 0 && (up_[v] < 0 || down_[v] < 0)) linear_ = false;
        if (role_[v] == -1 && down_[v] >= 0) linear_ = false;
        if (role_[v] == 1 && up_[v] >= 0) linear_ = false;
    }
    for (int v = 0; v < n && linear_; ++v) {
        if (role_[v] == -1 && up_[v] < 0) linear_ = false; // isolated bottom
        if (role_[v] == 1 && down_[v] < 0) linear_ = false;
    }

    chain_of_.assign(n, -1);
    pos_in_chain_.assign(n, -1);
    chains_.clear();
    if (linear_) {
        for (int b : bottom_) {
            std::vector<int> chain;
            for (int v = b; v != -1; v = up_[v]) {
                chain_of_[v] = static_cast<int>(chains_.size());
                pos_in_chain_[v] = static_cast<int>(chain.size());
                chain.push_back(v);
            }
            chains_.push_back(std::move(chain));
        }
    }
}

int Poset::up_in(const std::vector<char>& active, int v) const {
    if (!linear_) throw std::logic_error("up_in requires a linear poset");
    for (int u = up_[v]; u != -1; u = up_[u])
        if (active[u]) return u;
    return -1;
}

int Poset::down_in(const std::vector<char>& active, int v) const {
    if (!linear_) throw std::logic_error("down_in requires a linear poset");
    for (int u = down_[v]; u != -1; u = down_[u])
        if (active[u]) return u;
    return -1;
}

std::vector<int> Poset::total_order(const std::vector<int>& priority) const {
    // Kahn with a priority tie-break (default: smallest id first)
    std::vector<int> indeg(n_, 0);
    for (auto [a, b] : covers_) ++indeg[b];
    auto pri = [&](int v) { return priority.empty() ? v : priority[v]; };
    std::vector<int> avail;
    for (int v = 0; v < n_; ++v)
        if (indeg[v] == 0) avail.push_back(v);
    std::vector<int> rank(n_, -1);
    for (int step = 0; step < n_; ++step) {
        auto it = std::min_element(avail.begin(), avail.end(),
                                   [&](int a, int b) { return pri(a) < pri(b); });
        int v = *it;
        avail.erase(it);
        rank[v] = step;
        for (auto [a, b] : covers_)
            if (a == v && --indeg[b] == 0) avail.push_back(b);
    }
    return rank;
}

std::string Poset::canonical_key() const {
    std::vector<int> rank = total_order();
    std::ostringstream os;
    os << n_ << ";b:";
    std::vector<int> b, t;
    for (int v : bottom_) b.push_back(rank[v]);
    for (int v : top_) t.push_back(rank[v]);
    std::sort(b.begin(), b.end());
    std::sort(t.begin(), t.end());
    for (int v : b) os << v << ",";
    os << "t:";
    for (int v : t) os << v << ",";
    os << "c:";
    std::vector<std::pair<int, int>> cv;
    for (auto [a, c] : covers_) cv.push_back({rank[a], rank[c]});
    std::sort(cv.begin(), cv.end());
    for (auto [a, c] : cv) os << a << ">" << c << ",";
    return os.str();
}

BoundaryValues BoundaryValues::constant(const Poset& p, double s, double t) {
    BoundaryValues b;
    for (int v : p.bottoms()) b.lower[v] = s;
    for (int v : p.tops()) b.upper[v] = t;
    return b;
}

QuotientResult quotient_by_pairs(const Poset& p, const std::vector<std::pair<int, int>>& merges) {
    const int n = p.size();
    // union-find over elements
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    QuotientResult res;
    for (auto [a, b] : merges) {
        if (!p.is_interior(a) || !p.is_interior(b))
            throw std::invalid_argument("quotient merge touches a boundary element");
        if (p.comparable(a, b)) ++res.e_le_count;
        parent[find(a)] = find(b);
    }
    std::vector<int> class_id(n, -1);
    int m = 0;
    for (int v = 0; v < n; ++v)
        if (find(v) == v) class_id[v] = m++;
    res.class_of.assign(n, -1);
    res.classes.assign(m, {});
    for (int v = 0; v < n; ++v) {
        res.class_of[v] = class_id[find(v)];
        res.classes[res.class_of[v]].push_back(v);
    }

    // induced relation on classes; unordered iff it has a nontrivial cycle
    std::vector<std::vector<char>> rel(m, std::vector<char>(m, 0));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            if (a != b && p.leq(a, b) && res.class_of[a] != res.class_of[b])
                rel[res.class_of[a]][res.class_of[b]] = 1;
    for (int k = 0; k < m; ++k)
        for (int i = 0; i < m; ++i)
            if (rel[i][k])
                for (int j = 0; j < m; ++j)
                    if (rel[k][j]) rel[i][j] = 1;
    for (int i = 0; i < m; ++i)
        if (rel[i][i]) { res.ordered = false; return res; }

    std::vector<std::pair<int, int>> qrel;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (i != j && rel[i][j]) qrel.push_back({i, j});
    std::vector<int> qb, qt;
    for (int c = 0; c < m; ++c) {
        bool has_b = false, has_t = false;
        for (int v : res.classes[c]) {
            has_b |= p.is_bottom(v);
            has_t |= p.is_top(v);
        }
        if (has_b) qb.push_back(c);
        if (has_t) qt.push_back(c);
    }
    res.quotient = Poset::from_relations(m, qrel, qb, qt);
    return res;
}

long long linear_extensions_count(const Poset& p) {
    const auto& interior = p.interior();
    const int k = static_cast<int>(interior.size());
    if (k > 12) throw std::invalid_argument("interior too large for extension count (max 12)");
    if (k == 0) return 1;
    // down-set DP over interior subsets
    std::vector<std::uint32_t> below(k, 0);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            if (i != j && p.leq(interior[j], interior[i])) below[i] |= (1u << j);
    std::vector<long long> f(static_cast<std::size_t>(1) << k, 0);
    f[0] = 1;
    for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
        long long total = 0;
        for (int i = 0; i < k; ++i) {
            // i may come last in mask iff everything below i is inside mask
            if ((mask & (1u << i)) && (below[i] & ~mask) == 0 &&
                [&] { // and nothing in mask lies above i
                    for (int j = 0; j < k; ++j)
                        if ((mask & (1u << j)) && i != j && p.leq(interior[i], interior[j]))
                            return false;
                    return true;
                }())
                total += f[mask & ~(1u << i)];
        }
        f[mask] = total;
    }
    return f[(1u << k) - 1];
}

std::pair<std::vector<double>, std::vector<double>>
interior_bounds(const Poset& p, const BoundaryValues& b) {
    const int n = p.size();
    std::vector<double> lo(n, -1e300), hi(n, 1e300);
    for (auto [v, s] : b.lower) {
        if (!p.is_bottom(v)) throw std::invalid_argument("lower value on non-bottom element");
        lo[v] = hi[v] = s;
    }
    for (auto [v, t] : b.upper) {
        if (!p.is_top(v)) throw std::invalid_argument("upper value on non-top element");
        lo[v] = hi[v] = t;
    }
    for (int v : p.interior()) {
        for (auto [u, s] : b.lower)
            if (p.leq(u, v)) lo[v] = std::max(lo[v], s);
        for (auto [u, t] : b.upper)
            if (p.leq(v, u)) hi[v] = std::min(hi[v], t);
        if (lo[v] < -1e299 || hi[v] > 1e299)
            throw std::invalid_argument("interior element not bracketed by boundary values");
    }
    return {lo, hi};
}

VolumeResult polytope_volume(const Poset& p, const BoundaryValues& b, const VolumeOptions& opt) {
    VolumeResult res;
    const auto& interior = p.interior();
    const int k = static_cast<int>(interior.size());
    if (k == 0) { res.value = 1.0; return res; }
    auto [lo, hi] = interior_bounds(p, b);
    for (int v : interior)
        if (hi[v] <= lo[v]) { res.value = 0.0; return res; }

    // two-constant boundaries: T^n * e(P) / n!
    bool two_constant = true;
    double s0 = b.lower.empty() ? 0.0 : b.lower.begin()->second;
    double t0 = b.upper.empty() ? 0.0 : b.upper.begin()->second;
    for (auto [v, s] : b.lower) two_constant &= (s == s0);
    for (auto [v, t] : b.upper) two_constant &= (t == t0);
    if (two_constant && k <= 12) {
        double T = t0 - s0;
        if (T <= 0) { res.value = 0.0; return res; }
        double vol = static_cast<double>(linear_extensions_count(p));
        for (int i = 1; i <= k; ++i) vol *= T / i;
        res.value = vol;
        return res;
    }

    // antichain interior: independent intervals
    bool antichain = true;
    for (int i = 0; i < k && antichain; ++i)
        for (int j = i + 1; j < k && antichain; ++j)
            if (p.comparable(interior[i], interior[j])) antichain = false;
    if (antichain) {
        double vol = 1.0;
        for (int v : interior) vol *= hi[v] - lo[v];
        res.value = vol;
        return res;
    }

    // Monte Carlo over the bounding box
    res.exact = false;
    RngStream rng(opt.seed, 0xB0D5ULL, 0);
    long long hits = 0;
    std::vector<double> x(p.size(), 0.0);
    double boxvol = 1.0;
    for (int v : interior) boxvol *= hi[v] - lo[v];
    for (long long s = 0; s < opt.mc_samples; ++s) {
        for (int v : interior) x[v] = rng.uniform(lo[v], hi[v]);
        bool ok = true;
        for (int i = 0; i < k && ok; ++i)
            for (int j = 0; j < k && ok; ++j)
                if (i != j && p.leq(interior[i], interior[j]) && x[interior[i]] > x[interior[j]])
                    ok = false;
        hits += ok;
    }
    double phat = static_cast<double>(hits) / static_cast<double>(opt.mc_samples);
    res.value = boxvol * phat;
    res.std_error = boxvol * std::sqrt(std::max(0.0, phat * (1.0 - phat) /
                                                static_cast<double>(opt.mc_samples)));
    res.samples_used = opt.mc_samples;
    return res;
}

VolumeResult polytope_volume(const Poset& /*p*/, const QuotientResult& q, const BoundaryValues& b,
                             const VolumeOptions& opt) {
    if (!q.ordered) return {};
    BoundaryValues qb;
    for (auto [v, s] : b.lower) qb.lower[q.class_of[v]] = s;
    for (auto [v, t] : b.upper) qb.upper[q.class_of[v]] = t;
    return polytope_volume(q.quotient, qb, opt);
}

std::map<int, double> sample_monotone(const Poset& p, const BoundaryValues& b, RngStream& rng) {
    auto [lo, hi] = interior_bounds(p, b);
    for (int v : p.interior())
        if (hi[v] <= lo[v]) throw std::runtime_error("sample_monotone: empty domain");
    std::map<int, double> out;
    for (auto [v, s] : b.lower) out[v] = s;
    for (auto [v, t] : b.upper) out[v] = t;

    // per-chain order statistics when each chain has uniform bounds
    if (p.is_linear()) {
        bool uniform = true;
        for (const auto& chain : p.chains()) {
            for (std::size_t i = 1; i + 1 < chain.size() && uniform; ++i)
                if (lo[chain[i]] != lo[chain[1]] || hi[chain[i]] != hi[chain[1]]) uniform = false;
        }
        if (uniform) {
            for (const auto& chain : p.chains()) {
                const int k = static_cast<int>(chain.size()) - 2;
                if (k <= 0) continue;
                std::vector<double> u(k);
                for (double& x : u) x = rng.uniform(lo[chain[1]], hi[chain[1]]);
                std::sort(u.begin(), u.end());
                for (int i = 0; i < k; ++i) out[chain[i + 1]] = u[i];
            }
            return out;
        }
    }

    // general case: rejection from the bounding box
    const auto& interior = p.interior();
    for (long long attempt = 0; attempt < 1000000; ++attempt) {
        for (int v : interior) out[v] = rng.uniform(lo[v], hi[v]);
        bool ok = true;
        for (std::size_t i = 0; i < interior.size() && ok; ++i)
            for (std::size_t j = 0; j < interior.size() && ok; ++j)
                if (i != j && p.leq(interior[i], interior[j]) &&
                    out.at(interior[i]) > out.at(interior[j]))
                    ok = false;
        if (ok) return out;
    }
    throw std::runtime_error("sample_monotone: rejection sampling failed");
}

} // namespace roughlab
