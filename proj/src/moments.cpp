#include "roughlab/moments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace roughlab {

int MomentSpec::total_interior() const {
    int n = 0;
    for (const auto& f : factors) n += f.level;
    return n;
}

MomentLayout build_layout(const MomentSpec& spec) {
    if (spec.total_interior() > 16)
        throw std::invalid_argument("moment spec exceeds the 16-vertex ceiling");
    std::vector<Poset> chains;
    for (const auto& f : spec.factors) {
        if (static_cast<int>(f.index.size()) != f.level)
            throw std::invalid_argument("multiindex length must equal the level");
        for (int c : f.index)
            if (c < 1 || c > spec.component_count)
                throw std::invalid_argument("component label out of range");
        if (!(f.s < f.t)) throw std::invalid_argument("factor interval must be nondegenerate");
        chains.push_back(Poset::chain(f.level));
    }
    MomentLayout lay;
    lay.poset = std::make_shared<const Poset>(Poset::disjoint_sum(chains));
    lay.component.assign(lay.poset->size(), 0);
    lay.factor_of.assign(lay.poset->size(), -1);
    int offset = 0;
    for (std::size_t i = 0; i < spec.factors.size(); ++i) {
        const auto& f = spec.factors[i];
        lay.bounds.lower[offset] = f.s;
        lay.bounds.upper[offset + f.level + 1] = f.t;
        std::vector<int> ids;
        for (int j = 0; j < f.level; ++j) {
            int v = offset + 1 + j;
            lay.component[v] = f.index[j];
            lay.factor_of[v] = static_cast<int>(i);
            ids.push_back(v);
        }
        lay.interior.push_back(std::move(ids));
        offset += f.level + 2;
    }
    return lay;
}

namespace {

void enumerate_rec(const std::vector<int>& verts, const std::vector<int>& comp,
                   std::vector<char>& used, Pairing& current,
                   std::vector<Pairing>& out) {
    std::size_t first = 0;
    while (first < verts.size() && used[first]) ++first;
    if (first == verts.size()) {
        out.push_back(current);
        return;
    }
    used[first] = 1;
    for (std::size_t j = first + 1; j < verts.size(); ++j) {
        if (used[j] || comp[verts[j]] != comp[verts[first]]) continue;
        used[j] = 1;
        current.emplace_back(verts[first], verts[j]);
        enumerate_rec(verts, comp, used, current, out);
        current.pop_back();
        used[j] = 0;
    }
    used[first] = 0;
}

} // namespace

std::vector<Pairing> enumerate_pairings(const MomentSpec& spec) {
    if (spec.total_interior() % 2 != 0) return {};
    MomentLayout lay = build_layout(spec);
    std::vector<int> verts;
    for (const auto& ids : lay.interior) verts.insert(verts.end(), ids.begin(), ids.end());
    std::map<int, int> count;
    for (int v : verts) ++count[lay.component[v]];
    for (auto [c, n] : count)
        if (n % 2 != 0) return {};
    std::vector<char> used(verts.size(), 0);
    Pairing current;
    std::vector<Pairing> out;
    enumerate_rec(verts, lay.component, used, current, out);
    return out;
}

LimitPrediction limit_moment(const MomentSpec& spec, double c) {
    LimitPrediction pred;
    pred.c_used = c;
    pred.sigma = std::sqrt(c);
    MomentLayout lay = build_layout(spec);
    for (const auto& pairing : enumerate_pairings(spec)) {
        double v = limit_value(*lay.poset, pairing, lay.bounds, c);
        pred.pairing_terms.emplace_back(pairing, v);
        pred.value += v;
    }
    return pred;
}

double limit_cumulant(const MomentSpec& spec, double c) {
    MomentLayout lay = build_layout(spec);
    const int n = static_cast<int>(spec.factors.size());
    double sum = 0.0;
    for (const auto& pairing : enumerate_pairings(spec)) {
        // union-find over factor groups linked by pairs
        std::vector<int> parent(n);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        for (auto [a, b] : pairing) parent[find(lay.factor_of[a])] = find(lay.factor_of[b]);
        bool connected = true;
        for (int i = 1; i < n && connected; ++i) connected = find(i) == find(0);
        if (connected) sum += limit_value(*lay.poset, pairing, lay.bounds, c);
    }
    return sum;
}

namespace {

MomentFactor level4(std::vector<int> idx) { return MomentFactor{4, std::move(idx), 0.0, 1.0}; }

double square_moment(int m, const MomentFactor& f, double c) {
    MomentSpec s{m, {f, f}};
    return limit_moment(s, c).value;
}

double cross_moment(int m, const MomentFactor& a, const MomentFactor& b, double c) {
    MomentSpec s{m, {a, b}};
    return limit_moment(s, c).value;
}

} // namespace

std::vector<IdentityRow> predict_special_identities(double c) {
    std::vector<IdentityRow> rows;

    rows.push_back({"E(X4_1123)^2", square_moment(3, level4({1, 1, 2, 3}), c), 0.0});
    rows.push_back({"E(X4_2311)^2", square_moment(3, level4({2, 3, 1, 1}), c), 0.0});

    MomentFactor a = level4({1, 2, 3, 4}), b = level4({2, 1, 3, 4});
    double antisym = square_moment(4, a, c) + square_moment(4, b, c) +
                     2.0 * cross_moment(4, a, b, c);
    rows.push_back({"E(X4_1234 + X4_2134)^2", antisym, 0.0});

    MomentSpec single1212{2, {level4({1, 2, 1, 2})}};
    MomentSpec single1122{2, {level4({1, 1, 2, 2})}};
    MomentSpec cov12{2, {MomentFactor{2, {1, 2}, 0.0, 1.0}, MomentFactor{2, {1, 2}, 0.0, 1.0}}};
    double shuffle = 2.0 * limit_moment(single1212, c).value +
                     4.0 * limit_moment(single1122, c).value -
                     limit_moment(cov12, c).value;
    rows.push_back({"2*E X4_1212 + 4*E X4_1122 - E(X2_12)^2", shuffle, 0.0});

    MomentSpec diag{1, {MomentFactor{2, {1, 1}, 0.0, 1.0}, MomentFactor{2, {1, 1}, 0.0, 1.0}}};
    rows.push_back({"E(X2_11)^2", limit_moment(diag, c).value, 0.0});

    return rows;
}

} // namespace roughlab
