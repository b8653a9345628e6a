#include "roughlab/diagram.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace roughlab {
namespace {

std::pair<int, int> unordered(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

bool touches(const std::pair<int, int>& e, int v) { return e.first == v || e.second == v; }

int other_end(const std::pair<int, int>& e, int v) { return e.first == v ? e.second : e.first; }

} // namespace

Diagram Diagram::bare(std::shared_ptr<const Poset> p) {
    Diagram d;
    d.active.assign(p->size(), 1);
    d.poset = std::move(p);
    return d;
}

void Diagram::normalise() {
    for (auto& e : gk) e = unordered(e.first, e.second);
    for (auto& e : gchi) e = unordered(e.first, e.second);
    std::sort(gk.begin(), gk.end());
    std::sort(gchi.begin(), gchi.end());
    std::sort(ek.begin(), ek.end());
    std::sort(echi.begin(), echi.end());
}

std::string Diagram::key() const {
    // Canonical under removal of interior vertices: active vertices are
    // relabelled in id order and the induced order relation (not the original
    // ids) enters the key, so diagrams that only differ by which vertex of an
    // equivalent sub-poset was removed compare equal and can cancel.
    Diagram c = *this;
    c.normalise();
    const Poset& p = *poset;
    std::vector<int> comp(static_cast<std::size_t>(p.size()), -1);
    std::vector<int> act;
    for (int v = 0; v < p.size(); ++v)
        if (c.active[static_cast<std::size_t>(v)]) {
            comp[static_cast<std::size_t>(v)] = static_cast<int>(act.size());
            act.push_back(v);
        }
    std::ostringstream os;
    for (int v : act) os << (p.is_bottom(v) ? 'b' : p.is_top(v) ? 't' : 'i');
    os << '|';
    for (int a : act)
        for (int b : act) os << (p.leq(a, b) ? '1' : '0');
    auto label = [&comp](int v) {
        int cv = comp[static_cast<std::size_t>(v)];
        return cv >= 0 ? std::to_string(cv) : "n" + std::to_string(v);
    };
    auto dump = [&os, &label](const char* tag, const std::vector<std::pair<int, int>>& es) {
        os << '|' << tag;
        for (auto [a, b] : es) os << label(a) << ',' << label(b) << ';';
    };
    dump("gk:", c.gk);
    dump("gc:", c.gchi);
    dump("ek:", c.ek);
    dump("ec:", c.echi);
    return os.str();
}

bool Diagram::has_self_edge() const {
    for (auto [a, b] : ek)
        if (a == b) return true;
    for (auto [a, b] : echi)
        if (a == b) return true;
    return false;
}

int Diagram::active_interior_count() const {
    int n = 0;
    for (int v : poset->interior()) n += active[v] ? 1 : 0;
    return n;
}

Diagram::ActiveView Diagram::active_view() const {
    ActiveView view;
    view.from_ambient.assign(poset->size(), -1);
    for (int v = 0; v < poset->size(); ++v)
        if (active[v]) {
            view.from_ambient[v] = static_cast<int>(view.to_ambient.size());
            view.to_ambient.push_back(v);
        }
    std::vector<std::pair<int, int>> rel;
    std::vector<int> bottom, top;
    for (std::size_t i = 0; i < view.to_ambient.size(); ++i)
        for (std::size_t j = 0; j < view.to_ambient.size(); ++j)
            if (i != j && poset->leq(view.to_ambient[i], view.to_ambient[j]))
                rel.push_back({static_cast<int>(i), static_cast<int>(j)});
    for (int v : poset->bottoms()) bottom.push_back(view.from_ambient[v]);
    for (int v : poset->tops()) top.push_back(view.from_ambient[v]);
    view.poset = Poset::from_relations(static_cast<int>(view.to_ambient.size()), rel, bottom, top);
    return view;
}

ValidationResult validate_diagram(const Diagram& d) {
    const Poset& p = *d.poset;
    ValidationResult res;
    res.type.assign(p.size(), 0);
    auto fail = [&](const std::string& msg) {
        res.ok = false;
        res.error = msg;
        return res;
    };

    for (int v = 0; v < p.size(); ++v)
        if (!p.is_interior(v) && !d.active[v]) return fail("boundary vertex inactive");

    auto on_active = [&](const std::pair<int, int>& e) {
        return d.active[e.first] && d.active[e.second];
    };
    for (const auto& e : d.gk)
        if (!on_active(e) || !p.is_interior(e.first) || !p.is_interior(e.second) ||
            e.first == e.second)
            return fail("invalid gk edge");
    for (const auto& e : d.gchi) {
        // cutoff edges may touch the boundary (reduction can rewire them there)
        if (!on_active(e) || e.first == e.second) return fail("invalid gchi edge");
        if (!p.comparable(e.first, e.second)) return fail("gchi edge joins incomparable elements");
    }
    for (const auto& e : d.ek)
        if (!on_active(e)) return fail("ek edge touches inactive vertex");
    for (const auto& e : d.echi) {
        if (!on_active(e)) return fail("echi edge touches inactive vertex");
        if (!p.comparable(e.first, e.second) && e.first != e.second)
            return fail("echi edge joins incomparable elements");
    }
    // distinct gchi edges must be incomparable as pairs
    for (std::size_t i = 0; i < d.gchi.size(); ++i)
        for (std::size_t j = i + 1; j < d.gchi.size(); ++j) {
            // poset-upper endpoints of the two edges
            int u1 = p.leq(d.gchi[i].first, d.gchi[i].second) ? d.gchi[i].second : d.gchi[i].first;
            int u2 = p.leq(d.gchi[j].first, d.gchi[j].second) ? d.gchi[j].second : d.gchi[j].first;
            if (p.comparable(u1, u2)) return fail("comparable gchi edges");
        }

    int type3_count = 0;
    for (int v = 0; v < p.size(); ++v) {
        if (!d.active[v]) continue;
        int kg = 0, kchi = 0, e_out = 0, e_in = 0, ek_in = 0, echi_out = 0;
        for (const auto& e : d.gk) kg += touches(e, v);
        for (const auto& e : d.gchi) kchi += touches(e, v);
        for (const auto& e : d.ek) {
            e_out += e.first == v;
            e_in += e.second == v;
            ek_in += e.second == v;
        }
        for (const auto& e : d.echi) {
            e_out += e.first == v;
            echi_out += e.first == v;
            e_in += e.second == v;
        }
        if (!p.is_interior(v)) {
            if (kg + e_out > 0)
                return fail("TYPE_VIOLATION(" + std::to_string(v) + "): boundary with outgoing/undirected edges");
            continue;
        }
        if (kg == 1 && e_out == 0 && e_in == 0 && kchi <= 1) {
            res.type[v] = 1;
        } else if (kg == 0 && e_out == 1) {
            // a chi-outgoing vertex needs at least one incoming Kbar edge
            if (echi_out == 1 && ek_in == 0)
                return fail("TYPE_VIOLATION(" + std::to_string(v) + "): chi out-edge without Kbar in-edge");
            res.type[v] = 2;
        } else if (kg == 1 && e_in == 1 && e_out == 0) {
            res.type[v] = 3;
            ++type3_count;
        } else {
            return fail("TYPE_VIOLATION(" + std::to_string(v) + ")");
        }
    }
    if (type3_count > 1) return fail("MULTIPLE_TYPE3");
    return res;
}

std::vector<EdgeComponent> classify_components(const Diagram& d) {
    const Poset& p = *d.poset;
    const int n = p.size();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<std::pair<int, int>> all_e = d.ek;
    all_e.insert(all_e.end(), d.echi.begin(), d.echi.end());
    std::vector<char> in_graph(n, 0);
    for (auto [a, b] : all_e) {
        in_graph[a] = in_graph[b] = 1;
        parent[find(a)] = find(b);
    }
    // unique outgoing edge per vertex (validity), used to walk to the limit set
    std::vector<int> out(n, -1);
    for (auto [a, b] : all_e) out[a] = b;

    std::map<int, EdgeComponent> comps;
    for (int v = 0; v < n; ++v)
        if (in_graph[v]) comps[find(v)].vertices.push_back(v);

    auto types = validate_diagram(d);
    std::vector<EdgeComponent> result;
    for (auto& [root, comp] : comps) {
        std::sort(comp.vertices.begin(), comp.vertices.end());
        // walk from any vertex until a repeat or a sink
        int v = comp.vertices.front();
        std::map<int, int> seen;
        int steps = 0;
        while (v != -1 && !seen.count(v)) {
            seen[v] = steps++;
            v = out[v];
        }
        if (v == -1) {
            // sink: boundary root -> TREE; interior sink is the type-3 vertex
            int sink = -1;
            for (int u : comp.vertices)
                if (out[u] == -1) sink = u;
            comp.kind = (types.ok && p.is_interior(sink) && types.type[sink] == 3)
                            ? ComponentKind::LINE_TREE
                            : ComponentKind::TREE;
        } else {
            comp.kind = ComponentKind::CYCLE_WITH_TREES;
            int start = v;
            comp.cycle.push_back(v);
            for (int u = out[v]; u != start; u = out[u]) comp.cycle.push_back(u);
            for (std::size_t i = 0; i < comp.cycle.size(); ++i) {
                int a = comp.cycle[i];
                int b = comp.cycle[(i + 1) % comp.cycle.size()];
                for (auto [x, y] : d.ek)
                    if (x == a && y == b) { ++comp.cycle_ek_edges; break; }
            }
        }
        result.push_back(std::move(comp));
    }
    return result;
}

void DiagramSum::add(Diagram d, long long coeff) {
    if (coeff == 0 || d.has_self_edge()) return;
    d.normalise();
    std::string k = d.key();
    auto it = terms_.find(k);
    if (it == terms_.end()) {
        terms_.emplace(std::move(k), std::make_pair(std::move(d), coeff));
    } else {
        it->second.second += coeff;
        if (it->second.second == 0) terms_.erase(it);
    }
}

void DiagramSum::add(const DiagramSum& other) {
    for (const auto& [k, term] : other.terms_) add(term.first, term.second);
}

bool DiagramSum::operator==(const DiagramSum& other) const {
    if (terms_.size() != other.terms_.size()) return false;
    for (const auto& [k, term] : terms_) {
        auto it = other.terms_.find(k);
        if (it == other.terms_.end() || it->second.second != term.second) return false;
    }
    return true;
}

namespace {

// pivot selection shared by apply_I and apply_J
struct Pivot {
    int v_star;   // the kept vertex
    int v_merge;  // the removed partner (v_*)
    std::pair<int, int> gk_edge;
};

Pivot select_pivot(const Diagram& d, const ValidationResult& types,
                   const std::vector<int>& rank) {
    const Poset& p = *d.poset;
    int v_star = -1;
    for (int v = 0; v < p.size(); ++v)
        if (d.active[v] && types.type[v] == 3) v_star = v;
    if (v_star == -1) {
        for (int v = 0; v < p.size(); ++v) {
            if (!d.active[v] || types.type[v] != 1) continue;
            if (v_star == -1 || rank[v] < rank[v_star]) v_star = v;
        }
    }
    if (v_star == -1) throw std::logic_error("no pivot vertex despite non-empty gk");
    for (const auto& e : d.gk)
        if (touches(e, v_star)) return {v_star, other_end(e, v_star), e};
    throw std::logic_error("pivot vertex carries no gk edge");
}

std::vector<int> pivot_rank(const Poset& p, const std::vector<int>& priority) {
    return p.total_order(priority);
}

std::vector<std::pair<int, int>> without(const std::vector<std::pair<int, int>>& edges,
                                         const std::pair<int, int>& e) {
    std::vector<std::pair<int, int>> out;
    bool removed = false;
    for (const auto& f : edges) {
        if (!removed && f == e) { removed = true; continue; }
        out.push_back(f);
    }
    return out;
}

} // namespace

DiagramSum apply_I(const DiagramSum& s, const std::vector<int>& priority) {
    DiagramSum out;
    for (const auto& [k, term] : s.terms()) {
        const Diagram& d = term.first;
        long long coeff = term.second;
        if (!d.gchi.empty() || !d.echi.empty())
            throw std::invalid_argument("apply_I requires chi-free diagrams");
        if (d.gk.empty()) { out.add(d, coeff); continue; }
        auto types = validate_diagram(d);
        if (!types.ok) throw std::invalid_argument("apply_I on invalid diagram: " + types.error);
        std::vector<int> rank = pivot_rank(*d.poset, priority);
        Pivot pv = select_pivot(d, types, rank);
        std::pair<int, int> e = unordered(pv.gk_edge.first, pv.gk_edge.second);

        Diagram base = d;
        base.active[pv.v_merge] = 0;
        base.gk = without(base.gk, e);

        int up = d.poset->up_in(d.active, pv.v_merge);
        int down = d.poset->down_in(d.active, pv.v_merge);

        Diagram g_up = base;
        g_up.ek.push_back({pv.v_star, up});
        out.add(std::move(g_up), coeff);
        Diagram g_down = base;
        g_down.ek.push_back({pv.v_star, down});
        out.add(std::move(g_down), -coeff);
    }
    return out;
}

DiagramSum reduce_I_infinity(const DiagramSum& s, const std::vector<int>& priority) {
    DiagramSum cur = s;
    int bound = 1;
    for (const auto& [k, term] : s.terms())
        bound = std::max(bound, term.first.active_interior_count() + 1);
    for (int i = 0; i <= bound; ++i) {
        DiagramSum next = apply_I(cur, priority);
        if (next == cur) return cur;
        cur = std::move(next);
    }
    throw std::logic_error("reduce_I_infinity failed to stabilise");
}

DiagramSum apply_J(const DiagramSum& s, const std::vector<int>& priority) {
    DiagramSum out;
    for (const auto& [k, term] : s.terms()) {
        const Diagram& d = term.first;
        long long coeff = term.second;
        if (d.gk.empty()) { out.add(d, coeff); continue; }
        auto types = validate_diagram(d);
        if (!types.ok) throw std::invalid_argument("apply_J on invalid diagram: " + types.error);
        std::vector<int> rank = pivot_rank(*d.poset, priority);
        Pivot pv = select_pivot(d, types, rank);
        std::pair<int, int> gk_e = unordered(pv.gk_edge.first, pv.gk_edge.second);

        int up = d.poset->up_in(d.active, pv.v_merge);
        int down = d.poset->down_in(d.active, pv.v_merge);

        // gchi edge on the removed vertex?
        const std::pair<int, int>* chi_edge = nullptr;
        for (const auto& e : d.gchi)
            if (touches(e, pv.v_merge)) { chi_edge = &e; break; }

        if (!chi_edge) {
            Diagram base = d;
            base.active[pv.v_merge] = 0;
            base.gk = without(base.gk, gk_e);
            Diagram g_up = base;
            g_up.ek.push_back({pv.v_star, up});
            out.add(std::move(g_up), coeff);
            Diagram g_down = base;
            g_down.ek.push_back({pv.v_star, down});
            out.add(std::move(g_down), -coeff);
            continue;
        }

        int v_bar = other_end(*chi_edge, pv.v_merge);
        std::pair<int, int> chi_e = unordered(chi_edge->first, chi_edge->second);

        Diagram base = d; // G'' level: both the gk pivot edge and the chi edge removed
        base.gk = without(base.gk, gk_e);
        base.gchi = without(base.gchi, chi_e);

        Diagram g_up = base;
        g_up.active[pv.v_merge] = 0;
        if (up != v_bar) g_up.gchi.push_back(unordered(up, v_bar));
        g_up.ek.push_back({pv.v_star, up});
        out.add(std::move(g_up), coeff);

        Diagram g_down = base;
        g_down.active[pv.v_merge] = 0;
        if (down != v_bar) g_down.gchi.push_back(unordered(down, v_bar));
        g_down.ek.push_back({pv.v_star, down});
        out.add(std::move(g_down), -coeff);

        Diagram third = base; // keeps the full active set
        third.ek.push_back({pv.v_star, pv.v_merge});
        third.echi.push_back({pv.v_merge, v_bar});
        out.add(std::move(third), coeff);
    }
    return out;
}

DiagramSum reduce_J_infinity(const DiagramSum& s, const std::vector<int>& priority) {
    DiagramSum cur = s;
    int bound = 1;
    for (const auto& [k, term] : s.terms())
        bound = std::max(bound, term.first.active_interior_count() + 1);
    for (int i = 0; i <= bound; ++i) {
        DiagramSum next = apply_J(cur, priority);
        if (next == cur) return cur;
        cur = std::move(next);
    }
    throw std::logic_error("reduce_J_infinity failed to stabilise");
}

LimitOrderClass classify_limit_order(const Diagram& d) {
    if (!d.gk.empty()) throw std::invalid_argument("classify_limit_order requires empty gk");
    auto comps = classify_components(d);
    const Poset& p = *d.poset;
    // full: every component is exactly a cycle with exactly two Kbar edges
    for (const auto& c : comps) {
        if (c.kind != ComponentKind::CYCLE_WITH_TREES) return LimitOrderClass::NOT_FULL;
        if (c.cycle.size() != c.vertices.size()) return LimitOrderClass::NOT_FULL;
        if (c.cycle_ek_edges != 2) return LimitOrderClass::NOT_FULL;
        for (int v : c.vertices)
            if (!p.is_interior(v)) return LimitOrderClass::NOT_FULL;
    }
    if (comps.empty()) return LimitOrderClass::FULL_ORDERED;
    // component id per vertex
    std::vector<int> comp_of(p.size(), -1);
    for (std::size_t i = 0; i < comps.size(); ++i)
        for (int v : comps[i].vertices) comp_of[v] = static_cast<int>(i);
    for (const auto& e : d.gchi)
        if (comp_of[e.first] != -1 && comp_of[e.second] != -1 &&
            comp_of[e.first] != comp_of[e.second])
            return LimitOrderClass::CHI_LINKED;
    // orderedness of the quotient by components
    std::vector<std::pair<int, int>> merges;
    for (const auto& c : comps)
        for (std::size_t i = 1; i < c.vertices.size(); ++i)
            merges.push_back({c.vertices[0], c.vertices[i]});
    auto q = quotient_by_pairs(p, merges);
    return q.ordered ? LimitOrderClass::FULL_ORDERED : LimitOrderClass::FULL_UNORDERED;
}

PairingClassification detect_parallel(const Poset& p,
                                      const std::vector<std::pair<int, int>>& pairing) {
    // validate perfect pairing of the interior
    std::vector<int> deg(p.size(), 0);
    for (auto [a, b] : pairing) {
        if (!p.is_interior(a) || !p.is_interior(b) || a == b)
            throw std::invalid_argument("pairing must consist of distinct interior pairs");
        ++deg[a];
        ++deg[b];
    }
    for (int v : p.interior())
        if (deg[v] != 1) throw std::invalid_argument("not a perfect pairing of the interior");
    if (!p.is_linear()) throw std::invalid_argument("detect_parallel requires a linear poset");

    PairingClassification res;
    auto edge_of = [&](int v) -> int {
        for (std::size_t i = 0; i < pairing.size(); ++i)
            if (touches(pairing[i], v)) return static_cast<int>(i);
        return -1;
    };

    std::vector<char> used(pairing.size(), 0);
    std::vector<int> rank = p.total_order();
    for (std::size_t step = 0; step < pairing.size() / 2 + 1; ++step) {
        int v = -1;
        for (int u : p.interior())
            if (!used[edge_of(u)] && (v == -1 || rank[u] < rank[v])) v = u;
        if (v == -1) break; // all edges paired
        int ei = edge_of(v);
        int v_up = p.up(v);
        if (v_up < 0 || !p.is_interior(v_up)) return res; // not parallel
        int fi = edge_of(v_up);
        if (fi == ei || used[fi]) return res;
        // try all labellings (e1,e2) x (f1,f2); a labelling is admissible when
        // f1 neighbours e1 and f2 neighbours e2 along their chains
        const int ea = pairing[ei].first, eb = pairing[ei].second;
        const int fa = pairing[fi].first, fb = pairing[fi].second;
        bool any_valid = false, any_crossed = false;
        std::array<int, 4> chosen{};
        for (auto [e1, e2] : {std::pair{ea, eb}, std::pair{eb, ea}})
            for (auto [f1, f2] : {std::pair{fa, fb}, std::pair{fb, fa}}) {
                bool v1u = (f1 == p.up(e1)), v1d = (f1 == p.down(e1));
                bool v2u = (f2 == p.up(e2)), v2d = (f2 == p.down(e2));
                if ((v1u || v1d) && (v2u || v2d)) {
                    if (!any_valid) chosen = {e1, e2, f1, f2};
                    any_valid = true;
                    if (v1u && v2d) any_crossed = true;
                }
            }
        if (!any_valid) return res;
        used[ei] = used[fi] = 1;
        res.partner_pairs.push_back(chosen);
        if (any_crossed) ++res.crossed_count;
    }
    if (pairing.size() % 2 != 0) return res;
    res.parallel = true;

    std::vector<std::pair<int, int>> merges;
    for (const auto& pr : res.partner_pairs) {
        merges.push_back({pr[0], pr[2]});
        merges.push_back({pr[1], pr[3]});
    }
    res.quotient = quotient_by_pairs(p, merges);
    if (!res.quotient.ordered) return res;
    std::vector<std::pair<int, int>> cycle_merges;
    for (const auto& pr : res.partner_pairs) {
        int c1 = res.quotient.class_of[pr[0]];
        int c2 = res.quotient.class_of[pr[1]];
        if (res.quotient.quotient.comparable(c1, c2)) ++res.e_le_count;
        cycle_merges.push_back({c1, c2});
    }
    res.cycle_quotient = quotient_by_pairs(res.quotient.quotient, cycle_merges);
    return res;
}

double limit_value(const Poset& p, const std::vector<std::pair<int, int>>& pairing,
                   const BoundaryValues& b, double c) {
    if (static_cast<int>(p.interior().size()) % 2 != 0)
        throw std::invalid_argument("limit_value requires an even interior");
    PairingClassification cls = detect_parallel(p, pairing);
    if (!cls.parallel || !cls.quotient.ordered || !cls.cycle_quotient.ordered) return 0.0;

    BoundaryValues qb;
    for (auto [v, s] : b.lower) qb.lower[cls.cycle_quotient.class_of[cls.quotient.class_of[v]]] = s;
    for (auto [v, t] : b.upper) qb.upper[cls.cycle_quotient.class_of[cls.quotient.class_of[v]]] = t;
    VolumeResult vol = polytope_volume(cls.cycle_quotient.quotient, qb);

    double n_half = static_cast<double>(pairing.size()) / 2.0;
    double sign = (cls.crossed_count % 2 == 0) ? 1.0 : -1.0;
    return sign * std::pow(2.0, -static_cast<double>(cls.e_le_count)) *
           std::pow(c, n_half) * vol.value;
}

} // namespace roughlab
