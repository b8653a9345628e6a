#pragma once

#include <array>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "roughlab/kernels.hpp"
#include "roughlab/poset.hpp"
#include "roughlab/rng.hpp"

namespace roughlab {

// A decorated sub-poset: active vertex set plus four edge families.
//  gk    : undirected kernel edges (K factors) between interior vertices
//  gchi  : undirected cutoff edges ((1-chi_delta) factors), comparable pairs
//  ek    : directed Kbar edges, factor Kbar(r_head - r_tail)
//  echi  : directed chi_delta' edges with an orientation sign
struct Diagram {
    std::shared_ptr<const Poset> poset;
    std::vector<char> active; // boundary vertices always active
    std::vector<std::pair<int, int>> gk, gchi; // unordered, stored (min,max)
    std::vector<std::pair<int, int>> ek, echi; // directed (tail, head)

    static Diagram bare(std::shared_ptr<const Poset> p);

    void normalise();            // canonical edge order
    std::string key() const;     // canonical form for term collection
    bool has_self_edge() const;  // directed self-edges make the term zero
    int active_interior_count() const;

    // sub-poset induced by the active set, with id translation
    struct ActiveView {
        Poset poset;
        std::vector<int> to_ambient;
        std::vector<int> from_ambient; // -1 when inactive
    };
    ActiveView active_view() const;
};

struct ValidationResult {
    bool ok = true;
    std::string error;
    std::vector<int> type; // per vertex: 0 boundary/inactive, 1..3 interior types
};

ValidationResult validate_diagram(const Diagram& d);

enum class ComponentKind { TREE, CYCLE_WITH_TREES, LINE_TREE };

struct EdgeComponent {
    std::vector<int> vertices; // sorted ambient ids
    ComponentKind kind = ComponentKind::TREE;
    std::vector<int> cycle;        // cycle vertices in order (CYCLE_WITH_TREES)
    int cycle_ek_edges = 0;        // Kbar edges on the cycle
};

// connected components of the directed graph (active vertices, ek + echi)
std::vector<EdgeComponent> classify_components(const Diagram& d);

// Integer combination of diagrams keyed on canonical form; terms containing
// self-edges are dropped on insertion.
class DiagramSum {
public:
    DiagramSum() = default;
    explicit DiagramSum(const Diagram& d) { add(d, 1); }

    void add(Diagram d, long long coeff);
    void add(const DiagramSum& other);

    std::size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }
    const std::map<std::string, std::pair<Diagram, long long>>& terms() const { return terms_; }
    bool operator==(const DiagramSum& other) const;

private:
    std::map<std::string, std::pair<Diagram, long long>> terms_;
};

// One integration-by-parts step (kernel edges only).  `priority` optionally
// reorders the fixed total order used to select the pivot vertex.
DiagramSum apply_I(const DiagramSum& s, const std::vector<int>& priority = {});
// Fixed point of apply_I; every surviving diagram has empty gk.
DiagramSum reduce_I_infinity(const DiagramSum& s, const std::vector<int>& priority = {});

// The cutoff-aware variant (three-term rule when the removed vertex carries a
// gchi edge) and its fixed point.
DiagramSum apply_J(const DiagramSum& s, const std::vector<int>& priority = {});
DiagramSum reduce_J_infinity(const DiagramSum& s, const std::vector<int>& priority = {});

enum class LimitOrderClass { FULL_ORDERED, FULL_UNORDERED, NOT_FULL, CHI_LINKED };

// For gk-empty diagrams: fullness of the directed-edge structure and whether a
// gchi edge bridges two distinct full components.
LimitOrderClass classify_limit_order(const Diagram& d);

struct PairingClassification {
    bool parallel = false;
    // per partner pair: (e1, e2, f1, f2) with f1 = e1-up and f2 in {e2-up, e2-down}
    std::vector<std::array<int, 4>> partner_pairs;
    int crossed_count = 0;
    QuotientResult quotient;       // P -> P-hat, merging e_i with f_i
    int e_le_count = 0;            // 2-cycles whose classes are comparable in P-hat
    QuotientResult cycle_quotient; // P-hat -> P-hat_E, merging each 2-cycle
};

PairingClassification detect_parallel(const Poset& p,
                                      const std::vector<std::pair<int, int>>& pairing);

// Limit of J_eps for a bare pairing diagram: (-1)^l 2^{-k} c^{N/2} |[s,t]|.
double limit_value(const Poset& p, const std::vector<std::pair<int, int>>& pairing,
                   const BoundaryValues& b, double c);

struct EvalOptions {
    double abs_tol = 1e-11;       // per-level adaptive tolerance (depth <= 2)
    double rel_tol = 1e-9;
    int gl_points = 0;            // 0: choose from depth
    long long mc_samples = 1000000;
    std::uint64_t seed = 2026;
    bool estimate_error = true;   // re-evaluate at lower order for an estimate
};

struct EvalResult {
    double value = 0.0;
    double error = 0.0;
    bool monte_carlo = false;
};

// J_eps(s,t)(d): integral of the K/Kbar factor product over the monotone
// domain of the active sub-poset.  Deterministic (nested adaptive for depth
// <= 2, tensor Gauss-Legendre up to depth 6), Monte Carlo beyond.
EvalResult evaluate_J_numeric(const Diagram& d, const KernelModel& model,
                              const BoundaryValues& b, const EvalOptions& opt = {});

// J_{eps,delta}: as above with the (1-chi_delta) and chi_delta' factors.
EvalResult evaluate_J_eps_delta_numeric(const Diagram& d, const KernelModel& model,
                                        double delta, const BoundaryValues& b,
                                        const EvalOptions& opt = {});

// the fixed smooth cutoff chi: 0 on (-inf,0], 1 on [1,inf), C-infinity
double chi_cutoff(double x);
double chi_cutoff_derivative(double x);

} // namespace roughlab
