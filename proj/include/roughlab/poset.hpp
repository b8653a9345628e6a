#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "roughlab/rng.hpp"

namespace roughlab {

// Finite poset over dense integer ids 0..n-1 with distinguished bottom/top
// boundary sets.  Immutable after construction.
class Poset {
public:
    Poset() = default;

    // Build from an arbitrary relation (closure is taken); throws on cycles or
    // if a declared bottom/top element is not minimal/maximal.
    static Poset from_relations(int n, const std::vector<std::pair<int, int>>& relations,
                                std::vector<int> bottom, std::vector<int> top);

    // Chain 0 < 1 < ... < k+1 with k interior elements.
    static Poset chain(int k);

    static Poset disjoint_sum(const std::vector<Poset>& parts);

    int size() const { return n_; }
    bool leq(int a, int b) const { return leq_[a][b] != 0; }
    bool comparable(int a, int b) const { return leq(a, b) || leq(b, a); }
    bool is_interior(int v) const { return role_[v] == 0; }
    bool is_bottom(int v) const { return role_[v] == -1; }
    bool is_top(int v) const { return role_[v] == 1; }

    const std::vector<int>& bottoms() const { return bottom_; }
    const std::vector<int>& tops() const { return top_; }
    const std::vector<int>& interior() const { return interior_; }
    const std::vector<std::pair<int, int>>& covers() const { return covers_; }

    bool is_linear() const { return linear_; }

    // Unique cover neighbours (linear posets); -1 when absent.
    int up(int v) const { return up_[v]; }
    int down(int v) const { return down_[v]; }

    // Chain decomposition (meaningful for linear posets): chain_of[v] indexes
    // into chains(), each chain listed bottom-to-top including boundary.
    int chain_of(int v) const { return chain_of_[v]; }
    const std::vector<std::vector<int>>& chains() const { return chains_; }
    int position_in_chain(int v) const { return pos_in_chain_[v]; }

    // Next/previous element of v's chain that is flagged active (linear only).
    int up_in(const std::vector<char>& active, int v) const;
    int down_in(const std::vector<char>& active, int v) const;

    // A fixed total order extending the partial order: rank_of[v] gives the
    // position.  Default is topological with smallest-id tie-break; a custom
    // priority vector (lower value = earlier) may reorder ties arbitrarily and
    // even pick any linear extension.
    std::vector<int> total_order(const std::vector<int>& priority = {}) const;

    // Canonical relabelling along the default total order; posets are
    // isomorphic-as-marked iff their canonical forms are equal.
    std::string canonical_key() const;

private:
    int n_ = 0;
    std::vector<std::vector<char>> leq_;
    std::vector<std::pair<int, int>> covers_;
    std::vector<int> bottom_, top_, interior_;
    std::vector<int> role_; // -1 bottom, 0 interior, +1 top
    std::vector<int> up_, down_;
    bool linear_ = false;
    std::vector<int> chain_of_, pos_in_chain_;
    std::vector<std::vector<int>> chains_;

    void finalize();
};

struct BoundaryValues {
    std::map<int, double> lower; // on bottom elements
    std::map<int, double> upper; // on top elements

    static BoundaryValues constant(const Poset& p, double s, double t);
};

struct QuotientResult {
    std::vector<std::vector<int>> classes; // sorted members, indexed by class id
    std::vector<int> class_of;             // element id -> class id
    bool ordered = true;
    Poset quotient;  // valid only when ordered; class ids are its elements
    int e_le_count = 0; // merge pairs whose endpoints are comparable pre-quotient
};

// Merge the given interior pairs (transitively); throws if a pair touches a
// boundary element.
QuotientResult quotient_by_pairs(const Poset& p, const std::vector<std::pair<int, int>>& merges);

// Number of linear extensions of the interior partial order; guard |P°| <= 12.
long long linear_extensions_count(const Poset& p);

struct VolumeResult {
    double value = 0.0;
    double std_error = 0.0; // 0 for exact paths
    bool exact = true;
    long long samples_used = 0;
};

struct VolumeOptions {
    long long mc_samples = 100000;
    std::uint64_t seed = 2026;
};

// Per-element feasible interval implied by the boundary values.
std::pair<std::vector<double>, std::vector<double>>
interior_bounds(const Poset& p, const BoundaryValues& b);

// Lebesgue volume of the monotone-assignment domain.  Exact for two-constant
// boundaries (T^n e / n!) and for antichain interiors (product of interval
// lengths); Monte Carlo with reported standard error otherwise.
VolumeResult polytope_volume(const Poset& p, const BoundaryValues& b, const VolumeOptions& opt = {});

// Volume through a quotient: 0 when unordered, else the volume of the quotient
// poset with boundary values inherited from the original elements.
VolumeResult polytope_volume(const Poset& p, const QuotientResult& q, const BoundaryValues& b,
                             const VolumeOptions& opt = {});

// Uniform sample from [s,t]_P; throws when the domain is empty.
std::map<int, double> sample_monotone(const Poset& p, const BoundaryValues& b, RngStream& rng);

} // namespace roughlab
