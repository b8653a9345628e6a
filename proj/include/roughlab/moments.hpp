#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "roughlab/diagram.hpp"
#include "roughlab/poset.hpp"

namespace roughlab {

// One iterated-integral factor X^{(level)}_index(s,t).
struct MomentFactor {
    int level = 0;
    std::vector<int> index; // noise-component labels, size == level
    double s = 0.0, t = 1.0;
};

struct MomentSpec {
    int component_count = 0;
    std::vector<MomentFactor> factors;

    int total_interior() const;
};

// The disjoint union of one chain per factor, with the component label of each
// interior vertex (position j from the bottom carries index[j]).
struct MomentLayout {
    std::shared_ptr<const Poset> poset;
    std::vector<int> component; // per ambient vertex; 0 on boundary
    std::vector<int> factor_of; // per ambient vertex; -1 on boundary
    std::vector<std::vector<int>> interior; // interior ids per factor, bottom-up
    BoundaryValues bounds;
};

MomentLayout build_layout(const MomentSpec& spec);

using Pairing = std::vector<std::pair<int, int>>;

// All perfect pairings of the interior vertices matching only equal component
// labels (independent components decorrelate).  Empty when the total size is
// odd or any component label appears an odd number of times.
std::vector<Pairing> enumerate_pairings(const MomentSpec& spec);

struct LimitPrediction {
    double value = 0.0;
    double c_used = 0.0;
    double sigma = 0.0; // sqrt(c_used)
    std::vector<std::pair<Pairing, double>> pairing_terms;
};

// Limiting moment: sum of the closed-form pairing contributions.
LimitPrediction limit_moment(const MomentSpec& spec, double c);

// Joint cumulant across the factor groups: only pairings whose factor graph is
// connected contribute.
double limit_cumulant(const MomentSpec& spec, double c);

struct IdentityRow {
    std::string name;
    double value = 0.0;
    double expected = 0.0;
};

// Engine-computed limits for the double-index, antisymmetrised and shuffle
// combinations; all rows are expected to be numerically zero.
std::vector<IdentityRow> predict_special_identities(double c);

} // namespace roughlab
