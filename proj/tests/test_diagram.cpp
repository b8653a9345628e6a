#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "roughlab/diagram.hpp"
#include "roughlab/quadrature.hpp"

using namespace roughlab;

namespace {

std::shared_ptr<const Poset> two_chains_2() {
    return std::make_shared<const Poset>(
        Poset::disjoint_sum({Poset::chain(2), Poset::chain(2)}));
}

int count_full_terms(const DiagramSum& s, Diagram* out = nullptr, long long* coeff = nullptr) {
    int n = 0;
    for (const auto& [k, term] : s.terms()) {
        if (!term.first.gk.empty()) continue;
        if (classify_limit_order(term.first) == LimitOrderClass::FULL_ORDERED) {
            ++n;
            if (out) *out = term.first;
            if (coeff) *coeff = term.second;
        }
    }
    return n;
}

} // namespace

TEST_CASE("validate_diagram types") {
    SUBCASE("single K edge gives two type-1 vertices") {
        auto p = std::make_shared<const Poset>(Poset::chain(2));
        Diagram d = Diagram::bare(p);
        d.gk = {{1, 2}};
        auto res = validate_diagram(d);
        REQUIRE(res.ok);
        CHECK(res.type[1] == 1);
        CHECK(res.type[2] == 1);
    }
    SUBCASE("one outgoing and two incoming Kbar edges is type 2") {
        auto p = std::make_shared<const Poset>(Poset::chain(3));
        Diagram d = Diagram::bare(p);
        d.ek = {{1, 3}, {2, 3}, {3, 4}};
        auto res = validate_diagram(d);
        REQUIRE(res.ok);
        CHECK(res.type[3] == 2);
        CHECK(res.type[1] == 2);
        CHECK(res.type[2] == 2);
    }
    SUBCASE("two type-3 vertices rejected") {
        auto p = two_chains_2();
        Diagram d = Diagram::bare(p);
        d.gk = {{1, 2}};
        d.ek = {{5, 1}, {6, 2}, {0, 0}};
        d.ek.pop_back(); // keep {(5,1),(6,2)}
        // 5 and 6 need outgoing edges only; 1 and 2 each carry gk + incoming
        auto res = validate_diagram(d);
        CHECK(!res.ok);
        CHECK(res.error == "MULTIPLE_TYPE3");
    }
    SUBCASE("vertex with no edges is a violation") {
        auto p = std::make_shared<const Poset>(Poset::chain(2));
        Diagram d = Diagram::bare(p);
        auto res = validate_diagram(d);
        CHECK(!res.ok);
    }
}

TEST_CASE("classify_components") {
    auto p = std::make_shared<const Poset>(
        Poset::disjoint_sum({Poset::chain(1), Poset::chain(1)}));
    SUBCASE("2-cycle") {
        Diagram d = Diagram::bare(p);
        d.ek = {{1, 4}, {4, 1}};
        auto comps = classify_components(d);
        REQUIRE(comps.size() == 1);
        CHECK(comps[0].kind == ComponentKind::CYCLE_WITH_TREES);
        CHECK(comps[0].cycle_ek_edges == 2);
    }
    SUBCASE("edge into a top vertex is a tree") {
        Diagram d = Diagram::bare(p);
        d.ek = {{1, 2}, {4, 5}};
        auto comps = classify_components(d);
        REQUIRE(comps.size() == 2);
        CHECK(comps[0].kind == ComponentKind::TREE);
        CHECK(comps[1].kind == ComponentKind::TREE);
    }
    SUBCASE("edge into a type-3 vertex is a line tree") {
        auto q = two_chains_2();
        Diagram d = Diagram::bare(q);
        d.gk = {{2, 6}};
        d.ek = {{1, 2}, {5, 1}};
        auto res = validate_diagram(d);
        REQUIRE(res.ok);
        REQUIRE(res.type[2] == 3);
        auto comps = classify_components(d);
        REQUIRE(comps.size() == 1);
        CHECK(comps[0].kind == ComponentKind::LINE_TREE);
    }
}

TEST_CASE("apply_I basics") {
    auto p = std::make_shared<const Poset>(Poset::chain(2));
    SUBCASE("single K edge: self-edge term drops") {
        Diagram d = Diagram::bare(p);
        d.gk = {{1, 2}};
        DiagramSum out = apply_I(DiagramSum(d));
        REQUIRE(out.size() == 1);
        const auto& [key, term] = *out.terms().begin();
        CHECK(term.second == 1);
        CHECK(term.first.gk.empty());
        CHECK(term.first.ek == std::vector<std::pair<int, int>>{{1, 3}});
        CHECK(term.first.active[2] == 0);
    }
    SUBCASE("empty gk is the identity") {
        Diagram d = Diagram::bare(p);
        d.ek = {{1, 2}, {2, 3}};
        DiagramSum s(d);
        CHECK(apply_I(s) == s);
    }
}

TEST_CASE("I^2 on the covariance pairings") {
    auto p = two_chains_2();
    SUBCASE("uncrossed pairing reduces to one full 2-cycle with coefficient -1") {
        Diagram d = Diagram::bare(p);
        d.gk = {{1, 5}, {2, 6}};
        DiagramSum red = reduce_I_infinity(DiagramSum(d));
        for (const auto& [k, term] : red.terms()) CHECK(term.first.gk.empty());
        CHECK(apply_I(red) == red);
        Diagram full;
        long long coeff = 0;
        REQUIRE(count_full_terms(red, &full, &coeff) == 1);
        CHECK(coeff == -1);
        CHECK(full.ek == std::vector<std::pair<int, int>>{{1, 6}, {6, 1}});
    }
    SUBCASE("crossed pairing gives coefficient +1") {
        Diagram d = Diagram::bare(p);
        d.gk = {{1, 6}, {2, 5}};
        DiagramSum red = reduce_I_infinity(DiagramSum(d));
        Diagram full;
        long long coeff = 0;
        REQUIRE(count_full_terms(red, &full, &coeff) == 1);
        CHECK(coeff == 1);
        CHECK(full.ek == std::vector<std::pair<int, int>>{{1, 5}, {5, 1}});
    }
    SUBCASE("within-chain pairing leaves no full terms") {
        Diagram d = Diagram::bare(p);
        d.gk = {{1, 2}, {5, 6}};
        DiagramSum red = reduce_I_infinity(DiagramSum(d));
        CHECK(count_full_terms(red) == 0);
    }
}

TEST_CASE("classify_limit_order") {
    SUBCASE("2-cycle is full and ordered") {
        auto p = std::make_shared<const Poset>(
            Poset::disjoint_sum({Poset::chain(1), Poset::chain(1)}));
        Diagram d = Diagram::bare(p);
        d.ek = {{1, 4}, {4, 1}};
        CHECK(classify_limit_order(d) == LimitOrderClass::FULL_ORDERED);
    }
    SUBCASE("3-cycle is not full") {
        auto p = std::make_shared<const Poset>(Poset::chain(3));
        Diagram d = Diagram::bare(p);
        d.ek = {{1, 2}, {2, 3}, {3, 1}};
        CHECK(classify_limit_order(d) == LimitOrderClass::NOT_FULL);
    }
    SUBCASE("two 2-cycles joined by a gchi edge are chi-linked") {
        auto p = two_chains_2();
        Diagram d = Diagram::bare(p);
        d.ek = {{1, 5}, {5, 1}, {2, 6}, {6, 2}};
        d.gchi = {{1, 2}};
        CHECK(classify_limit_order(d) == LimitOrderClass::CHI_LINKED);
    }
    SUBCASE("unordered full diagram detected") {
        // crosswise cycles on two 3-interior chains force class cycles
        auto p = std::make_shared<const Poset>(
            Poset::disjoint_sum({Poset::chain(3), Poset::chain(3)}));
        Diagram d = Diagram::bare(p);
        d.ek = {{1, 8}, {8, 1}, {3, 6}, {6, 3}, {2, 7}, {7, 2}};
        CHECK(classify_limit_order(d) == LimitOrderClass::FULL_UNORDERED);
    }
}

TEST_CASE("detect_parallel and limit_value") {
    Poset p = Poset::disjoint_sum({Poset::chain(2), Poset::chain(2)});
    SUBCASE("uncrossed covariance pairing") {
        auto cls = detect_parallel(p, {{1, 5}, {2, 6}});
        REQUIRE(cls.parallel);
        CHECK(cls.crossed_count == 0);
        CHECK(cls.e_le_count == 0);
        CHECK(cls.quotient.quotient.interior().size() == 2);
        CHECK(cls.cycle_quotient.quotient.interior().size() == 1);
        double v = limit_value(p, {{1, 5}, {2, 6}}, BoundaryValues::constant(p, 0.0, 1.0), 0.05);
        CHECK(v == doctest::Approx(0.05).epsilon(1e-12));
    }
    SUBCASE("crossed pairing with offset intervals") {
        BoundaryValues b;
        b.lower[0] = 0.0; b.upper[3] = 1.0;
        b.lower[4] = 0.5; b.upper[7] = 2.0;
        auto cls = detect_parallel(p, {{1, 6}, {2, 5}});
        REQUIRE(cls.parallel);
        CHECK(cls.crossed_count == 1);
        double v = limit_value(p, {{1, 6}, {2, 5}}, b, 0.05);
        CHECK(v == doctest::Approx(-0.05 * 0.5).epsilon(1e-12));
    }
    SUBCASE("within-chain pairing is not parallel and evaluates to 0") {
        auto cls = detect_parallel(p, {{1, 2}, {5, 6}});
        CHECK(!cls.parallel);
        CHECK(limit_value(p, {{1, 2}, {5, 6}}, BoundaryValues::constant(p, 0.0, 1.0), 0.05) == 0.0);
    }
    SUBCASE("sign law: crossing one pair flips the sign") {
        BoundaryValues b = BoundaryValues::constant(p, 0.0, 1.0);
        double u = limit_value(p, {{1, 5}, {2, 6}}, b, 0.07);
        double c = limit_value(p, {{1, 6}, {2, 5}}, b, 0.07);
        CHECK(u == doctest::Approx(-c).epsilon(1e-12));
    }
}

TEST_CASE("evaluate_J_numeric") {
    KernelModel model(0.1, 0.25, Mollifier::bump());
    SUBCASE("empty edges give the polytope volume") {
        // no valid type assignment needed for evaluation itself
        auto p = std::make_shared<const Poset>(Poset::chain(2));
        Diagram d = Diagram::bare(p);
        d.ek = {{1, 2}, {2, 3}}; // make it valid but evaluate without edges too
        Diagram bare_d = Diagram::bare(p);
        bare_d.active[1] = bare_d.active[2] = 1;
        Diagram no_edges = Diagram::bare(p);
        auto r = evaluate_J_numeric(no_edges, model, BoundaryValues::constant(*p, 0.0, 1.0));
        CHECK(r.value == doctest::Approx(0.5).epsilon(1e-8));
    }
    SUBCASE("I-invariance on a single K edge") {
        auto p = std::make_shared<const Poset>(Poset::chain(2));
        Diagram d = Diagram::bare(p);
        d.gk = {{1, 2}};
        BoundaryValues b = BoundaryValues::constant(*p, 0.0, 1.0);
        double before = evaluate_J_numeric(d, model, b).value;
        DiagramSum after = apply_I(DiagramSum(d));
        double sum = 0.0;
        for (const auto& [k, term] : after.terms())
            sum += static_cast<double>(term.second) *
                   evaluate_J_numeric(term.first, model, b).value;
        CHECK(sum == doctest::Approx(before).epsilon(1e-6));
    }
    SUBCASE("I-invariance on the covariance diagram (4 interior vertices)") {
        auto p = two_chains_2();
        Diagram d = Diagram::bare(p);
        d.gk = {{1, 5}, {2, 6}};
        BoundaryValues b = BoundaryValues::constant(*p, 0.0, 1.0);
        double before = evaluate_J_numeric(d, model, b).value;
        DiagramSum after = apply_I(DiagramSum(d));
        double sum = 0.0;
        for (const auto& [k, term] : after.terms())
            sum += static_cast<double>(term.second) *
                   evaluate_J_numeric(term.first, model, b).value;
        CHECK(sum == doctest::Approx(before).epsilon(2e-5));
    }
    SUBCASE("2-cycle approaches -c at small eps") {
        auto p = std::make_shared<const Poset>(
            Poset::disjoint_sum({Poset::chain(1), Poset::chain(1)}));
        Diagram d = Diagram::bare(p);
        d.ek = {{1, 4}, {4, 1}};
        KernelModel fine(0.1, 1e-3, Mollifier::bump());
        BoundaryValues b = BoundaryValues::constant(*p, 0.0, 1.0);
        double v = evaluate_J_numeric(d, fine, b).value;
        auto cres = constant_c(0.1, Mollifier::bump(), {1e-3}, 1.0);
        CHECK(v == doctest::Approx(-cres.direct_limit).epsilon(0.05));
    }
}

TEST_CASE("order independence of reduced values") {
    auto p = two_chains_2();
    Diagram d = Diagram::bare(p);
    d.gk = {{1, 5}, {2, 6}};
    KernelModel model(0.1, 0.25, Mollifier::bump());
    BoundaryValues b = BoundaryValues::constant(*p, 0.0, 1.0);
    auto value_of = [&](const DiagramSum& s) {
        double sum = 0.0;
        for (const auto& [k, term] : s.terms())
            sum += static_cast<double>(term.second) *
                   evaluate_J_numeric(term.first, model, b).value;
        return sum;
    };
    DiagramSum red_default = reduce_I_infinity(DiagramSum(d));
    std::vector<int> priority(p->size(), 100);
    priority[6] = 0; // promote the other chain's upper interior vertex
    DiagramSum red_other = reduce_I_infinity(DiagramSum(d), priority);
    CHECK(value_of(red_default) == doctest::Approx(value_of(red_other)).epsilon(2e-5));
    CHECK(value_of(red_default) == doctest::Approx(value_of(DiagramSum(d))).epsilon(2e-5));
}

TEST_CASE("chi cutoff") {
    CHECK(chi_cutoff(0.0) == 0.0);
    CHECK(chi_cutoff(1.0) == 1.0);
    CHECK(chi_cutoff(-0.5) == 0.0);
    CHECK(chi_cutoff(0.5) == doctest::Approx(0.5));
    CHECK(chi_cutoff_derivative(0.0) == 0.0);
    CHECK(chi_cutoff_derivative(1.0) == 0.0);
    double fd = (chi_cutoff(0.3 + 1e-6) - chi_cutoff(0.3 - 1e-6)) / 2e-6;
    CHECK(chi_cutoff_derivative(0.3) == doctest::Approx(fd).epsilon(1e-6));
    // monotone increasing
    CHECK(chi_cutoff(0.7) > chi_cutoff(0.3));
}

TEST_CASE("apply_J") {
    SUBCASE("pivot without gchi edge matches apply_I") {
        auto p = std::make_shared<const Poset>(Poset::chain(2));
        Diagram d = Diagram::bare(p);
        d.gk = {{1, 2}};
        CHECK(apply_J(DiagramSum(d)) == apply_I(DiagramSum(d)));
    }
    SUBCASE("pivot with gchi edge yields three terms (one self-edge drops)") {
        auto p = std::make_shared<const Poset>(Poset::chain(3));
        Diagram d = Diagram::bare(p);
        d.ek = {{1, 2}};
        d.gk = {{2, 3}};
        d.gchi = {{1, 3}};
        REQUIRE(validate_diagram(d).ok);
        DiagramSum out = apply_J(DiagramSum(d));
        // g-up (gchi rewired to the top), g-down self-edge drops, third term
        CHECK(out.size() == 2);
        bool has_third = false, has_up = false;
        for (const auto& [k, term] : out.terms()) {
            if (!term.first.echi.empty()) {
                has_third = true;
                CHECK(term.first.echi == std::vector<std::pair<int, int>>{{3, 1}});
                CHECK(term.first.ek == (std::vector<std::pair<int, int>>{{1, 2}, {2, 3}}));
                CHECK(term.second == 1);
            } else {
                has_up = true;
                CHECK(term.first.gchi == std::vector<std::pair<int, int>>{{1, 4}});
                CHECK(term.first.active[3] == 0);
                CHECK(term.second == 1);
            }
        }
        CHECK(has_third);
        CHECK(has_up);
    }
}

TEST_CASE("J_eps_delta evaluation") {
    KernelModel model(0.1, 0.25, Mollifier::bump());
    SUBCASE("no chi edges equals evaluate_J_numeric") {
        auto p = std::make_shared<const Poset>(Poset::chain(2));
        Diagram d = Diagram::bare(p);
        d.ek = {{1, 2}, {2, 3}};
        BoundaryValues b = BoundaryValues::constant(*p, 0.0, 1.0);
        double a = evaluate_J_numeric(d, model, b).value;
        double c = evaluate_J_eps_delta_numeric(d, model, 0.3, b).value;
        CHECK(a == doctest::Approx(c).epsilon(1e-9));
    }
    SUBCASE("consistency against a direct 2-variable oracle") {
        // two interior vertices on one chain joined by Kbar and gchi edges
        auto p = std::make_shared<const Poset>(Poset::chain(2));
        Diagram d = Diagram::bare(p);
        d.ek = {{1, 2}, {2, 3}};
        d.gchi = {{1, 2}};
        BoundaryValues b = BoundaryValues::constant(*p, 0.0, 1.0);
        const double delta = 2.0; // larger than the interval length
        double v = evaluate_J_eps_delta_numeric(d, model, delta, b).value;
        // direct nested quadrature oracle
        QuadOptions q;
        q.abs_tol = 1e-12;
        q.rel_tol = 1e-10;
        double direct = integrate_strict(
            [&](double r2) {
                return integrate_strict(
                           [&](double r1) {
                               return model.kbar(r2 - r1) * model.kbar(1.0 - r2) *
                                      (1.0 - chi_cutoff((r2 - r1) / delta));
                           },
                           0.0, r2, q) ;
            },
            0.0, 1.0, q);
        CHECK(v == doctest::Approx(direct).epsilon(1e-7));
    }
    SUBCASE("J-invariance for the three-term rule") {
        auto p = std::make_shared<const Poset>(Poset::chain(3));
        Diagram d = Diagram::bare(p);
        d.ek = {{1, 2}};
        d.gk = {{2, 3}};
        d.gchi = {{1, 3}};
        BoundaryValues b = BoundaryValues::constant(*p, 0.0, 1.0);
        const double delta = 0.4;
        double before = evaluate_J_eps_delta_numeric(d, model, delta, b).value;
        DiagramSum after = apply_J(DiagramSum(d));
        double sum = 0.0;
        for (const auto& [k, term] : after.terms())
            sum += static_cast<double>(term.second) *
                   evaluate_J_eps_delta_numeric(term.first, model, delta, b).value;
        CHECK(sum == doctest::Approx(before).epsilon(1e-5));
    }
}
