#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "roughlab/moments.hpp"

using namespace roughlab;

namespace {

MomentFactor f2(std::vector<int> idx, double s = 0.0, double t = 1.0) {
    return MomentFactor{2, std::move(idx), s, t};
}
MomentFactor f4(std::vector<int> idx, double s = 0.0, double t = 1.0) {
    return MomentFactor{4, std::move(idx), s, t};
}

} // namespace

TEST_CASE("enumerate_pairings") {
    SUBCASE("E(X2_12 X2_12): exactly one index-matching pairing out of three") {
        MomentSpec s{2, {f2({1, 2}), f2({1, 2})}};
        auto ps = enumerate_pairings(s);
        REQUIRE(ps.size() == 1);
        CHECK(ps[0] == Pairing{{1, 5}, {2, 6}});
    }
    SUBCASE("E(X2_11 X2_11): all three pairings survive") {
        MomentSpec s{1, {f2({1, 1}), f2({1, 1})}};
        CHECK(enumerate_pairings(s).size() == 3);
    }
    SUBCASE("odd total size gives no pairings") {
        MomentSpec s{1, {MomentFactor{1, {1}, 0.0, 1.0}, f2({1, 1})}};
        CHECK(enumerate_pairings(s).empty());
    }
    SUBCASE("odd per-component multiplicity gives no pairings") {
        MomentSpec s{3, {f2({1, 2}), f2({1, 3})}};
        CHECK(enumerate_pairings(s).empty());
    }
}

TEST_CASE("limit_moment covariance table") {
    const double c = 0.0533;
    SUBCASE("matching indices give +c |overlap|") {
        MomentSpec s{2, {f2({1, 2}), f2({1, 2})}};
        CHECK(limit_moment(s, c).value == doctest::Approx(c).epsilon(1e-12));
        MomentSpec shifted{2, {f2({1, 2}, 0.0, 1.0), f2({1, 2}, 0.5, 2.0)}};
        CHECK(limit_moment(shifted, c).value == doctest::Approx(0.5 * c).epsilon(1e-12));
    }
    SUBCASE("transposed indices give -c") {
        MomentSpec s{2, {f2({1, 2}), f2({2, 1})}};
        CHECK(limit_moment(s, c).value == doctest::Approx(-c).epsilon(1e-12));
    }
    SUBCASE("mismatched indices give 0") {
        MomentSpec s{3, {f2({1, 2}), f2({1, 3})}};
        CHECK(limit_moment(s, c).value == 0.0);
    }
    SUBCASE("diagonal index level-2 limit vanishes by cancellation") {
        MomentSpec s{1, {f2({1, 1}), f2({1, 1})}};
        auto pred = limit_moment(s, c);
        CHECK(pred.value == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(pred.pairing_terms.size() == 3);
    }
}

TEST_CASE("limit_moment level 4") {
    const double c = 0.0533;
    SUBCASE("mean of X4_1212 is c/2") {
        MomentSpec s{2, {f4({1, 2, 1, 2})}};
        CHECK(limit_moment(s, c).value == doctest::Approx(0.5 * c).epsilon(1e-12));
    }
    SUBCASE("mean of X4_1122 is 0") {
        MomentSpec s{2, {f4({1, 1, 2, 2})}};
        CHECK(limit_moment(s, c).value == 0.0);
    }
}

TEST_CASE("special identities") {
    const double c = 0.07;
    auto rows = predict_special_identities(c);
    REQUIRE(rows.size() == 5);
    for (const auto& row : rows) {
        INFO(row.name);
        CHECK(row.value == doctest::Approx(row.expected).epsilon(1e-10));
    }
}

TEST_CASE("fourth cumulant of level-2 factors vanishes") {
    const double c = 0.0533;
    SUBCASE("four identical X2_12 factors") {
        MomentSpec s{2, {f2({1, 2}), f2({1, 2}), f2({1, 2}), f2({1, 2})}};
        CHECK(limit_cumulant(s, c) == doctest::Approx(0.0).epsilon(1e-12));
        // Moebius sanity: moment = cumulant + pair products of covariances
        double m = limit_moment(s, c).value;
        MomentSpec pair{2, {f2({1, 2}), f2({1, 2})}};
        double cov = limit_moment(pair, c).value;
        CHECK(m == doctest::Approx(limit_cumulant(s, c) + 3.0 * cov * cov).epsilon(1e-10));
    }
    SUBCASE("mixed 12,21,12,21 factors") {
        MomentSpec s{2, {f2({1, 2}), f2({2, 1}), f2({1, 2}), f2({2, 1})}};
        CHECK(limit_cumulant(s, c) == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("invariances") {
    const double c = 0.04;
    SUBCASE("component relabelling") {
        MomentSpec s{2, {f2({1, 2}), f2({2, 1})}};
        MomentSpec r{2, {f2({2, 1}), f2({1, 2})}};
        CHECK(limit_moment(s, c).value == doctest::Approx(limit_moment(r, c).value));
    }
    SUBCASE("interval translation") {
        MomentSpec s{2, {f4({1, 2, 1, 2}, 0.0, 1.0)}};
        MomentSpec t{2, {f4({1, 2, 1, 2}, 5.0, 6.0)}};
        CHECK(limit_moment(s, c).value == doctest::Approx(limit_moment(t, c).value));
    }
    SUBCASE("odd level count of one index is 0") {
        MomentSpec s{2, {f4({1, 1, 1, 2}), f2({1, 2})}};
        CHECK(limit_moment(s, c).value == 0.0);
    }
}

TEST_CASE("numeric cross-check of the X4_1212 mean") {
    // evaluate the Wick integrand of the single pairing directly at moderate
    // smoothing scales and compare against the closed-form prediction c/2
    const double H = 0.1;
    MomentSpec s{2, {f4({1, 2, 1, 2})}};
    MomentLayout lay = build_layout(s);
    Diagram d = Diagram::bare(lay.poset);
    d.gk = {{1, 3}, {2, 4}};
    auto cres = constant_c(H, Mollifier::bump(), {1e-3}, 1.0);
    double target = limit_moment(s, cres.direct_limit).value;
    EvalOptions opt;
    opt.gl_points = 64;
    double prev = 1e300;
    for (double eps : {0.1, 0.04}) {
        KernelModel model(H, eps, Mollifier::bump());
        double v = evaluate_J_numeric(d, model, lay.bounds, opt).value;
        CHECK(std::abs(v - target) < std::abs(prev - target));
        prev = v;
    }
    CHECK(prev == doctest::Approx(target).epsilon(0.15));
}
