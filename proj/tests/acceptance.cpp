// Acceptance gate: prints one pass/fail line per criterion and exits with the
// number of failed criteria.  Optional arguments select a subset, e.g.
// `acceptance 3 7 12`.
#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "roughlab/harness.hpp"

using namespace roughlab;

namespace {

constexpr std::uint64_t kSeed = 20260824;

struct TableCache {
    std::map<std::string, ResultTable> tables;

    const ResultTable& get(const std::string& key, const ExperimentConfig& cfg) {
        auto it = tables.find(key);
        if (it != tables.end()) return it->second;
        return tables.emplace(key, run_experiment(cfg)).first->second;
    }
};

TableCache cache;

ExperimentConfig base_config(std::string kind) {
    ExperimentConfig c;
    c.kind = std::move(kind);
    c.seed = kSeed;
    return c;
}

const ResultTable& constant_c_table() {
    auto c = base_config("constant-c");
    c.hurst = 0.25;
    c.eps_ladder = {1e-2, 1e-4, 1e-6};
    return cache.get("constant-c", c);
}

const ResultTable& reduce_table() {
    auto c = base_config("reduce");
    return cache.get("reduce", c);
}

const ResultTable& limit_moment_table() {
    return cache.get("limit-moment", base_config("limit-moment"));
}

const ResultTable& mc_table() {
    auto c = base_config("mc-moments");
    c.hurst = 0.1;
    c.eps_ladder = {1e-1, 1e-2, 1e-3};
    c.samples = 2000;
    c.batch_size = 100;
    return cache.get("mc-moments", c);
}

const ResultTable& rde_table() {
    auto c = base_config("rde");
    c.hurst = 0.1;
    c.eps_ladder = {1e-1, 1e-2, 1e-3};
    c.samples = 2000;
    c.batch_size = 100;
    return cache.get("rde", c);
}

const ResultTable& kpz_noise_table() {
    auto c = base_config("kpz-noise");
    c.eps_ladder = {0.0625, 0.03125, 0.015625};
    c.nx = 1024;
    c.lambda = 0.125;
    return cache.get("kpz-noise", c);
}

const ResultTable& kpz_solve_table() {
    auto c = base_config("kpz-solve");
    c.eps_ladder = {0.125};
    return cache.get("kpz-solve", c);
}

// pass/fail of the named rows; missing rows count as failures
std::pair<bool, std::string> check_rows(const ResultTable& t,
                                        const std::vector<std::string>& prefixes) {
    bool ok = true;
    std::string detail;
    for (const auto& prefix : prefixes) {
        bool found = false;
        for (const auto& r : t.rows) {
            if (r.id.rfind(prefix, 0) != 0) continue;
            found = true;
            if (!r.pass) {
                ok = false;
                detail += "\n    row " + r.id + ": estimate " + std::to_string(r.estimate) +
                          (r.has_prediction
                               ? " vs prediction " + std::to_string(r.prediction)
                               : "") +
                          (r.note.empty() ? "" : " (" + r.note + ")");
            }
        }
        if (!found) {
            ok = false;
            detail += "\n    row " + prefix + ": missing";
        }
    }
    return {ok, detail};
}

struct Criterion {
    int id;
    std::string name;
    std::function<std::pair<bool, std::string>()> run;
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> list = {
        {1, "limit constant at the critical Hurst parameter",
         [] { return check_rows(constant_c_table(), {"constant-c-limit", "mollifier-independence"}); }},
        {2, "integration-by-parts exactness on random diagrams",
         [] { return check_rows(reduce_table(), {"ibp-invariance"}); }},
        {3, "level-2 covariance table",
         [] { return check_rows(limit_moment_table(), {"cov-"}); }},
        {4, "Levy-area Monte Carlo covariances",
         [] {
             return check_rows(mc_table(), {"levy-area-variance", "levy-area-antidiagonal",
                                            "cross-index-covariance"});
         }},
        {5, "odd signature levels vanish",
         [] { return check_rows(mc_table(), {"level1-vanishes", "level3-vanishes"}); }},
        {6, "level-4 limit and shuffle identity",
         [] { return check_rows(mc_table(), {"level4-1212-mean", "shuffle-residual-max"}); }},
        {7, "fourth cumulant vanishes symbolically",
         [] { return check_rows(limit_moment_table(), {"fourth-cumulant"}); }},
        {8, "cutoff-reduction cancellation on the fourth-moment graphs",
         [] {
             return check_rows(reduce_table(), {"fourth-moment-head-reduction",
                                                "fourth-moment-tail-cancellation"});
         }},
        {9, "bracket diffusion limit of the driven system",
         [] {
             return check_rows(rde_table(), {"bracket-z-variance", "transverse-x-vanishes",
                                             "transverse-y-vanishes",
                                             "commuting-dispersion-vanishes"});
         }},
        {10, "tightness exponent of the level-2 increment",
         [] { return check_rows(mc_table(), {"tightness-slope"}); }},
        {11, "KPZ noise statistics on the torus",
         [] {
             return check_rows(kpz_noise_table(),
                               {"xi-pairing-variance", "xi-eta-correlation",
                                "xi-fourth-cumulant-vanishes", "chi-variance-scaling"});
         }},
        {12, "KPZ change of variables under grid refinement",
         [] { return check_rows(kpz_solve_table(), {"discrepancy-nonzero", "halving-ratio"}); }},
        {13, "brute-force oracle suite",
         [] {
             const ResultTable& t = cache.get("oracles", base_config("oracles"));
             auto res = check_rows(t, {""});
             return res;
         }},
    };
    return list;
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
    int failures = 0;
    for (const auto& c : criteria()) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        auto start = std::chrono::steady_clock::now();
        bool ok = false;
        std::string detail;
        try {
            std::tie(ok, detail) = c.run();
        } catch (const std::exception& e) {
            ok = false;
            detail = std::string("\n    exception: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                          .count();
        std::cout << "criterion " << c.id << ": " << (ok ? "PASS" : "FAIL") << " — "
                  << c.name << "  [" << static_cast<long>(secs) << "s]" << detail << "\n";
        std::cout.flush();
        failures += ok ? 0 : 1;
    }
    if (failures) std::cout << failures << " criterion(s) FAIL\n";
    else std::cout << "all criteria PASS\n";
    return failures;
}
