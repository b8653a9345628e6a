#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "roughlab/harness.hpp"

using namespace roughlab;

TEST_CASE("config parsing and validation") {
    SUBCASE("round trip") {
        ExperimentConfig c;
        c.kind = "limit-moment";
        c.eps_ladder = {0.1, 0.01};
        auto back = ExperimentConfig::from_json_text(c.to_json_text());
        CHECK(back.kind == "limit-moment");
        CHECK(back.eps_ladder == std::vector<double>{0.1, 0.01});
        CHECK(back.samples == c.samples);
    }
    SUBCASE("errors carry field paths") {
        ExperimentConfig c;
        c.kind = "mc-moments";
        c.eps_ladder = {0.01, 0.1}; // wrong order
        c.samples = 10;             // too few
        try {
            c.validate();
            FAIL("expected validation failure");
        } catch (const std::invalid_argument& e) {
            std::string msg = e.what();
            CHECK(msg.find("eps_ladder[1]") != std::string::npos);
            CHECK(msg.find("samples") != std::string::npos);
        }
    }
    SUBCASE("unknown mollifier is a validation error") {
        ExperimentConfig c;
        c.kind = "kernels";
        c.mollifier = "wedge";
        CHECK_THROWS_WITH_AS(c.validate(),
                             doctest::Contains("mollifier: unknown name 'wedge'"),
                             std::invalid_argument);
    }
    SUBCASE("unknown fields and bad JSON rejected") {
        CHECK_THROWS(ExperimentConfig::from_json_text("{"));
        CHECK_THROWS_WITH_AS(
            ExperimentConfig::from_json_text(R"({"kind":"kernels","frobnicate":1})"),
            doctest::Contains("frobnicate"), std::invalid_argument);
    }
    SUBCASE("tolerance profiles") {
        CHECK(ToleranceProfile::by_name("strict").rel_floor <
              ToleranceProfile::by_name("default").rel_floor);
        CHECK_THROWS(ToleranceProfile::by_name("sloppy"));
    }
}

TEST_CASE("result table gates and serialisation") {
    ToleranceProfile tol = ToleranceProfile::defaults();
    ResultTable t;
    t.title = "demo";
    SUBCASE("statistical gate uses max of sigma and relative floor") {
        CHECK(t.gate_stat("a", "", 1.05, 0.001, 1.0, PredictionBasis::ORACLE, tol).pass);
        CHECK(!t.gate_stat("b", "", 1.2, 0.001, 1.0, PredictionBasis::ORACLE, tol).pass);
        CHECK(t.gate_stat("c", "", 1.2, 0.1, 1.0, PredictionBasis::ORACLE, tol).pass);
        CHECK(!t.all_pass());
    }
    SUBCASE("exact gate") {
        CHECK(t.gate_exact("a", "", 1.0 + 1e-8, 1.0, PredictionBasis::EXACT, tol).pass);
        CHECK(!t.gate_exact("b", "", 1.001, 1.0, PredictionBasis::EXACT, tol).pass);
    }
    SUBCASE("empty table emits header-only files") {
        std::string csv = to_csv(t);
        CHECK(csv == "id,params,estimate,stderr,prediction,basis,pass\n");
        CHECK(to_markdown(t).find("| id |") != std::string::npos);
    }
    SUBCASE("csv quotes commas") {
        t.gate_bool("x", "a,b", true);
        CHECK(to_csv(t).find("\"a,b\"") != std::string::npos);
    }
}

TEST_CASE("batch stats and the worker pool") {
    SUBCASE("batch means match the plain mean") {
        std::vector<double> v;
        for (int i = 0; i < 1000; ++i) v.push_back(0.001 * i);
        auto s = batch_stats(v, 20);
        CHECK(s.mean == doctest::Approx(0.4995).epsilon(1e-12));
        CHECK(s.n == 1000);
        CHECK(s.se > 0.0);
    }
    SUBCASE("identical results for any worker count") {
        auto fn = [](long long i) { return std::sin(0.1 * static_cast<double>(i)); };
        auto a = parallel_map(500, 1, fn);
        auto b = parallel_map(500, 4, fn);
        CHECK(a == b);
    }
    SUBCASE("exceptions propagate out of the pool") {
        CHECK_THROWS(parallel_map(10, 3, [](long long i) -> double {
            if (i == 7) throw std::runtime_error("boom");
            return 0.0;
        }));
    }
}

TEST_CASE("experiments") {
    SUBCASE("limit-moment table is exact and passes") {
        ExperimentConfig c;
        c.kind = "limit-moment";
        auto t = run_experiment(c);
        REQUIRE(t.rows.size() == 5);
        CHECK(t.all_pass());
    }
    SUBCASE("unknown kind rejected") {
        ExperimentConfig c;
        c.kind = "frobnicate";
        CHECK_THROWS(run_experiment(c));
    }
    SUBCASE("mc-moments is deterministic across worker counts") {
        ExperimentConfig c;
        c.kind = "mc-moments";
        c.eps_ladder = {0.1};
        c.samples = 100;
        c.batch_size = 10;
        c.workers = 1;
        auto t1 = run_experiment(c);
        c.workers = 3;
        auto t2 = run_experiment(c);
        CHECK(to_csv(t1) == to_csv(t2));
    }
}

TEST_CASE("report emission") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "roughlab_report_test";
    fs::remove_all(dir);
    ToleranceProfile tol = ToleranceProfile::defaults();
    ResultTable good;
    good.title = "good";
    good.gate_bool("ok", "", true);
    ResultTable bad;
    bad.title = "bad";
    bad.gate_bool("nope", "", false);
    SUBCASE("all pass gives exit 0 and files exist") {
        CHECK(emit_report({good}, dir.string()) == 0);
        CHECK(fs::exists(dir / "report.md"));
        CHECK(fs::exists(dir / "report.csv"));
        CHECK(fs::exists(dir / "report.json"));
    }
    SUBCASE("mixed pass/fail gives exit 1") {
        CHECK(emit_report({good, bad}, dir.string()) == 1);
        std::ifstream in(dir / "report.md");
        std::stringstream ss;
        ss << in.rdbuf();
        CHECK(ss.str().find("FAIL") != std::string::npos);
    }
    (void)tol;
    fs::remove_all(dir);
}
