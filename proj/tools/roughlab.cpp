#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "roughlab/harness.hpp"

namespace {

roughlab::ResultTable table_from_json(const nlohmann::json& j) {
    roughlab::ResultTable t;
    t.title = j.value("title", "table");
    for (const auto& row : j.at("rows")) {
        roughlab::ResultRow r;
        r.id = row.value("id", "");
        r.params = row.value("params", "");
        r.estimate = row.value("estimate", 0.0);
        r.stderr_est = row.value("stderr", 0.0);
        if (row.contains("prediction")) {
            r.has_prediction = true;
            r.prediction = row.at("prediction").get<double>();
        }
        std::string basis = row.value("basis", "none");
        if (basis == "closed-form") r.basis = roughlab::PredictionBasis::CLOSED_FORM;
        else if (basis == "exact") r.basis = roughlab::PredictionBasis::EXACT;
        else if (basis == "oracle") r.basis = roughlab::PredictionBasis::ORACLE;
        r.pass = row.value("pass", false);
        r.note = row.value("note", "");
        t.rows.push_back(std::move(r));
    }
    return t;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"rough-path and KPZ noise experiment harness"};
    app.require_subcommand(1);

    roughlab::ExperimentConfig cfg;
    std::string config_path;
    app.add_option("--seed", cfg.seed, "master RNG seed");
    app.add_option("--workers", cfg.workers, "worker threads (0: hardware)");
    app.add_option("--out-dir", cfg.out_dir, "directory for CSV/JSON/markdown output");
    app.add_option("--tolerance", cfg.tolerance, "tolerance profile: default or strict");
    app.add_option("--config", config_path, "JSON config file (flags override it)");

    struct Sub {
        const char* name;
        const char* help;
    };
    const std::vector<Sub> kinds = {
        {"kernels", "kernel envelope and closed-form diagnostics"},
        {"constant-c", "limit of the odd-kernel L2 mass, two mollifiers"},
        {"reduce", "symbolic reduction identities and invariance checks"},
        {"limit-moment", "closed-form limit moments and cumulants"},
        {"mc-moments", "Monte Carlo iterated-integral moments"},
        {"rde", "driven systems versus the bracket diffusion"},
        {"kpz-noise", "stationary KPZ noise statistics"},
        {"kpz-solve", "KPZ integrators and the change of variables"},
        {"oracles", "brute-force oracle suite"},
    };
    for (const auto& k : kinds) {
        auto* sub = app.add_subcommand(k.name, k.help);
        sub->add_option("--hurst", cfg.hurst, "Hurst parameter");
        sub->add_option("--eps", cfg.eps_ladder, "eps ladder, sorted decreasing");
        sub->add_option("--mollifier", cfg.mollifier, "mollifier name");
        sub->add_option("--mollifier-alt", cfg.mollifier_alt, "second mollifier name");
        sub->add_option("--system", cfg.system, "vector-field system name");
        sub->add_option("--samples", cfg.samples, "Monte Carlo samples");
        sub->add_option("--batch-size", cfg.batch_size, "samples per stderr batch");
        sub->add_option("--nx", cfg.nx, "torus points");
        sub->add_option("--lambda", cfg.lambda, "test-function scale");
    }
    auto* report = app.add_subcommand("report", "merge table JSON files into one report");
    std::vector<std::string> report_inputs;
    report->add_option("files", report_inputs, "table JSON files")->required();

    CLI11_PARSE(app, argc, argv);
    auto* sub = app.get_subcommands().front();

    try {
        if (sub == report) {
            std::vector<roughlab::ResultTable> tables;
            for (const auto& path : report_inputs) {
                auto j = nlohmann::json::parse(slurp(path));
                if (j.is_array())
                    for (const auto& item : j) tables.push_back(table_from_json(item));
                else
                    tables.push_back(table_from_json(j));
            }
            std::string dir = cfg.out_dir.empty() ? "." : cfg.out_dir;
            int rc = roughlab::emit_report(tables, dir);
            for (const auto& t : tables) std::cout << roughlab::to_markdown(t) << "\n";
            return rc;
        }

        if (!config_path.empty()) {
            auto loaded = roughlab::ExperimentConfig::from_json_text(slurp(config_path));
            loaded.kind = sub->get_name();
            // explicit flags take precedence over the file
            loaded.seed = app.count("--seed") ? cfg.seed : loaded.seed;
            loaded.workers = app.count("--workers") ? cfg.workers : loaded.workers;
            loaded.out_dir = app.count("--out-dir") ? cfg.out_dir : loaded.out_dir;
            loaded.tolerance = app.count("--tolerance") ? cfg.tolerance : loaded.tolerance;
            if (sub->count("--hurst")) loaded.hurst = cfg.hurst;
            if (sub->count("--eps")) loaded.eps_ladder = cfg.eps_ladder;
            if (sub->count("--mollifier")) loaded.mollifier = cfg.mollifier;
            if (sub->count("--mollifier-alt")) loaded.mollifier_alt = cfg.mollifier_alt;
            if (sub->count("--system")) loaded.system = cfg.system;
            if (sub->count("--samples")) loaded.samples = cfg.samples;
            if (sub->count("--batch-size")) loaded.batch_size = cfg.batch_size;
            if (sub->count("--nx")) loaded.nx = cfg.nx;
            if (sub->count("--lambda")) loaded.lambda = cfg.lambda;
            cfg = loaded;
        } else {
            cfg.kind = sub->get_name();
        }
        cfg.validate();

        roughlab::ResultTable table = roughlab::run_experiment(cfg);
        std::cout << roughlab::to_markdown(table) << "\n";
        if (!cfg.out_dir.empty()) {
            namespace fs = std::filesystem;
            fs::create_directories(cfg.out_dir);
            std::ofstream(fs::path(cfg.out_dir) / (cfg.kind + ".csv"))
                << roughlab::to_csv(table);
            std::ofstream(fs::path(cfg.out_dir) / (cfg.kind + ".json"))
                << roughlab::to_json_text(table) << "\n";
        }
        return table.all_pass() ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
