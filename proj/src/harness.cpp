#include "roughlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "roughlab/dynamics.hpp"
#include "roughlab/kernels.hpp"
#include "roughlab/kpz.hpp"

namespace roughlab {

using nlohmann::json;

// ---------------------------------------------------------------------------
// tolerance profiles

ToleranceProfile ToleranceProfile::defaults() { return {}; }

ToleranceProfile ToleranceProfile::strict() {
    ToleranceProfile t;
    t.name = "strict";
    t.rel_floor = 0.05;
    t.rel_loose = 0.075;
    t.exact_tol = 1e-8;
    return t;
}

ToleranceProfile ToleranceProfile::by_name(const std::string& name) {
    if (name == "default") return defaults();
    if (name == "strict") return strict();
    throw std::invalid_argument("tolerance: unknown profile '" + name + "'");
}

// ---------------------------------------------------------------------------
// configuration

namespace {

const std::vector<std::string>& known_kinds() {
    static const std::vector<std::string> kinds = {
        "kernels", "constant-c", "reduce",    "limit-moment", "mc-moments",
        "rde",     "kpz-noise",  "kpz-solve", "oracles"};
    return kinds;
}

template <typename T>
void read_field(const json& j, const char* key, T& out, std::vector<std::string>& problems) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        problems.push_back(std::string(key) + ": " + e.what());
    }
}

void throw_if_problems(const std::vector<std::string>& problems) {
    if (problems.empty()) return;
    std::string msg = "invalid config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw std::invalid_argument(msg);
}

} // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
    std::vector<std::string> problems;
    ExperimentConfig c;
    read_field(j, "schema_version", c.schema_version, problems);
    read_field(j, "kind", c.kind, problems);
    read_field(j, "hurst", c.hurst, problems);
    read_field(j, "eps_ladder", c.eps_ladder, problems);
    read_field(j, "mollifier", c.mollifier, problems);
    read_field(j, "mollifier_alt", c.mollifier_alt, problems);
    read_field(j, "system", c.system, problems);
    read_field(j, "samples", c.samples, problems);
    read_field(j, "batch_size", c.batch_size, problems);
    read_field(j, "seed", c.seed, problems);
    read_field(j, "workers", c.workers, problems);
    read_field(j, "nx", c.nx, problems);
    read_field(j, "lambda", c.lambda, problems);
    read_field(j, "out_dir", c.out_dir, problems);
    read_field(j, "tolerance", c.tolerance, problems);
    for (const auto& [key, value] : j.items()) {
        static const std::vector<std::string> known = {
            "schema_version", "kind",    "hurst",   "eps_ladder", "mollifier",
            "mollifier_alt",  "system",  "samples", "batch_size", "seed",
            "workers",        "nx",      "lambda",  "out_dir",    "tolerance"};
        if (std::find(known.begin(), known.end(), key) == known.end())
            problems.push_back(key + ": unknown field");
    }
    throw_if_problems(problems);
    c.validate();
    return c;
}

std::string ExperimentConfig::to_json_text() const {
    json j;
    j["schema_version"] = schema_version;
    j["kind"] = kind;
    j["hurst"] = hurst;
    j["eps_ladder"] = eps_ladder;
    j["mollifier"] = mollifier;
    j["mollifier_alt"] = mollifier_alt;
    j["system"] = system;
    j["samples"] = samples;
    j["batch_size"] = batch_size;
    j["seed"] = seed;
    j["workers"] = workers;
    j["nx"] = nx;
    j["lambda"] = lambda;
    j["out_dir"] = out_dir;
    j["tolerance"] = tolerance;
    return j.dump(2);
}

void ExperimentConfig::validate() const {
    std::vector<std::string> problems;
    if (schema_version != 1)
        problems.push_back("schema_version: expected 1, got " + std::to_string(schema_version));
    const auto& kinds = known_kinds();
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
        problems.push_back("kind: unknown experiment '" + kind + "'");
    if (!(hurst > 0.0) || hurst > 0.25)
        problems.push_back("hurst: must lie in (0, 0.25]");
    for (std::size_t i = 0; i < eps_ladder.size(); ++i) {
        if (!(eps_ladder[i] > 0.0))
            problems.push_back("eps_ladder[" + std::to_string(i) + "]: must be positive");
        if (i > 0 && !(eps_ladder[i] < eps_ladder[i - 1]))
            problems.push_back("eps_ladder[" + std::to_string(i) + "]: must be sorted decreasing");
    }
    if (samples < 100) problems.push_back("samples: must be at least 100");
    if (batch_size < 1) problems.push_back("batch_size: must be positive");
    if (workers < 0) problems.push_back("workers: must be non-negative");
    if (nx < 64 || (nx & (nx - 1)) != 0)
        problems.push_back("nx: must be a power of two >= 64");
    if (!(lambda > 0.0) || lambda > 0.45)
        problems.push_back("lambda: must lie in (0, 0.45]");
    try {
        Mollifier::by_name(mollifier);
    } catch (const std::exception&) {
        problems.push_back("mollifier: unknown name '" + mollifier + "'");
    }
    try {
        Mollifier::by_name(mollifier_alt);
    } catch (const std::exception&) {
        problems.push_back("mollifier_alt: unknown name '" + mollifier_alt + "'");
    }
    try {
        VectorFieldSystem::by_name(system);
    } catch (const std::exception&) {
        problems.push_back("system: unknown name '" + system + "'");
    }
    try {
        ToleranceProfile::by_name(tolerance);
    } catch (const std::exception&) {
        problems.push_back("tolerance: unknown profile '" + tolerance + "'");
    }
    throw_if_problems(problems);
}

// ---------------------------------------------------------------------------
// result tables

std::string to_string(PredictionBasis b) {
    switch (b) {
        case PredictionBasis::NONE: return "none";
        case PredictionBasis::CLOSED_FORM: return "closed-form";
        case PredictionBasis::EXACT: return "exact";
        case PredictionBasis::ORACLE: return "oracle";
    }
    return "?";
}

bool ResultTable::all_pass() const {
    for (const auto& r : rows)
        if (!r.pass) return false;
    return true;
}

ResultRow& ResultTable::add(ResultRow row) {
    rows.push_back(std::move(row));
    return rows.back();
}

ResultRow& ResultTable::gate_stat(std::string id, std::string params, double estimate,
                                  double stderr_est, double prediction,
                                  PredictionBasis basis, const ToleranceProfile& tol,
                                  bool loose) {
    ResultRow r;
    r.id = std::move(id);
    r.params = std::move(params);
    r.estimate = estimate;
    r.stderr_est = stderr_est;
    r.has_prediction = true;
    r.prediction = prediction;
    r.basis = basis;
    double floor = (loose ? tol.rel_loose : tol.rel_floor) * std::abs(prediction);
    r.pass = std::abs(estimate - prediction) <=
             std::max(tol.sigma_gate * stderr_est, floor);
    return add(std::move(r));
}

ResultRow& ResultTable::gate_exact(std::string id, std::string params, double value,
                                   double prediction, PredictionBasis basis,
                                   const ToleranceProfile& tol) {
    ResultRow r;
    r.id = std::move(id);
    r.params = std::move(params);
    r.estimate = value;
    r.has_prediction = true;
    r.prediction = prediction;
    r.basis = basis;
    r.pass = std::abs(value - prediction) <= tol.exact_tol * std::max(1.0, std::abs(prediction));
    return add(std::move(r));
}

ResultRow& ResultTable::gate_bool(std::string id, std::string params, bool ok,
                                  std::string note) {
    ResultRow r;
    r.id = std::move(id);
    r.params = std::move(params);
    r.estimate = ok ? 1.0 : 0.0;
    r.pass = ok;
    r.note = std::move(note);
    return add(std::move(r));
}

// ---------------------------------------------------------------------------
// deterministic worker pool

namespace {

int resolve_workers(int workers) {
    if (workers > 0) return workers;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

template <typename T>
std::vector<T> pooled_map(long long n, int workers, const std::function<T(long long)>& fn) {
    std::vector<T> out(static_cast<std::size_t>(n));
    int w = std::min<long long>(resolve_workers(workers), std::max<long long>(1, n));
    if (w <= 1) {
        for (long long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = fn(i);
        return out;
    }
    std::atomic<long long> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            long long i = next.fetch_add(1);
            if (i >= n) return;
            try {
                out[static_cast<std::size_t>(i)] = fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(w));
    for (int t = 0; t < w; ++t) threads.emplace_back(body);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

} // namespace

std::vector<double> parallel_map(long long n, int workers,
                                 const std::function<double(long long)>& fn) {
    return pooled_map<double>(n, workers, fn);
}

std::vector<std::vector<double>>
parallel_map_vec(long long n, int workers,
                 const std::function<std::vector<double>(long long)>& fn) {
    return pooled_map<std::vector<double>>(n, workers, fn);
}

BatchStats batch_stats(const std::vector<double>& values, int batches) {
    BatchStats s;
    s.n = static_cast<long long>(values.size());
    if (values.empty()) return s;
    batches = std::max(1, std::min<int>(batches, static_cast<int>(values.size())));
    std::vector<double> means(batches, 0.0);
    std::vector<long long> counts(batches, 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        int b = static_cast<int>(i * static_cast<std::size_t>(batches) / values.size());
        means[b] += values[i];
        ++counts[b];
    }
    double total = 0.0;
    for (int b = 0; b < batches; ++b) {
        means[b] /= static_cast<double>(counts[b]);
        total += means[b];
    }
    s.mean = total / batches;
    if (batches > 1) {
        double var = 0.0;
        for (int b = 0; b < batches; ++b) var += (means[b] - s.mean) * (means[b] - s.mean);
        var /= batches - 1;
        s.se = std::sqrt(var / batches);
    }
    return s;
}

// ---------------------------------------------------------------------------
// report emission

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

} // namespace

std::string to_csv(const ResultTable& t) {
    std::string out = "id,params,estimate,stderr,prediction,basis,pass\n";
    for (const auto& r : t.rows) {
        out += csv_escape(r.id) + "," + csv_escape(r.params) + "," + fmt(r.estimate) + "," +
               fmt(r.stderr_est) + "," + (r.has_prediction ? fmt(r.prediction) : "") + "," +
               to_string(r.basis) + "," + (r.pass ? "pass" : "FAIL") + "\n";
    }
    return out;
}

std::string to_markdown(const ResultTable& t) {
    std::string out = "## " + t.title + "\n\n";
    out += "| id | params | estimate | stderr | prediction | basis | result |\n";
    out += "|---|---|---|---|---|---|---|\n";
    for (const auto& r : t.rows) {
        out += "| " + r.id + " | " + r.params + " | " + fmt(r.estimate) + " | " +
               fmt(r.stderr_est) + " | " + (r.has_prediction ? fmt(r.prediction) : "") +
               " | " + to_string(r.basis) + " | " + (r.pass ? "pass" : "**FAIL**") + " |\n";
    }
    if (!t.rows.empty()) {
        int fails = 0;
        for (const auto& r : t.rows) fails += r.pass ? 0 : 1;
        out += "\n" + std::to_string(t.rows.size() - fails) + "/" +
               std::to_string(t.rows.size()) + " rows pass.\n";
    }
    return out;
}

std::string to_json_text(const ResultTable& t) {
    json j;
    j["title"] = t.title;
    j["rows"] = json::array();
    for (const auto& r : t.rows) {
        json row;
        row["id"] = r.id;
        row["params"] = r.params;
        row["estimate"] = r.estimate;
        row["stderr"] = r.stderr_est;
        if (r.has_prediction) row["prediction"] = r.prediction;
        row["basis"] = to_string(r.basis);
        row["pass"] = r.pass;
        if (!r.note.empty()) row["note"] = r.note;
        j["rows"].push_back(std::move(row));
    }
    j["all_pass"] = t.all_pass();
    return j.dump(2);
}

int emit_report(const std::vector<ResultTable>& tables, const std::string& out_dir,
                const std::string& stem) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::string md = "# Experiment report\n\n";
    std::string csv = "table,id,params,estimate,stderr,prediction,basis,pass\n";
    json sidecar = json::array();
    bool ok = true;
    for (const auto& t : tables) {
        md += to_markdown(t) + "\n";
        for (const auto& r : t.rows) {
            csv += csv_escape(t.title) + "," + csv_escape(r.id) + "," + csv_escape(r.params) +
                   "," + fmt(r.estimate) + "," + fmt(r.stderr_est) + "," +
                   (r.has_prediction ? fmt(r.prediction) : "") + "," + to_string(r.basis) +
                   "," + (r.pass ? "pass" : "FAIL") + "\n";
        }
        sidecar.push_back(json::parse(to_json_text(t)));
        ok = ok && t.all_pass();
    }
    md += ok ? "All gates pass.\n" : "Some gates FAIL.\n";
    std::ofstream(fs::path(out_dir) / (stem + ".md")) << md;
    std::ofstream(fs::path(out_dir) / (stem + ".csv")) << csv;
    std::ofstream(fs::path(out_dir) / (stem + ".json")) << sidecar.dump(2) << "\n";
    return ok ? 0 : 1;
}

} // namespace roughlab
