#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace roughlab {

// Thresholds used by every pass/fail gate; kept in one place so experiments
// and reports agree on what "pass" means.
struct ToleranceProfile {
    std::string name = "default";
    double sigma_gate = 3.0;   // |estimate - prediction| <= sigma_gate * stderr ...
    double rel_floor = 0.10;   // ... or <= rel_floor * |prediction|
    double rel_loose = 0.15;   // floor for the noisier nonlinear experiments
    double exact_tol = 1e-6;   // relative tolerance of exact identities

    static ToleranceProfile defaults();
    static ToleranceProfile strict(); // halved floors, tighter exact tolerance
    static ToleranceProfile by_name(const std::string& name);
};

// One experiment request.  Serialised as versioned JSON; `validate` reports
// every violation with the offending field path.
struct ExperimentConfig {
    int schema_version = 1;
    std::string kind;                  // subcommand name, e.g. "constant-c"
    double hurst = 0.1;
    std::vector<double> eps_ladder;    // sorted decreasing
    std::string mollifier = "bump";
    std::string mollifier_alt = "poly_bump";
    std::string system = "heisenberg"; // vector-field system for "rde"
    long long samples = 2000;
    int batch_size = 100;
    std::uint64_t seed = 2026;
    int workers = 0;                   // 0: hardware concurrency
    int nx = 1024;                     // torus points for the kpz kinds
    double lambda = 0.125;             // test-function scale for kpz-noise
    std::string out_dir;               // empty: no files written
    std::string tolerance = "default";

    static ExperimentConfig from_json_text(const std::string& text);
    std::string to_json_text() const;
    // throws std::invalid_argument listing "field: problem" lines
    void validate() const;
};

// Where a row's prediction comes from: a closed form taken from the
// literature, an identity that must hold exactly, or a value frozen from a
// brute-force oracle computation.
enum class PredictionBasis { NONE, CLOSED_FORM, EXACT, ORACLE };

std::string to_string(PredictionBasis b);

struct ResultRow {
    std::string id;         // stable quantity identifier
    std::string params;     // human-readable parameter summary
    double estimate = 0.0;
    double stderr_est = 0.0; // 0 for deterministic quantities
    bool has_prediction = false;
    double prediction = 0.0;
    PredictionBasis basis = PredictionBasis::NONE;
    bool pass = true;
    std::string note;
};

struct ResultTable {
    std::string title;
    std::vector<ResultRow> rows;

    bool all_pass() const;
    // gate helpers: mark pass from the tolerance profile only
    ResultRow& add(ResultRow row);
    ResultRow& gate_stat(std::string id, std::string params, double estimate,
                         double stderr_est, double prediction, PredictionBasis basis,
                         const ToleranceProfile& tol, bool loose = false);
    ResultRow& gate_exact(std::string id, std::string params, double value,
                          double prediction, PredictionBasis basis,
                          const ToleranceProfile& tol);
    ResultRow& gate_bool(std::string id, std::string params, bool ok,
                         std::string note = "");
};

// Deterministic parallel map over sample indices: fn(i) runs on a pool of
// `workers` threads and results are merged in index order, so the outcome is
// identical for every worker count.
std::vector<double> parallel_map(long long n, int workers,
                                 const std::function<double(long long)>& fn);
std::vector<std::vector<double>>
parallel_map_vec(long long n, int workers,
                 const std::function<std::vector<double>(long long)>& fn);

// batch-mean statistics over per-sample values
struct BatchStats {
    double mean = 0.0;
    double se = 0.0;
    long long n = 0;
};
BatchStats batch_stats(const std::vector<double>& values, int batches);

// Run one experiment; deterministic given (config, seed) for any worker count.
ResultTable run_experiment(const ExperimentConfig& cfg);

// Brute-force oracle suite: recomputes the frozen reference values from
// first principles and compares them with the implementing operations.
ResultTable run_oracles(std::uint64_t seed = 2026, int workers = 0);

// Report emission: markdown summary, CSV, and a JSON sidecar per table in
// `out_dir` (created if needed).  Returns 0 iff every row passes.
int emit_report(const std::vector<ResultTable>& tables, const std::string& out_dir,
                const std::string& stem = "report");

std::string to_csv(const ResultTable& t);
std::string to_markdown(const ResultTable& t);
std::string to_json_text(const ResultTable& t);

} // namespace roughlab
