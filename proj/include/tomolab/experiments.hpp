#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tomolab/certificates.hpp"
#include "tomolab/linalg.hpp"
#include "tomolab/rng.hpp"

namespace tomolab {

enum class ExperimentKind {
    RateSweep,
    AdaptiveVsNonadaptive,
    MomentCheck,
    Tilt,
    VolumeRatio,
    Certificates,
};

std::string experiment_name(ExperimentKind kind);
ExperimentKind parse_experiment_name(const std::string& name);

// One batch run. Parsed from a flat JSON object; every field except
// "experiment" has an experiment-specific default (see default_config).
// n_grid must be ascending, all counts positive.
struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::RateSweep;
    int d = 8;
    int r = 0;  // 0 means "use d"
    std::vector<std::int64_t> n_grid;
    double gamma = 1.0 / 16.0;
    double epsilon = 0.05;
    double delta = 0.05;
    std::int64_t trials = 1;
    std::int64_t mc_samples = 100000;
    std::uint64_t seed = 1;
    std::string output = "results.csv";
};

ExperimentConfig default_config(ExperimentKind kind);
ExperimentConfig parse_config_json(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// One CSV row. Summary rows (fits, medians over trials) use trial = -1.
struct ResultRow {
    std::string experiment;
    int d = 0;
    double epsilon = 0.0;
    double c = 0.0;
    std::int64_t n = 0;
    std::int64_t trial = 0;
    std::string metric;
    double value = 0.0;
    std::optional<double> std_error;
    std::optional<double> bound;
    std::optional<bool> pass;
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    bool all_checks_pass = true;  // conjunction of every row's pass flag
};

// Runs the experiment on `threads` worker threads. Work is split at the
// (trial, grid-point) level; each cell draws from its own derived stream, so
// the output is identical for every thread count.
ExperimentResult run_experiment(const ExperimentConfig& config, int threads = 1);

std::string result_csv(const std::vector<ResultRow>& rows);

// Runs, writes CSV to config.output, prints a one-line status.
// Returns 0 when every asserted check passes, 2 otherwise.
int run_config_to_file(const ExperimentConfig& config, int threads);

// Ordinary least squares on (log x, log y). Requires at least two points,
// all positive. slope_ci is two standard errors (0 for a 2-point fit).
struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_ci = 0.0;
};

SlopeFit fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Per-metric slope fit over the per-n medians of a result CSV, with
// pass/fail against the known acceptance bands where one applies.
struct SummaryLine {
    std::string metric;
    int points = 0;
    SlopeFit fit;
    std::optional<double> band_lo;
    std::optional<double> band_hi;
    std::optional<bool> pass;
};

std::vector<SummaryLine> summarize_rows(const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_result_csv(const std::string& path);
std::string summary_table(const std::vector<SummaryLine>& lines);

// Random verifier instances for the certificates experiment.
struct HessianInstance {
    HermitianMatrix a;
    HermitianMatrix b;
    double h = 1e-3;
};

// commuting=true draws a diagonal pair (exact equality case); otherwise a
// rotated spectrum with condition number up to 10^3 and a dense direction.
HessianInstance random_hessian_instance(RngStream& rng, bool commuting);

struct CertificateInstance {
    RealMatrix m;
    RealMatrix n;
    RealMatrix e;
    double c1 = 0.25;
    double c2 = 1.0 / 64.0;
};

CertificateInstance random_certificate_instance(RngStream& rng);

// Entry point behind the tomolab binary: `run` and `summarize` subcommands.
int run_cli(int argc, const char* const* argv);

}  // namespace tomolab
