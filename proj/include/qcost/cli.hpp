#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qcost/plan.hpp"

namespace qcost::cli {

// Resolved run configuration: config-file values overridden by flags.
// Paths are validated by the individual commands.
struct RunConfig {
    // I/O
    std::string plans_path;
    std::string models_path;
    std::string feedback_path;
    std::string estimates_path;  // analyze: reuse precomputed estimates
    std::string out_dir = ".";

    // shared knobs
    std::vector<std::string> backbone;  // kind names; empty = default backbone
    int threshold = 10;                 // sufficiency threshold, records per kind
    double min_act_cost = 1.0;          // pivot eligibility floor, ms
    double tau = 0.2;                   // estimated-improvement gate
    std::optional<std::uint64_t> seed;  // required by stochastic commands
    double eta_prime_inf = 1e12;        // numerical stand-in for eta' -> inf

    // generate
    int n_queries = 100;
    int leaves_per_plan = 3;
    int internals_per_plan = 2;
    double card_lo = 10.0;
    double card_hi = 1e5;
    double noise_sd = 0.0;

    // tune
    int n_configs = 5;
    double regression_cut = -0.2;
};

BackboneSet backbone_from(const RunConfig& config);

/// Applies key/value pairs from a JSON config file onto `config`.
void load_config_file(const std::string& path, RunConfig& config);

// Subcommand entry points. Outputs are written atomically (temp file +
// rename); any Error propagates to the caller for reporting.
int cmd_generate(const RunConfig& config);
int cmd_train(const RunConfig& config);
int cmd_estimate(const RunConfig& config);
int cmd_analyze(const RunConfig& config);
int cmd_tune(const RunConfig& config);

/// Full argv entry point used by the binary: parses flags (and --config),
/// dispatches, and turns errors into a machine-readable stderr line plus a
/// nonzero exit code.
int run(int argc, const char* const* argv);

}  // namespace qcost::cli
