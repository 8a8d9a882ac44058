#pragma once

#include "dprobe/config.hpp"
#include "dprobe/reconstruct.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dprobe {

/// Everything a run needs: scenario, needles, grid, ladders and output switches.
struct ExperimentPlan {
    std::string name = "plan";
    Scenario scenario;
    std::vector<Needle> needles;
    int n = 32;
    int steps = 128;
    std::vector<double> tau{8.0, 12.0, 16.0, 20.0};
    std::vector<double> mu{2.0};
    std::vector<double> theta{0.5};
    std::vector<double> t_prime{1.0};
    /// Empty: derived from ground truth with suggest_delta.
    std::optional<double> delta;
    bool tstar = false;
    std::vector<double> theta_fractions{0.25, 0.5, 0.75, 0.95};
    FluxSource source = FluxSource::Limit;
    bool volume = true;
    bool snapshots = false;
    std::uint64_t seed = 1;
    int workers = 1;
};

ExperimentPlan parse_plan(const KeyValueConfig& cfg);
/// Throws ConfigError (with line and key) on malformed input.
ExperimentPlan load_plan(const std::string& path);
/// Canonical text of the plan; the plan hash is its FNV-1a digest.
std::string describe(const ExperimentPlan& plan);
std::uint64_t plan_hash(const ExperimentPlan& plan);

/// Every invariant violation (empty when the plan is runnable). Never solves.
std::vector<std::string> validate_plan(const ExperimentPlan& plan);

struct RunResult {
    /// 0 ok, 1 invalid plan, 3 solver failure (diagnostics.json written).
    int exit_code = 0;
    std::vector<std::string> files;
    std::vector<std::string> messages;
};

/// Solve -> indicate -> reconstruct for every (needle, tau, mu, theta, T') cell, then
/// writes indicators.csv, distances.csv, reconstruction.json, bounds.json and plots/.
RunResult run_plan(const ExperimentPlan& plan, const std::string& out_dir);

/// Rebuilds the SVG plots from the data files of a finished run.
std::vector<std::string> render_plots(const std::string& out_dir);

/// Plain-text summary of a finished run.
std::string run_report(const std::string& out_dir);

} // namespace dprobe
