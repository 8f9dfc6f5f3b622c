// Monte Carlo campaigns with paired measurement streams across filters.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "polyfilter/scenario.hpp"

namespace polyfilter {

/// One filter on one truth trajectory. Steps are 1-based in the emitted data;
/// index k here holds the estimate after measurement k + 1.
struct FilterRun {
    Eigen::MatrixXd errors;      // steps x n_x, estimate minus truth (NaN after a failure)
    Eigen::MatrixXd group_vars;  // steps x groups, trace of each covariance block
    bool failed = false;         // a filter exception ended the run
    bool diverged = false;       // primary error exceeded the divergence threshold
    int diverged_step = -1;      // first offending step (1-based)
    std::string failure;
    std::uint64_t stream_digest = 0;  // FNV-1a of the measurements consumed
};

struct MCResult {
    std::string scenario;
    std::vector<std::string> filters;
    std::vector<StateGroup> groups;
    std::vector<int> primary;
    int runs = 0;
    int steps = 0;
    int state_dim = 0;
    double dt = 0.0;
    std::uint64_t base_seed = 0;
    std::uint64_t config_hash = 0;
    bool exclude_diverged = true;
    std::vector<std::vector<FilterRun>> data;  // [filter][run]

    /// Runs excluded from ensemble statistics for a filter.
    bool excluded(std::size_t filter, int run) const;
};

/// Runs every filter of the scenario on mc_runs truth trajectories, in parallel over runs.
/// Filter exceptions are recorded per run; the result does not depend on the thread count.
MCResult run_campaign(const Scenario& scenario);

/// Truth trajectory and measurements of one run (exposed for tests).
struct TruthRun {
    Eigen::MatrixXd states;        // (steps + 1) x n_x, row 0 is the initial truth
    Eigen::MatrixXd measurements;  // steps x m
};
TruthRun simulate_truth(const Scenario& scenario, int run);

} // namespace polyfilter
