#pragma once

#include <string>
#include <vector>

#include "engine.hpp"
#include "params.hpp"

namespace swarmlink {

struct RunStats {
    uint64_t seed = 0;
    bool success = false;
    int completion_step = -1;
    double min_sampled_lambda2 = 0.0;
    double final_lambda2 = 0.0;
    int peak_bw = 0;             // max over sampled steps of the busiest robot
    int median_busiest_bw = 0;   // median over sampled steps of max_bw
    int median_robot_bw = 0;     // median over sampled steps of median_bw
    bool links_satisfied = false;
    int dead_robots = 0;
};

struct ConfigSummary {
    std::string name;
    int n_robots = 0;
    int links_per_target = 0;
    double failure_probability = 0.0;
    int n_runs = 0;
    int n_success = 0;
    double success_rate = 0.0;
    int median_completion = -1;  // successful runs only
    int min_completion = -1;
    int max_completion = -1;
    int optimal_baseline_steps = -1;  // median over seeds
    int peak_bw = 0;
    int median_busiest_bw = 0;
    double median_final_lambda2 = 0.0;
    std::vector<RunStats> runs;
};

struct SweepResult {
    std::vector<ConfigSummary> summaries;
};

// Straight-line lower bound: time for the slowest robot to drive from its
// spawn position to its slot in the final chain layout (relays every d_s
// along each root-to-target ray), ignoring control and collisions.
int optimal_baseline(const ExperimentConfig& config, uint64_t seed);

RunStats summarize_run(uint64_t seed, const RunResult& result, const ExperimentConfig& config);

// Runs seeds 0..n_seeds-1 for every config. Runs execute in parallel
// (SWARMLINK_THREADS caps the pool); aggregation order is deterministic.
// When write_files is set, per-run CSVs plus reports land in each config's
// output_dir and a summary.csv in summary_dir.
SweepResult run_sweep(const std::vector<ExperimentConfig>& matrix, bool write_files,
                      const std::string& summary_dir = ".");

std::string summary_csv(const SweepResult& sweep);

// The two matrices used in the evaluation: the nominal scaling ladder and the
// failure-probability sweep.
std::vector<ExperimentConfig> nominal_matrix(const ExperimentConfig& base);
std::vector<ExperimentConfig> fault_matrix(const ExperimentConfig& base);

int sweep_thread_budget();

}  // namespace swarmlink
