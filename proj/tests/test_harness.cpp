#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "harness.hpp"

using namespace swarmlink;

namespace {

ExperimentConfig tiny_config() {
    ExperimentConfig config;
    config.name = "tiny";
    config.n_robots = 8;
    config.n_targets = 1;
    config.target_radius = 3.0;
    config.max_steps = 4000;
    config.n_seeds = 1;
    return config;
}

}  // namespace

TEST_CASE("baseline equals the slowest straight-line travel time") {
    // Root plus a single robot: that robot is the worker, its slot is the
    // target itself, and no other slot can be filled.
    ExperimentConfig config = tiny_config();
    config.n_robots = 2;
    config.target_radius = 4.0;

    WorldState world = spawn_initial(config, 3);
    const RobotState* worker = nullptr;
    for (const auto& r : world.robots)
        if (r.role == Role::Worker) worker = &r;
    REQUIRE(worker != nullptr);

    double dist = distance(worker->pose.position(), world.targets[0].position.position());
    int expected = static_cast<int>(
        std::ceil(dist / (config.control.max_speed * config.control.dt)));
    CHECK(optimal_baseline(config, 3) == expected);

    // 4 m at 1 m/s and dt 0.1 is the canonical 40-step case; the spawn sits
    // within the cluster radius of the root so the bound brackets it.
    CHECK(optimal_baseline(config, 3) >= 40 - 18);
    CHECK(optimal_baseline(config, 3) <= 40 + 18);
}

TEST_CASE("baseline covers relay slots with the nearest unassigned robots") {
    ExperimentConfig config = tiny_config();
    config.n_robots = 8;
    config.target_radius = 3.0;  // two relay slots per chain at d_s = 1.4
    int steps = optimal_baseline(config, 0);
    CHECK(steps > 0);
    // No robot has to travel farther than one arena diagonal.
    CHECK(steps < static_cast<int>(10.0 * std::sqrt(2.0) / 0.1));
}

TEST_CASE("single-config sweep aggregates that run's values") {
    ExperimentConfig config = tiny_config();
    SweepResult sweep = run_sweep({config}, false);
    REQUIRE(sweep.summaries.size() == 1);
    const auto& s = sweep.summaries[0];
    CHECK(s.n_runs == 1);
    CHECK(s.runs.size() == 1);
    if (s.n_success == 1) {
        CHECK(s.median_completion == s.runs[0].completion_step);
        CHECK(s.min_completion == s.median_completion);
        CHECK(s.max_completion == s.median_completion);
        CHECK(s.success_rate == doctest::Approx(1.0));
        // The perfect-world bound must undercut the measured completion.
        CHECK(s.optimal_baseline_steps < s.median_completion);
    }
}

TEST_CASE("sweep writes per-run files and a summary") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "swarmlink_harness_test";
    fs::remove_all(dir);

    ExperimentConfig config = tiny_config();
    config.n_seeds = 2;
    config.output_dir = (dir / "runs").string();
    run_sweep({config}, true, dir.string());

    CHECK(fs::exists(dir / "runs" / "tiny_seed0.csv"));
    CHECK(fs::exists(dir / "runs" / "tiny_seed1.csv"));
    CHECK(fs::exists(dir / "runs" / "tiny_seed0.report.json"));
    CHECK(fs::exists(dir / "summary.csv"));

    std::ifstream summary(dir / "summary.csv");
    std::string header;
    std::getline(summary, header);
    CHECK(header.find("median_completion") != std::string::npos);
    int rows = 0;
    std::string line;
    while (std::getline(summary, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 1);
    fs::remove_all(dir);
}

TEST_CASE("nominal matrix mirrors the four scaling configurations") {
    auto matrix = nominal_matrix(tiny_config());
    REQUIRE(matrix.size() == 4);
    CHECK(matrix[0].n_robots == 20);
    CHECK(matrix[0].links_per_target == 1);
    CHECK(matrix[3].n_robots == 80);
    CHECK(matrix[3].links_per_target == 4);
    for (const auto& c : matrix) {
        CHECK(c.failure_probability == 0.0);
        CHECK(c.n_targets == 1);  // inherits the base; evaluation uses 4
    }
}

TEST_CASE("fault matrix spans both swarm sizes and p up to 0.7") {
    auto matrix = fault_matrix(tiny_config());
    REQUIRE(matrix.size() == 16);
    CHECK(matrix.front().n_robots == 40);
    CHECK(matrix.front().failure_probability == 0.0);
    CHECK(matrix.back().n_robots == 80);
    CHECK(matrix.back().failure_probability == doctest::Approx(0.7));
    for (const auto& c : matrix) CHECK(c.links_per_target == 2);
}

TEST_CASE("thread budget honors the environment cap") {
    setenv("SWARMLINK_THREADS", "2", 1);
    CHECK(sweep_thread_budget() <= 2);
    setenv("SWARMLINK_THREADS", "1", 1);
    CHECK(sweep_thread_budget() == 1);
    unsetenv("SWARMLINK_THREADS");
    CHECK(sweep_thread_budget() >= 1);
}
