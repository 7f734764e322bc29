#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "connectivity.hpp"
#include "controllers.hpp"
#include "params.hpp"
#include "protocol.hpp"
#include "robot.hpp"

namespace swarmlink {

// Fate of every robot, drawn once at run start so runs replay exactly. A
// fated robot dies at its fail step only if it then holds an eligible role;
// the root is never eligible.
struct FaultFate {
    bool fails = false;
    int fail_step = -1;
};

struct FaultPlan {
    double failure_probability = 0.0;
    std::vector<Role> eligible_roles = {Role::Networker, Role::Worker};
    std::vector<FaultFate> fates;

    static FaultPlan draw(int n_robots, double probability, int max_steps, uint64_t seed);
    bool eligible(Role role) const;
};

struct WorldState {
    int step = 0;
    std::vector<RobotState> robots;
    std::vector<Target> targets;
    std::vector<Obstacle> obstacles;  // static obstacles only; dead bodies are added per step
    uint64_t rng_seed = 0;
    std::vector<Envelope> pending_envelopes;
};

struct MetricsRecord {
    int step = 0;
    double lambda2 = 0.0;
    int alive = 0;
    int n_free = 0;
    int n_networker = 0;
    int n_worker = 0;
    int max_bw = 0;
    int median_bw = 0;
    int min_bw = 0;
    int targets_reached = 0;
    int total_links = 0;
};

struct TerminationReport {
    bool success = false;
    int completion_step = -1;
    int steps_executed = 0;
    std::string reason;
    std::vector<std::pair<int, int>> first_reach_step;      // target id -> step, -1 if never
    std::vector<std::pair<int, int>> robots_per_chain;      // chain id -> alive networkers at end
    int dead_robots = 0;
    int resource_exhausted_events = 0;
};

struct RunResult {
    std::vector<MetricsRecord> records;
    TerminationReport report;
};

// Deterministic discrete-time world: same (config, seed) gives bit-identical
// trajectories and metric streams.
class Simulation {
  public:
    Simulation(const ExperimentConfig& config, uint64_t seed);

    // Scenario entry: adopt a caller-built world (exact poses, roles, chain
    // bookkeeping) instead of the random spawn.
    Simulation(const ExperimentConfig& config, WorldState world);

    // One control step: deliver -> control -> integrate -> collide -> inject
    // faults -> collect broadcasts.
    void step();

    // Steps until success or max_steps; returns the recorded stream.
    RunResult run();

    bool succeeded() const;
    const WorldState& world() const { return world_; }
    const ExperimentConfig& config() const { return config_; }
    const std::vector<ChainDef>& chains() const { return chains_; }
    const std::vector<int>& bytes_sent_last_step() const { return bytes_sent_; }

    MetricsRecord record_metrics() const;
    TargetLinkReport link_report() const;

    // Test hook: robots listed here keep their pose (their controller still
    // runs and broadcasts).
    void pin_robot(int id) { pinned_.push_back(id); }
    void kill_robot(int id);
    RobotState& mutable_robot(int id) { return world_.robots.at(id); }

  private:
    void deliver();
    void resolve_collisions();
    void apply_faults();
    void collect_outboxes();
    ControlContext make_context(int robot_id) const;

    ExperimentConfig config_;
    WorldState world_;
    FaultPlan faults_;
    std::vector<ChainDef> chains_;
    std::vector<std::vector<Envelope>> inboxes_;
    std::vector<int> bytes_sent_;
    std::vector<Obstacle> step_obstacles_;
    std::vector<int> pinned_;
    Vec2 root_home_;
};

// Root at the arena center, the rest rejection-sampled around it into a
// connected cluster; workers pre-assigned to the nearest free robot per
// target. Throws after 10000 failed placements.
WorldState spawn_initial(const ExperimentConfig& config, uint64_t seed);

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRecord& record);
void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records);
void write_report_json(const std::string& path, const TerminationReport& report);
std::string report_to_json(const TerminationReport& report);

}  // namespace swarmlink
