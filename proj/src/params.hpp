#pragma once

#include <string>
#include <vector>

#include "geometry.hpp"

namespace swarmlink {

// A distant location one worker robot must visit. Orientation is carried for
// completeness but no control law consumes it.
struct Target {
    int id = 0;
    Pose2D position;
    int required_links = 1;  // Nt_i
};

struct Obstacle {
    Vec2 position;
    double radius = 0.1;
};

// Control-law and communication constants. Table-driven defaults match the
// reference evaluation setup; the kinematic tracking gains and timing knobs
// without published values have documented defaults.
struct ControlParams {
    double comm_range = 2.0;          // R: broadcast/link radius, meters
    double dt = 0.1;                  // control step, seconds
    double move_threshold = 0.3;      // d_delta: target considered reached inside this
    double spring_gain = 0.8;         // k
    double damping_coeff = 1.0;       // c: kept for completeness, unused by the velocity law
    double safe_distance = 1.4;       // d_s: spring rest length
    double critical_distance = 1.7;   // d_c: emergency threshold
    double lj_epsilon = 60.0;         // Lennard-Jones strength
    double lj_delta = 0.5;            // Lennard-Jones rest distance, meters
    double target_gain = 0.5;         // k_t
    double obstacle_gain = 0.8;
    double max_speed = 0.10;          // clamp on every commanded velocity, m/s
                                      // (KheperaIV-class platform speed)
    int failure_timeout_steps = 20;   // silence longer than this declares a neighbor dead
    double heading_gain = 4.0;        // P gain of the velocity-tracking layer
    double max_turn_rate = 2.0 * M_PI;  // rad/s
    double seek_speed_factor = 0.2;   // cruise fraction of max_speed for repair/dismantle walks
};

// One experiment: N robots, a ring of targets, a failure rate, and seeds.
struct ExperimentConfig {
    std::string name = "run";
    int n_robots = 20;
    int n_targets = 4;
    int links_per_target = 1;
    double target_radius = 4.0;     // targets sit on this circle around the root
    double arena_half_extent = 5.0; // square arena [-e, e]^2
    double failure_probability = 0.0;
    int n_seeds = 10;
    int max_steps = 5000;
    int sample_every = 10;
    std::string output_dir = ".";
    ControlParams control;
    std::vector<Obstacle> obstacles;

    // Targets implied by the ring layout, ids 0..n_targets-1.
    std::vector<Target> make_targets() const;
};

// Throws std::invalid_argument describing the first violated constraint.
void validate_params(const ControlParams& params);
void validate_config(const ExperimentConfig& config);

// Explicit-target variant used by scenario tests; checks invariants plus the
// robot-count lower bound (root + one worker per target).
void validate_setup(const ControlParams& params, int n_robots, const std::vector<Target>& targets);

// Flat "key = value" text format, one key per line, '#' comments.
ExperimentConfig parse_config_text(const std::string& text);
std::string config_to_text(const ExperimentConfig& config);
ExperimentConfig load_config_file(const std::string& path);
void save_config_file(const ExperimentConfig& config, const std::string& path);

// Sets a single field by its config-file key, parsing the value. Throws on
// unknown key or malformed value. Backs both CLI overrides and the C API.
void config_set_field(ExperimentConfig& config, const std::string& key, const std::string& value);
std::string config_get_field(const ExperimentConfig& config, const std::string& key);

}  // namespace swarmlink
