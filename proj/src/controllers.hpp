#pragma once

#include <vector>

#include "params.hpp"
#include "protocol.hpp"
#include "robot.hpp"

namespace swarmlink {

// One communication chain as configured: chain ids are assigned sequentially
// per target, one per required link.
struct ChainDef {
    uint8_t chain_id = kNoChain;
    int target_id = -1;
};

// Everything a controller may see in one step: mission configuration plus the
// previous step's envelopes. Controllers never read other robots' live state.
struct ControlContext {
    int now = 0;
    const ControlParams* params = nullptr;
    const std::vector<Target>* targets = nullptr;
    const std::vector<ChainDef>* chains = nullptr;
    Vec2 root_home;
    int root_id = 0;
    const std::vector<Obstacle>* obstacles = nullptr;
    const std::vector<Envelope>* inbox = nullptr;
};

// Spring law: attractive beyond the rest length, repulsive inside it.
// dir_to_neighbor must be the unit vector from self toward the neighbor.
Vec2 spring_velocity(double dist, const Vec2& dir_to_neighbor, double gain, double rest_length);

// Deterministic push direction for coincident robots.
Vec2 collision_direction(int self_id);

// Lennard-Jones interaction with a root/free neighbor; freezes at rest
// distance lj_delta, attracts beyond it, repels inside it.
Vec2 lj_velocity(const Vec2& self_pos, const Vec2& neighbor_pos, double epsilon, double delta);

// Repulsive potential from obstacles within the influence distance; a robot
// inside an obstacle gets a full-speed push outward.
Vec2 obstacle_avoidance(const Pose2D& pose, const std::vector<Obstacle>& obstacles, double gain,
                        double comm_range, double max_speed);

// Eq. 11 gate: strict inequality at the boundary.
bool worker_gate_open(const std::vector<double>& parent_distances, double safe_distance);

// Root's dismantle choice: unfinished chain with the fewest members, ties to
// the lowest chain id; -1 when fewer than two candidates exist.
int choose_dismantle_chain(const std::map<uint8_t, RootChainView>& chains, int now,
                           int need_window);

// Runs one robot's per-step decision logic: consumes ctx.inbox, updates the
// robot's bookkeeping, and fills commanded_velocity and outbox.
void run_controller(RobotState& self, const ControlContext& ctx);

}  // namespace swarmlink
