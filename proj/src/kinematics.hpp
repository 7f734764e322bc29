#pragma once

#include "geometry.hpp"
#include "params.hpp"

namespace swarmlink {

// Planar velocity requested by a control law; clamped to max_speed before use.
struct VelocityCommand {
    Vec2 desired_velocity;
};

// Unicycle actuation: forward speed plus turn rate.
struct UnicycleInput {
    double linear_speed = 0.0;   // >= 0, robots do not reverse
    double angular_rate = 0.0;   // |rate| <= max_turn_rate
};

// P control on heading with forward speed gated by cos(heading error), so the
// robot turns in place rather than driving sideways. Near-zero commands stop
// the robot. Throws std::invalid_argument on non-finite input.
UnicycleInput track_velocity(const Pose2D& pose, const VelocityCommand& cmd,
                             const ControlParams& params);

// Explicit Euler step of the differential-drive model.
Pose2D integrate(const Pose2D& pose, const UnicycleInput& input, double dt);

}  // namespace swarmlink
