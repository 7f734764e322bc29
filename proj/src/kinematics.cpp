#include "kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace swarmlink {

UnicycleInput track_velocity(const Pose2D& pose, const VelocityCommand& cmd,
                             const ControlParams& params) {
    const Vec2 v = cmd.desired_velocity;
    if (!std::isfinite(v.x) || !std::isfinite(v.y))
        throw std::invalid_argument("non-finite velocity command");

    double speed = std::min(v.norm(), params.max_speed);
    if (speed < 1e-9) return {};

    double heading_error = wrap_angle(std::atan2(v.y, v.x) - pose.theta);
    UnicycleInput input;
    input.angular_rate = std::clamp(params.heading_gain * heading_error,
                                    -params.max_turn_rate, params.max_turn_rate);
    input.linear_speed = speed * std::max(0.0, std::cos(heading_error));
    return input;
}

Pose2D integrate(const Pose2D& pose, const UnicycleInput& input, double dt) {
    if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
    Pose2D next;
    next.x = pose.x + input.linear_speed * std::cos(pose.theta) * dt;
    next.y = pose.y + input.linear_speed * std::sin(pose.theta) * dt;
    next.set_theta(pose.theta + input.angular_rate * dt);
    return next;
}

}  // namespace swarmlink
