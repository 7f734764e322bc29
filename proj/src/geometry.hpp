#pragma once

#include <cmath>

namespace swarmlink {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }

    double norm() const { return std::hypot(x, y); }
    double norm_sq() const { return x * x + y * y; }

    // Unit vector; zero-length input maps to zero so callers can sum terms safely.
    Vec2 normalized() const {
        double n = norm();
        if (n < 1e-12) return {0.0, 0.0};
        return {x / n, y / n};
    }

    Vec2 clamped(double max_norm) const {
        double n = norm();
        if (n <= max_norm || n < 1e-12) return *this;
        return {x * max_norm / n, y * max_norm / n};
    }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

// Normalize an angle into [-pi, pi).
inline double wrap_angle(double a) {
    double two_pi = 2.0 * M_PI;
    double w = std::fmod(a + M_PI, two_pi);
    if (w < 0.0) w += two_pi;
    return w - M_PI;
}

struct Pose2D {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;  // always kept in [-pi, pi)

    Pose2D() = default;
    Pose2D(double x_, double y_, double theta_) : x(x_), y(y_), theta(wrap_angle(theta_)) {}

    Vec2 position() const { return {x, y}; }
    Vec2 heading() const { return {std::cos(theta), std::sin(theta)}; }

    void set_theta(double t) { theta = wrap_angle(t); }
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

}  // namespace swarmlink
