#pragma once

#include <cmath>
#include <optional>
#include <vector>

namespace fdm {

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double kTwoPi = 2.0 * M_PI;
    double r = std::fmod(a + M_PI, kTwoPi);
    if (r <= 0.0) r += kTwoPi;
    return r - M_PI;
}

// Planar pose. yaw is kept wrapped to (-pi, pi].
struct Se2Pose {
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;

    static Se2Pose identity() { return {}; }
};

// Body-frame velocity command (vx, vy forward/left in m/s, omega in rad/s).
struct Twist {
    double vx = 0.0;
    double vy = 0.0;
    double omega = 0.0;
};

// Symmetric per-axis command limits.
struct ActionBounds {
    double min[3] = {-1.0, -1.0, -1.0};
    double max[3] = {1.0, 1.0, 1.0};

    Twist clip(const Twist& t) const {
        auto cl = [](double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); };
        return {cl(t.vx, min[0], max[0]), cl(t.vy, min[1], max[1]), cl(t.omega, min[2], max[2])};
    }
    bool contains(const Twist& t, double tol = 1e-12) const {
        return t.vx >= min[0] - tol && t.vx <= max[0] + tol && t.vy >= min[1] - tol &&
               t.vy <= max[1] + tol && t.omega >= min[2] - tol && t.omega <= max[2] + tol;
    }
};

// Sequence of n twist commands, each held for dt_p seconds.
struct ActionSeq {
    std::vector<Twist> twists;
    double dt_p = 0.5;

    std::size_t size() const { return twists.size(); }
};

// Rollout result: n poses (in the frame of the rollout start), optional risks.
struct PoseTrajectory {
    std::vector<Se2Pose> poses;
    std::vector<double> risks;  // empty or same length as poses, values in [0,1]
};

// a o b: pose b expressed in a's frame, mapped to a's parent frame.
Se2Pose se2_compose(const Se2Pose& a, const Se2Pose& b);

// base^-1 o world: world pose expressed in base's frame.
Se2Pose se2_relative(const Se2Pose& base, const Se2Pose& world);

// Body-frame displacement of a twist held constant for dt (exact SE(2)
// exponential; sin(t)/t terms switch to series near t = 0 so the map and
// its derivatives stay smooth through omega = 0).
struct Se2Delta {
    double dx, dy, dyaw;
};
Se2Delta se2_exp(const Twist& t, double dt);

Se2Pose advance_pose(const Se2Pose& p, const Twist& t, double dt);

// Constant-velocity rollout of an action sequence from `start`. Each step
// applies clip(action + residual) and advances by the exact exponential.
PoseTrajectory integrate_twist(const Se2Pose& start, const ActionSeq& actions,
                               const std::vector<Twist>* residuals = nullptr,
                               const ActionBounds& bounds = ActionBounds());

}  // namespace fdm
