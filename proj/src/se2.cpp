#include "fdm/se2.hpp"

namespace fdm {

Se2Pose se2_compose(const Se2Pose& a, const Se2Pose& b) {
    const double c = std::cos(a.yaw), s = std::sin(a.yaw);
    return {a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, wrap_angle(a.yaw + b.yaw)};
}

Se2Pose se2_relative(const Se2Pose& base, const Se2Pose& world) {
    const double c = std::cos(base.yaw), s = std::sin(base.yaw);
    const double dx = world.x - base.x, dy = world.y - base.y;
    return {c * dx + s * dy, -s * dx + c * dy, wrap_angle(world.yaw - base.yaw)};
}

Se2Delta se2_exp(const Twist& t, double dt) {
    const double th = t.omega * dt;
    double s, c;  // s = sin(th)/th, c = (1 - cos(th))/th
    if (std::abs(th) < 1e-4) {
        const double th2 = th * th;
        s = 1.0 - th2 / 6.0;
        c = th * (0.5 - th2 / 24.0);
    } else {
        s = std::sin(th) / th;
        c = (1.0 - std::cos(th)) / th;
    }
    return {dt * (s * t.vx - c * t.vy), dt * (c * t.vx + s * t.vy), th};
}

Se2Pose advance_pose(const Se2Pose& p, const Twist& t, double dt) {
    const Se2Delta d = se2_exp(t, dt);
    return se2_compose(p, {d.dx, d.dy, d.dyaw});
}

PoseTrajectory integrate_twist(const Se2Pose& start, const ActionSeq& actions,
                               const std::vector<Twist>* residuals, const ActionBounds& bounds) {
    PoseTrajectory out;
    out.poses.reserve(actions.size());
    Se2Pose p = start;
    for (std::size_t i = 0; i < actions.size(); ++i) {
        Twist cmd = actions.twists[i];
        if (residuals) {
            cmd.vx += (*residuals)[i].vx;
            cmd.vy += (*residuals)[i].vy;
            cmd.omega += (*residuals)[i].omega;
        }
        p = advance_pose(p, bounds.clip(cmd), actions.dt_p);
        out.poses.push_back(p);
    }
    return out;
}

}  // namespace fdm
