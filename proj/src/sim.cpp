#include "fdm/sim.hpp"

#include <algorithm>
#include <cmath>

namespace fdm {

SimParams SimParams::nominal() { return SimParams{}; }

SimParams SimParams::shifted() {
    SimParams p;
    p.traction_flat = 0.7;
    p.traction_rough = 0.45;
    p.slip_std = 0.05;
    return p;
}

bool check_failure(const Se2Pose& pose, const TerrainGrid& grid, const SimParams& params) {
    if (!grid.in_bounds(pose.x, pose.y)) return true;
    const double cs = grid.cell_size;
    const double r = params.footprint_radius;
    const int ix0 = static_cast<int>(std::floor((pose.x - r) / cs));
    const int ix1 = static_cast<int>(std::floor((pose.x + r) / cs));
    const int iy0 = static_cast<int>(std::floor((pose.y - r) / cs));
    const int iy1 = static_cast<int>(std::floor((pose.y + r) / cs));
    const double r2 = r * r;
    for (int iy = iy0; iy <= iy1; ++iy) {
        for (int ix = ix0; ix <= ix1; ++ix) {
            const double cx = (ix + 0.5) * cs, cy = (iy + 0.5) * cs;
            const double dx = cx - pose.x, dy = cy - pose.y;
            if (dx * dx + dy * dy > r2) continue;
            if (!grid.cell_in_bounds(ix, iy)) return true;
            const double h0 = grid.h(ix, iy);
            for (int k = 0; k < 2; ++k) {
                const int nx = ix + (k == 0 ? 1 : 0), ny = iy + (k == 0 ? 0 : 1);
                if (!grid.cell_in_bounds(nx, ny)) continue;
                if (std::abs(grid.h(nx, ny) - h0) > params.max_step_height) return true;
            }
        }
    }
    const double slope = grid.slope_along(pose.x, pose.y, std::cos(pose.yaw),
                                          std::sin(pose.yaw), params.footprint_radius);
    return std::abs(slope) > params.max_slope;
}

SimState step_dynamics(const SimState& state, const Twist& cmd, const TerrainGrid& grid,
                       const SimParams& params, Rng& rng) {
    if (state.failed) return state;
    const Twist c = params.bounds.clip(cmd);
    const double traction = grid.is_rough_at(state.pose.x, state.pose.y)
                                ? params.traction_rough
                                : params.traction_flat;
    Twist realized{c.vx * traction, c.vy * traction, c.omega * traction};
    if (params.slip_std > 0.0) {
        realized.vx += gaussian(rng, 0.0, params.slip_std);
        realized.vy += gaussian(rng, 0.0, params.slip_std);
    }
    SimState next = state;
    next.body_vel = realized;
    next.pose = advance_pose(state.pose, realized, params.dt_sim);
    if (check_failure(next.pose, grid, params)) {
        next.failed = true;
        next.fail_pose = next.pose;
        next.body_vel = Twist{};
    }
    return next;
}

namespace {

// 2.5D line-of-sight from a camera point to a target ground point. Returns
// true when visible; otherwise *blocker_height is the terrain height at the
// first blocking sample.
bool ray_visible(const TerrainGrid& grid, double cam_x, double cam_y, double cam_z,
                 double tx, double ty, double tz, double* blocker_height) {
    const double dx = tx - cam_x, dy = ty - cam_y;
    const double dist = std::hypot(dx, dy);
    const double step = grid.cell_size * 0.5;
    // Stop one cell short of the target so it never blocks itself.
    const int n = static_cast<int>((dist - grid.cell_size) / step);
    for (int k = 1; k <= n; ++k) {
        const double s = k * step / dist;
        if (s >= 1.0) break;
        const double px = cam_x + s * dx, py = cam_y + s * dy;
        const double line_z = cam_z + s * (tz - cam_z);
        const double ground = grid.height_at(px, py);
        if (ground > line_z + 1e-9) {
            if (blocker_height) *blocker_height = ground;
            return false;
        }
    }
    return true;
}

}  // namespace

HeightScan sample_height_scan(const Se2Pose& pose, const TerrainGrid& grid,
                              const SimParams& params, const ScanConfig& scan) {
    HeightScan out;
    out.u = scan.u;
    out.v = scan.v;
    out.resolution = scan.resolution;
    out.values.assign(static_cast<std::size_t>(scan.u) * scan.v, 0.0f);
    out.occluded.assign(static_cast<std::size_t>(scan.u) * scan.v, 0);

    const double base_h = grid.height_at(pose.x, pose.y);
    const double cyaw = std::cos(pose.yaw), syaw = std::sin(pose.yaw);
    const double cam_z = base_h + scan.camera_height;
    const double fr = params.footprint_radius;
    const double cam_front_x = pose.x + cyaw * fr, cam_front_y = pose.y + syaw * fr;
    const double cam_rear_x = pose.x - cyaw * fr, cam_rear_y = pose.y - syaw * fr;

    for (int i = 0; i < scan.u; ++i) {
        const double bx = (i - (scan.u - 1) / 2.0) * scan.resolution;
        for (int j = 0; j < scan.v; ++j) {
            const double by = (j - (scan.v - 1) / 2.0) * scan.resolution;
            const double wx = pose.x + cyaw * bx - syaw * by;
            const double wy = pose.y + syaw * bx + cyaw * by;
            const double ground = grid.height_at(wx, wy);
            double blocker = ground;
            const bool front_ok =
                ray_visible(grid, cam_front_x, cam_front_y, cam_z, wx, wy, ground, &blocker);
            const bool rear_ok =
                front_ok ||
                ray_visible(grid, cam_rear_x, cam_rear_y, cam_z, wx, wy, ground, nullptr);
            const std::size_t idx = static_cast<std::size_t>(i) * scan.v + j;
            const double value = (front_ok || rear_ok) ? ground : blocker;
            out.values[idx] =
                static_cast<float>(std::clamp(value - base_h, -scan.clip, scan.clip));
            out.occluded[idx] = (front_ok || rear_ok) ? 0 : 1;
        }
    }
    return out;
}

ProprioObs make_proprio_obs(const SimState& state, const Twist& cmd, const TerrainGrid& grid,
                            const SimParams& params) {
    ProprioObs o;
    o.cmd_twist = cmd;
    const double cyaw = std::cos(state.pose.yaw), syaw = std::sin(state.pose.yaw);
    const double sx =
        grid.slope_along(state.pose.x, state.pose.y, cyaw, syaw, params.footprint_radius);
    const double sy =
        grid.slope_along(state.pose.x, state.pose.y, -syaw, cyaw, params.footprint_radius);
    const double norm = std::sqrt(sx * sx + sy * sy + 1.0);
    o.projected_gravity = {-sx / norm, -sy / norm, -1.0 / norm};
    o.base_lin_vel = {state.body_vel.vx, state.body_vel.vy, 0.0};
    o.base_ang_vel = {0.0, 0.0, state.body_vel.omega};
    return o;
}

std::optional<Se2Pose> sample_spawn_pose(const TerrainGrid& grid, const SimParams& params,
                                         Rng& rng, double clearance, int max_tries) {
    SimParams padded = params;
    padded.footprint_radius += clearance;
    const double margin = params.footprint_radius + clearance + 2.0 * grid.cell_size;
    for (int t = 0; t < max_tries; ++t) {
        Se2Pose p{uniform(rng, margin, grid.width() - margin),
                  uniform(rng, margin, grid.height_extent() - margin),
                  uniform(rng, -M_PI, M_PI)};
        p.yaw = wrap_angle(p.yaw);
        if (!check_failure(p, grid, padded)) return p;
    }
    return std::nullopt;
}

}  // namespace fdm
