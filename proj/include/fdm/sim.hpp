#pragma once

#include "fdm/rng.hpp"
#include "fdm/se2.hpp"
#include "fdm/terrain.hpp"

#include <array>
#include <optional>
#include <vector>

namespace fdm {

struct SimParams {
    double traction_flat = 1.0;   // in (0, 1]
    double traction_rough = 0.8;  // in (0, 1]
    double slip_std = 0.02;       // m/s, per linear component
    double max_step_height = 0.25;
    double max_slope = 0.7;  // rise/run
    double footprint_radius = 0.3;
    double dt_sim = 0.05;
    std::uint64_t seed = 0;
    ActionBounds bounds;

    // Embodiment presets; the shifted one drives the adaptation experiment.
    static SimParams nominal();
    static SimParams shifted();
};

struct SimState {
    Se2Pose pose;
    Twist body_vel;
    bool failed = false;
    Se2Pose fail_pose;
};

// Table-style observation block, fixed 12 dims in vec() order:
// cmd twist (3), projected gravity (3), base linear velocity (3, z = 0),
// base angular velocity (3, x = y = 0).
struct ProprioObs {
    Twist cmd_twist;
    std::array<double, 3> projected_gravity{0.0, 0.0, -1.0};
    std::array<double, 3> base_lin_vel{};
    std::array<double, 3> base_ang_vel{};

    static constexpr int kDim = 12;
    std::array<double, kDim> vec() const {
        return {cmd_twist.vx,          cmd_twist.vy,          cmd_twist.omega,
                projected_gravity[0],  projected_gravity[1],  projected_gravity[2],
                base_lin_vel[0],       base_lin_vel[1],       base_lin_vel[2],
                base_ang_vel[0],       base_ang_vel[1],       base_ang_vel[2]};
    }
};

// Robot-centric height scan: row i runs along body x, column j along body y,
// values are terrain height minus base height, clipped to [-2, 2].
struct HeightScan {
    int u = 32, v = 32;
    double resolution = 0.1;
    std::vector<float> values;    // u * v, row-major (i * v + j)
    std::vector<std::uint8_t> occluded;

    float value(int i, int j) const { return values[static_cast<std::size_t>(i) * v + j]; }
    bool is_occluded(int i, int j) const {
        return occluded[static_cast<std::size_t>(i) * v + j] != 0;
    }
};

struct ScanConfig {
    int u = 32, v = 32;
    double resolution = 0.1;
    double clip = 2.0;
    double camera_height = 0.4;  // above base
};

// True iff the footprint disc at `pose` sits on an unsafe patch: any
// adjacent-cell height jump under the disc above max_step_height, terrain
// slope along the heading above max_slope, or the pose outside the grid.
bool check_failure(const Se2Pose& pose, const TerrainGrid& grid, const SimParams& params);

// Ground-truth step: realized velocity = cmd * traction + slip noise on the
// linear components, pose advanced by the SE(2) exponential over dt_sim,
// failure checked after the move. A failed state is returned unchanged.
SimState step_dynamics(const SimState& state, const Twist& cmd, const TerrainGrid& grid,
                       const SimParams& params, Rng& rng);

HeightScan sample_height_scan(const Se2Pose& pose, const TerrainGrid& grid,
                              const SimParams& params, const ScanConfig& scan = ScanConfig());

ProprioObs make_proprio_obs(const SimState& state, const Twist& cmd, const TerrainGrid& grid,
                            const SimParams& params);

// Rejection-samples a failure-free pose with `clearance` of extra margin to
// the nearest unsafe patch. Empty when the terrain offers no free spot.
std::optional<Se2Pose> sample_spawn_pose(const TerrainGrid& grid, const SimParams& params,
                                         Rng& rng, double clearance = 0.2,
                                         int max_tries = 400);

}  // namespace fdm
