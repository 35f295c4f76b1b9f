#pragma once

#include "fdm/rng.hpp"
#include "fdm/se2.hpp"
#include "fdm/terrain.hpp"

#include <cstdint>

namespace fdm {

enum class SamplerMode { linear, normal, planner };

struct SamplerConfig {
    double beta_min = 0.9;   // in [0, 1)
    double sigma_max = 0.3;  // m/s
    ActionBounds bounds;
    SamplerMode mode = SamplerMode::linear;
    double dt_p = 0.5;
};

// Deterministic cores, exposed so the recursions can be pinned directly.
// Linear: a_{t+1} = beta * a_t + (1 - beta) * a_rand, clipped per axis.
ActionSeq linear_recursion(const Twist& a0, const Twist& a_rand, double beta, int n,
                           const ActionBounds& bounds, double dt_p);
// Normal: a_{t+1} ~ N(a_t, sigma) per axis, clipped.
ActionSeq normal_recursion(const Twist& a0, double sigma, int n, const ActionBounds& bounds,
                           double dt_p, Rng& rng);

// beta ~ U(beta_min, 1), a0 and a_rand ~ U(bounds) per axis, single draw per
// sequence.
ActionSeq sample_linear_correlated(const SamplerConfig& cfg, int n, Rng& rng);

// sigma ~ U(0, sigma_max), a0 ~ U(bounds), single sigma per sequence.
ActionSeq sample_normal_correlated(const SamplerConfig& cfg, int n, Rng& rng);

// Deterministic rho-fraction schedule: true for episodes that should use the
// planner. Over any prefix of episodes the planner count is within one of
// rho * episodes.
bool use_planner_for_episode(std::int64_t episode_index, double rho);

class FdmNet;
struct MppiConfig;
struct SimState;
struct SimParams;

// Plans toward `goal` with the current model and returns the planner's best
// sequence; falls back to the linear sampler when planning fails.
ActionSeq sample_planner_in_loop(FdmNet& fdm, const MppiConfig& planner_cfg,
                                 const TerrainGrid& grid, const SimParams& params,
                                 const SimState& state, const Se2Pose& goal,
                                 const SamplerConfig& cfg, int n, Rng& rng);

}  // namespace fdm
