#pragma once

#include <string>
#include <vector>

#include "fdm/model.hpp"
#include "fdm/rng.hpp"
#include "fdm/se2.hpp"
#include "fdm/sim.hpp"

namespace fdm {

struct MppiConfig {
    int population = 512;  // C
    int iterations = 3;    // k
    double gamma = 0.1;
    double noise_std[3] = {0.3, 0.3, 0.4};
    double noise_smooth = 0.8;  // first-order filter on perturbations
    double lambda_pose = 1.0;
    double lambda_risk = 2.0;
    double lambda_pull = 3.0;
    double delta_pose = 1.5;  // meters; inside it the pull multiplier applies
    double delta_risk = 0.5;
    int q_neighbors = 3;  // neighborhood size for the risk penalty, self included
    double replan_period = 0.5;
};

struct PlanResult {
    ActionSeq best_actions;
    FdmPrediction best_prediction;         // forward pass of best_actions
    std::vector<double> rewards;           // last iteration, per candidate
    std::vector<double> weights;           // last iteration, per candidate
    std::vector<double> iter_terminal_dist;  // |terminal - goal| after each iteration
};

// Negated terminal distance; multiplied by lambda_pull once inside delta_pose.
double reward_pose(const Se2Pose& terminal, const Se2Pose& goal, const MppiConfig& cfg);

// Per-candidate risk penalty: sum over the q nearest terminals (self included)
// of -lambda_risk * sum_t r_t for every neighbor whose max risk clears
// delta_risk. risks: [C, n], poses: [C, n, 3].
std::vector<double> reward_risk(const Tensor& risks, const Tensor& poses,
                                const MppiConfig& cfg);

struct PopulationEval {
    std::vector<double> rewards;
    FdmPrediction pred;
};

// Rolls the population through the model against a shared observation context
// and scores lambda_pose * pose reward + risk penalty.
PopulationEval evaluate_population(FdmNet& fdm, const Tensor& context, const Tensor& actions,
                                   const Se2Pose& goal, const MppiConfig& cfg);

// Softmax weights exp((R_i - R_max) / gamma), normalized.
std::vector<double> mppi_weights(const std::vector<double>& rewards, double gamma);

// mean += sum_i w_i * (candidate_i - mean), clipped to bounds.
// candidates: [C, n, 3].
ActionSeq mppi_update(const ActionSeq& prev_best, const std::vector<double>& rewards,
                      const Tensor& candidates, const MppiConfig& cfg,
                      const ActionBounds& bounds);

// AR(1)-smoothed Gaussian perturbations of the warm start. Candidate 0 is the
// unperturbed warm start; all candidates are clipped to bounds.
Tensor perturb_candidates(const ActionSeq& warm, const MppiConfig& cfg,
                          const ActionBounds& bounds, Rng& rng);

// `goal` is expressed in the observation's base frame, the same frame the
// model rollouts start from.
PlanResult plan(FdmNet& fdm, const FdmBatch& obs, const Se2Pose& goal,
                const ActionSeq& warm_start, const MppiConfig& cfg, Rng& rng);

enum class EpisodeOutcome { goal_reached, failure, timeout };

struct EpisodeLimits {
    double max_time = 60.0;
    double goal_tolerance = 0.5;
};

struct EpisodeRow {
    double t = 0.0;
    double x = 0.0, y = 0.0, yaw = 0.0;
    double vx_cmd = 0.0, vy_cmd = 0.0, w_cmd = 0.0;
    int failed = 0;
};

struct EpisodeLog {
    EpisodeOutcome outcome = EpisodeOutcome::timeout;
    double path_length = 0.0;
    double path_time = 0.0;
    std::vector<EpisodeRow> rows;
};

// observe -> plan -> execute the first replan_period of the best sequence,
// repeated until the goal is inside the tolerance, the sim fails, or time
// runs out. The model history window is primed with the start state.
EpisodeLog run_receding_horizon(const TerrainGrid& grid, const SimParams& params,
                                const SimState& start, FdmNet& fdm, const Se2Pose& goal,
                                const MppiConfig& cfg, const EpisodeLimits& limits, Rng& rng);

std::string episode_csv(const EpisodeLog& log);

// Builds the model observation for a sim state from a tick history of
// (pose, proprio) pairs ending at the current state; shorter histories are
// repeat-padded at the oldest end.
FdmBatch observe_for_planner(const std::vector<std::pair<Se2Pose, ProprioObs>>& history,
                             const SimState& current, const TerrainGrid& grid,
                             const SimParams& params, const FdmConfig& cfg);

}  // namespace fdm
