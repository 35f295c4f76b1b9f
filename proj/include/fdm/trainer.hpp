#pragma once

#include "fdm/model.hpp"
#include "fdm/mppi.hpp"
#include "fdm/replay.hpp"
#include "fdm/sampling.hpp"
#include "fdm/sim.hpp"
#include "fdm/terrain.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fdm {

// Alternating data-generation / model-update schedule. Episodes run in
// parallel environments cycling through `kinds`; every sim tick is recorded,
// scans and command switches land on the dt_p grid, and failed episodes keep
// recording the frozen state so label futures always exist.
struct TrainConfig {
    int rounds = 6;
    int envs = 256;
    int samples_per_round = 20000;
    int epochs = 8;
    int batch = 512;

    double lr_max = 1e-3;   // cosine-decayed over all scheduled update steps
    double lr_min = 1e-5;
    double weight_decay = 1e-2;

    double rho_planner = 0.3;      // planner-episode fraction, active in the
                                   // second half of the rounds
    int sequences_per_episode = 3;
    int terrain_size = 100;        // cells per side
    int max_waves = 16;            // episode waves per round before giving up
    std::size_t buffer_capacity = 4'000'000;

    std::vector<TerrainKind> kinds{TerrainKind::plane, TerrainKind::obstacles2d,
                                   TerrainKind::mixed2d3d, TerrainKind::stairs3d};
    AugmentConfig augment;
    SamplerConfig sampler;
    MppiConfig planner;  // collection-time planning budget, reduced in ctor
    FdmConfig model;

    std::uint64_t seed = 0;
    std::string out_dir;  // when set: per-round checkpoints + metrics CSV

    TrainConfig();
};

struct TrainResult {
    FdmNet net;
    std::string metrics_csv;  // "round,epoch,L_pose,L_risk,L_stop,L_total"
};

// One data-generation pass: waves of one episode per environment until
// `target_samples` sub-trajectories can be extracted or max_waves is hit.
// `planner_net` enables planner-in-the-loop episodes per the rho schedule
// (round_index against cfg.rounds); pass nullptr for exploration-only
// sampling. Samples are returned un-augmented.
Dataset collect_dataset(const TrainConfig& cfg, const SimParams& sim, int round_index,
                        FdmNet* planner_net, int target_samples, Rng& rng);

// Runs `rounds` rounds of collect -> augment -> AdamW epochs. Normalization
// stats are computed from the first round's samples and frozen afterwards.
// With out_dir set, saves checkpoint_round_<r>.fdmck per round plus
// fdm_final.fdmck and train_metrics.csv. rounds <= 0 returns the freshly
// initialized model. Throws std::runtime_error when a loss turns non-finite.
TrainResult train(const TrainConfig& cfg, const SimParams& sim, int rounds, Rng& rng);

// Continues AdamW from `checkpoint` at a constant learning rate on batches
// mixed 50/50 from `base` and `shifted`. Zero steps returns the checkpoint
// unchanged; dataset shapes incompatible with the checkpoint config throw
// std::invalid_argument.
FdmNet fine_tune(const FdmNet& checkpoint, const Dataset& base, const Dataset& shifted,
                 int steps, double lr_const, int batch, double weight_decay, Rng& rng);

}  // namespace fdm
