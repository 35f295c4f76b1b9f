#include "fdm/trainer.hpp"

#include "fdm/io.hpp"
#include "fdm/optim.hpp"
#include "fdm/threading.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace fdm {

namespace {

constexpr std::uint64_t kInitStream = 0x1e17;
constexpr std::uint64_t kDropoutStream = 0xd07;
constexpr std::uint64_t kEpisodeStream = 0xe915;
constexpr std::uint64_t kTerrainStream = 0x7e44;
constexpr std::uint64_t kAugmentStream = 0xa4617;

// One exploration episode: sequences_per_episode action sequences executed
// back to back, recorded every dt_h with scans on the dt_p grid. Records
// keep flowing after a failure so sub-trajectories ending in the failure
// still carry a full label future.
Trajectory run_episode(const TerrainGrid& grid, const SimParams& sim, const TrainConfig& cfg,
                       FdmNet* planner_net, bool planner_episode, std::uint64_t episode_index,
                       std::mutex* planner_mu, Rng& rng) {
    Trajectory traj;
    const std::optional<Se2Pose> spawn = sample_spawn_pose(grid, sim, rng);
    if (!spawn) return traj;

    const int n = cfg.model.n;
    const double dt_h = cfg.model.dt_h;
    const double dt_p = cfg.model.dt_p;
    const int rec_stride = std::max(1, static_cast<int>(std::lround(dt_h / sim.dt_sim)));
    const int scan_every = std::max(1, static_cast<int>(std::lround(dt_p / dt_h)));

    SamplerConfig scfg = cfg.sampler;
    scfg.dt_p = dt_p;
    ScanConfig scan_cfg;
    scan_cfg.u = cfg.model.scan_u;
    scan_cfg.v = cfg.model.scan_v;

    SimState state;
    state.pose = *spawn;

    Se2Pose goal;
    bool have_goal = false;
    if (planner_episode && planner_net) {
        if (const std::optional<Se2Pose> g = sample_spawn_pose(grid, sim, rng)) {
            goal = *g;
            have_goal = true;
        }
    }

    int rec = 0;
    const auto push_record = [&](const Twist& cmd) {
        TransitionRecord r;
        r.time = rec * dt_h;
        r.sim_state = state;
        r.cmd = cmd;
        r.proprio = make_proprio_obs(state, cmd, grid, sim);
        if (rec % scan_every == 0) {
            r.scan_ref = static_cast<int>(traj.scans.size());
            traj.scans.push_back(sample_height_scan(state.pose, grid, sim, scan_cfg));
        }
        traj.records.push_back(std::move(r));
        ++rec;
    };

    Twist last;
    for (int seq = 0; seq < cfg.sequences_per_episode; ++seq) {
        ActionSeq actions;
        if (planner_episode && planner_net && have_goal && !state.failed) {
            std::unique_lock<std::mutex> lock;
            if (planner_mu) lock = std::unique_lock<std::mutex>(*planner_mu);
            actions = sample_planner_in_loop(*planner_net, cfg.planner, grid, sim, state, goal,
                                             scfg, n, rng);
        } else if ((episode_index + static_cast<std::uint64_t>(seq)) % 2 == 0) {
            actions = sample_linear_correlated(scfg, n, rng);
        } else {
            actions = sample_normal_correlated(scfg, n, rng);
        }
        for (int k = 0; k < n; ++k) {
            const Twist cmd = actions.twists[static_cast<std::size_t>(k)];
            for (int rep = 0; rep < scan_every; ++rep) {
                push_record(cmd);
                for (int s = 0; s < rec_stride; ++s)
                    state = step_dynamics(state, cmd, grid, sim, rng);
            }
            last = cmd;
        }
    }
    push_record(last);
    return traj;
}

struct EpochStats {
    double pose = 0.0, risk = 0.0, stop = 0.0, total = 0.0;
    std::size_t count = 0;

    void add(const FdmLosses& l, std::size_t b) {
        pose += l.pose * static_cast<double>(b);
        risk += l.risk * static_cast<double>(b);
        stop += l.stop * static_cast<double>(b);
        total += l.total * static_cast<double>(b);
        count += b;
    }
};

void append_csv_row(std::string& csv, int round, int epoch, const EpochStats& s) {
    const double d = static_cast<double>(std::max<std::size_t>(s.count, 1));
    char line[160];
    std::snprintf(line, sizeof(line), "%d,%d,%.9g,%.9g,%.9g,%.9g\n", round, epoch, s.pose / d,
                  s.risk / d, s.stop / d, s.total / d);
    csv += line;
}

}  // namespace

TrainConfig::TrainConfig() {
    planner.population = 128;
    planner.iterations = 2;
    planner.gamma = 0.5;
}

Dataset collect_dataset(const TrainConfig& cfg, const SimParams& sim, int round_index,
                        FdmNet* planner_net, int target_samples, Rng& rng) {
    const int n = cfg.model.n;
    const double dt_h = cfg.model.dt_h;
    const double dt_p = cfg.model.dt_p;
    const bool planner_active =
        planner_net != nullptr && cfg.rho_planner > 0.0 && round_index >= (cfg.rounds + 1) / 2;
    const double rho = planner_active ? cfg.rho_planner : 0.0;

    ReplayBuffer buffer(cfg.buffer_capacity);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::mutex planner_mu;

    const std::size_t envs = static_cast<std::size_t>(std::max(1, cfg.envs));
    std::vector<Trajectory> slots(envs);
    for (int wave = 0; wave < cfg.max_waves; ++wave) {
        if (pairs.size() >= static_cast<std::size_t>(target_samples)) break;
        parallel_for(envs, [&](std::size_t e) {
            const std::uint64_t episode_index =
                static_cast<std::uint64_t>(wave) * envs + e;
            Rng er(hash_seed(hash_seed(cfg.seed, kEpisodeStream + static_cast<std::uint64_t>(
                                                     round_index)),
                             episode_index));
            const TerrainKind kind = cfg.kinds[e % cfg.kinds.size()];
            const TerrainGrid grid = generate_terrain(
                kind,
                hash_seed(hash_seed(cfg.seed, kTerrainStream + static_cast<std::uint64_t>(
                                                  round_index)),
                          e),
                cfg.terrain_size);
            const bool planner_episode = rho > 0.0 && use_planner_for_episode(
                                                          static_cast<std::int64_t>(
                                                              episode_index),
                                                          rho);
            slots[e] = run_episode(grid, sim, cfg, planner_net, planner_episode, episode_index,
                                   &planner_mu, er);
        });
        for (Trajectory& traj : slots) {
            if (traj.records.empty()) continue;
            const std::vector<std::size_t> t0s = valid_t0_indices(traj, n, dt_h, dt_p);
            const std::size_t traj_id = buffer.trajectory_count();
            buffer.push_trajectory(std::move(traj));
            traj = Trajectory{};
            for (std::size_t t0 : t0s) pairs.emplace_back(traj_id, t0);
        }
    }

    std::shuffle(pairs.begin(), pairs.end(), rng);
    if (pairs.size() > static_cast<std::size_t>(target_samples))
        pairs.resize(static_cast<std::size_t>(target_samples));

    Dataset ds;
    ds.n = n;
    ds.u = cfg.model.scan_u;
    ds.v = cfg.model.scan_v;
    ds.dt_h = static_cast<float>(dt_h);
    ds.dt_p = static_cast<float>(dt_p);
    ds.proprio_dim = cfg.model.proprio_dim;
    ds.samples.resize(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t i) {
        ds.samples[i] = extract_sample(buffer, pairs[i].first, pairs[i].second, n, dt_h, dt_p);
    });
    return ds;
}

TrainResult train(const TrainConfig& cfg_in, const SimParams& sim, int rounds, Rng& rng) {
    TrainConfig cfg = cfg_in;
    cfg.rounds = rounds;

    FdmNet net(cfg.model, hash_seed(cfg.seed, kInitStream));
    std::string csv = "round,epoch,L_pose,L_risk,L_stop,L_total\n";
    if (!cfg.out_dir.empty()) ensure_dir(cfg.out_dir);

    if (rounds <= 0) {
        net.set_norm(NormStats::identity(cfg.model.proprio_dim));
        if (!cfg.out_dir.empty()) {
            net.save(cfg.out_dir + "/fdm_final.fdmck");
            atomic_write_file(cfg.out_dir + "/train_metrics.csv", csv);
        }
        return {std::move(net), std::move(csv)};
    }

    AdamW opt(net.params());
    Rng dropout_rng(hash_seed(cfg.seed, kDropoutStream));
    const int batch = std::max(1, cfg.batch);
    const std::int64_t batches_per_epoch =
        std::max<std::int64_t>(1, (cfg.samples_per_round + batch - 1) / batch);
    const std::int64_t total_steps =
        static_cast<std::int64_t>(rounds) * cfg.epochs * batches_per_epoch;
    std::int64_t gstep = 0;

    for (int round = 0; round < rounds; ++round) {
        Dataset ds = collect_dataset(cfg, sim, round, &net, cfg.samples_per_round, rng);
        const std::uint64_t aug_seed =
            hash_seed(cfg.seed, kAugmentStream + static_cast<std::uint64_t>(round));
        parallel_for(ds.samples.size(), [&](std::size_t i) {
            Rng ar(hash_seed(aug_seed, i));
            ds.samples[i] = augment_sample(ds.samples[i], cfg.augment, ar);
        });
        if (round == 0) net.set_norm(compute_norm_stats(ds.samples));

        std::vector<const FdmSample*> ptrs;
        std::vector<std::size_t> order(ds.samples.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), rng);
            EpochStats stats;
            for (std::size_t start = 0; start < order.size();
                 start += static_cast<std::size_t>(batch)) {
                const std::size_t stop =
                    std::min(order.size(), start + static_cast<std::size_t>(batch));
                ptrs.clear();
                for (std::size_t i = start; i < stop; ++i) ptrs.push_back(&ds.samples[order[i]]);
                const FdmBatch fb = make_batch(ptrs, cfg.model);

                net.zero_grad();
                const FdmPrediction pred = net.forward(fb, true, dropout_rng);
                const FdmLosses losses = compute_losses(pred, fb, cfg.model);
                if (!std::isfinite(losses.total)) {
                    char msg[160];
                    std::snprintf(msg, sizeof(msg),
                                  "training diverged: non-finite loss %g at round %d epoch %d "
                                  "batch %zu",
                                  losses.total, round, epoch, start / batch);
                    throw std::runtime_error(msg);
                }
                net.backward(pred, fb);
                opt.step(cosine_lr(gstep, total_steps, cfg.lr_max, cfg.lr_min),
                         cfg.weight_decay);
                ++gstep;
                stats.add(losses, stop - start);
            }
            append_csv_row(csv, round, epoch, stats);
        }
        if (!cfg.out_dir.empty())
            net.save(cfg.out_dir + "/checkpoint_round_" + std::to_string(round) + ".fdmck");
    }

    if (!cfg.out_dir.empty()) {
        net.save(cfg.out_dir + "/fdm_final.fdmck");
        atomic_write_file(cfg.out_dir + "/train_metrics.csv", csv);
    }
    return {std::move(net), std::move(csv)};
}

FdmNet fine_tune(const FdmNet& checkpoint, const Dataset& base, const Dataset& shifted,
                 int steps, double lr_const, int batch, double weight_decay, Rng& rng) {
    const FdmConfig& fc = checkpoint.config();
    const auto check = [&](const Dataset& ds, const char* which) {
        if (ds.n != fc.n || ds.u != fc.scan_u || ds.v != fc.scan_v ||
            ds.proprio_dim != fc.proprio_dim)
            throw std::invalid_argument(std::string(which) +
                                        " dataset shape does not match the checkpoint config");
    };
    check(base, "base");
    check(shifted, "shifted");

    FdmNet net = checkpoint;
    if (steps <= 0) return net;
    if (base.samples.empty() || shifted.samples.empty())
        throw std::invalid_argument("fine-tuning needs non-empty base and shifted datasets");

    AdamW opt(net.params());
    const int half = std::max(1, batch / 2);
    std::uniform_int_distribution<std::size_t> pick_base(0, base.samples.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_shifted(0, shifted.samples.size() - 1);

    std::vector<const FdmSample*> ptrs;
    for (int step = 0; step < steps; ++step) {
        ptrs.clear();
        for (int i = 0; i < half; ++i) ptrs.push_back(&base.samples[pick_base(rng)]);
        for (int i = 0; i < half; ++i) ptrs.push_back(&shifted.samples[pick_shifted(rng)]);
        const FdmBatch fb = make_batch(ptrs, fc);

        net.zero_grad();
        const FdmPrediction pred = net.forward(fb, true, rng);
        const FdmLosses losses = compute_losses(pred, fb, fc);
        if (!std::isfinite(losses.total)) {
            char msg[128];
            std::snprintf(msg, sizeof(msg),
                          "fine-tuning diverged: non-finite loss %g at step %d", losses.total,
                          step);
            throw std::runtime_error(msg);
        }
        net.backward(pred, fb);
        opt.step(lr_const, weight_decay);
    }
    return net;
}

}  // namespace fdm
