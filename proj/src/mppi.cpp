#include "fdm/mppi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "fdm/sampling.hpp"

namespace fdm {

namespace {

Tensor seq_to_tensor(const ActionSeq& seq) {
    const int n = static_cast<int>(seq.size());
    Tensor t({1, n, 3});
    for (int k = 0; k < n; ++k) {
        t[static_cast<std::size_t>(k) * 3] = seq.twists[k].vx;
        t[static_cast<std::size_t>(k) * 3 + 1] = seq.twists[k].vy;
        t[static_cast<std::size_t>(k) * 3 + 2] = seq.twists[k].omega;
    }
    return t;
}

double terminal_distance(const FdmPrediction& pred, int i, const Se2Pose& goal) {
    const std::size_t o = (static_cast<std::size_t>(i) * pred.n + pred.n - 1) * 3;
    return std::hypot(pred.poses[o] - goal.x, pred.poses[o + 1] - goal.y);
}

ActionSeq sized_warm_start(const ActionSeq& warm, int n, double dt_p,
                           const ActionBounds& bounds) {
    ActionSeq mean;
    mean.dt_p = dt_p;
    mean.twists.reserve(n);
    for (int k = 0; k < n; ++k) {
        Twist t;
        if (!warm.twists.empty())
            t = warm.twists[std::min<std::size_t>(k, warm.twists.size() - 1)];
        mean.twists.push_back(bounds.clip(t));
    }
    return mean;
}

}  // namespace

double reward_pose(const Se2Pose& terminal, const Se2Pose& goal, const MppiConfig& cfg) {
    const double d = std::hypot(terminal.x - goal.x, terminal.y - goal.y);
    return d < cfg.delta_pose ? -d * cfg.lambda_pull : -d;
}

std::vector<double> reward_risk(const Tensor& risks, const Tensor& poses,
                                const MppiConfig& cfg) {
    const int C = risks.dim(0), n = risks.dim(1);
    std::vector<double> sum_r(C, 0.0);
    std::vector<char> risky(C, 0);
    std::vector<double> tx(C), ty(C);
    for (int i = 0; i < C; ++i) {
        double mx = 0.0;
        for (int t = 0; t < n; ++t) {
            const double r = risks[static_cast<std::size_t>(i) * n + t];
            sum_r[i] += r;
            mx = std::max(mx, r);
        }
        risky[i] = mx > cfg.delta_risk ? 1 : 0;
        const std::size_t o = (static_cast<std::size_t>(i) * n + n - 1) * 3;
        tx[i] = poses[o];
        ty[i] = poses[o + 1];
    }

    const int q = std::min(std::max(cfg.q_neighbors, 1), C);
    std::vector<double> out(C, 0.0);
    std::vector<int> order(C);
    std::vector<double> dist(C);
    for (int i = 0; i < C; ++i) {
        for (int j = 0; j < C; ++j) {
            const double dx = tx[j] - tx[i], dy = ty[j] - ty[i];
            dist[j] = dx * dx + dy * dy;
        }
        std::iota(order.begin(), order.end(), 0);
        std::nth_element(order.begin(), order.begin() + (q - 1), order.end(),
                         [&](int a, int b) {
                             return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
                         });
        double penalty = 0.0;
        for (int m = 0; m < q; ++m) {
            const int j = order[m];
            if (risky[j]) penalty -= cfg.lambda_risk * sum_r[j];
        }
        out[i] = penalty;
    }
    return out;
}

PopulationEval evaluate_population(FdmNet& fdm, const Tensor& context, const Tensor& actions,
                                   const Se2Pose& goal, const MppiConfig& cfg) {
    PopulationEval ev;
    ev.pred = fdm.rollout(context, actions);
    const int C = ev.pred.B;
    const std::vector<double> risk_term = reward_risk(ev.pred.risks, ev.pred.poses, cfg);
    ev.rewards.resize(C);
    for (int i = 0; i < C; ++i) {
        const std::size_t o = (static_cast<std::size_t>(i) * ev.pred.n + ev.pred.n - 1) * 3;
        const Se2Pose terminal{ev.pred.poses[o], ev.pred.poses[o + 1], ev.pred.poses[o + 2]};
        ev.rewards[i] = cfg.lambda_pose * reward_pose(terminal, goal, cfg) + risk_term[i];
    }
    return ev;
}

std::vector<double> mppi_weights(const std::vector<double>& rewards, double gamma) {
    if (rewards.empty()) throw std::invalid_argument("mppi_weights: empty rewards");
    const double rmax = *std::max_element(rewards.begin(), rewards.end());
    std::vector<double> w(rewards.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        w[i] = std::exp((rewards[i] - rmax) / gamma);
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
}

ActionSeq mppi_update(const ActionSeq& prev_best, const std::vector<double>& rewards,
                      const Tensor& candidates, const MppiConfig& cfg,
                      const ActionBounds& bounds) {
    const int C = candidates.dim(0), n = candidates.dim(1);
    if (static_cast<int>(rewards.size()) != C)
        throw std::invalid_argument("mppi_update: rewards/candidates size mismatch");
    if (static_cast<int>(prev_best.size()) != n)
        throw std::invalid_argument("mppi_update: warm start length mismatch");
    const std::vector<double> w = mppi_weights(rewards, cfg.gamma);
    ActionSeq out = prev_best;
    for (int k = 0; k < n; ++k) {
        double base[3] = {prev_best.twists[k].vx, prev_best.twists[k].vy,
                          prev_best.twists[k].omega};
        double upd[3];
        for (int c = 0; c < 3; ++c) {
            double delta = 0.0;
            for (int i = 0; i < C; ++i)
                delta += w[i] *
                         (candidates[(static_cast<std::size_t>(i) * n + k) * 3 + c] - base[c]);
            upd[c] = base[c] + delta;
        }
        out.twists[k] = bounds.clip({upd[0], upd[1], upd[2]});
    }
    return out;
}

Tensor perturb_candidates(const ActionSeq& warm, const MppiConfig& cfg,
                          const ActionBounds& bounds, Rng& rng) {
    const int C = cfg.population, n = static_cast<int>(warm.size());
    Tensor cands({C, n, 3});
    for (int k = 0; k < n; ++k) {
        const Twist t = bounds.clip(warm.twists[k]);
        cands[static_cast<std::size_t>(k) * 3] = t.vx;
        cands[static_cast<std::size_t>(k) * 3 + 1] = t.vy;
        cands[static_cast<std::size_t>(k) * 3 + 2] = t.omega;
    }
    for (int i = 1; i < C; ++i) {
        double eps[3] = {0.0, 0.0, 0.0};
        for (int k = 0; k < n; ++k) {
            const std::size_t o = (static_cast<std::size_t>(i) * n + k) * 3;
            double raw[3];
            for (int c = 0; c < 3; ++c) {
                const double eta = gaussian(rng, 0.0, cfg.noise_std[c]);
                eps[c] = k == 0 ? eta : cfg.noise_smooth * eps[c] + eta;
                raw[c] = eps[c];
            }
            const Twist base = warm.twists[k];
            const Twist clipped =
                bounds.clip({base.vx + raw[0], base.vy + raw[1], base.omega + raw[2]});
            cands[o] = clipped.vx;
            cands[o + 1] = clipped.vy;
            cands[o + 2] = clipped.omega;
        }
    }
    return cands;
}

PlanResult plan(FdmNet& fdm, const FdmBatch& obs, const Se2Pose& goal,
                const ActionSeq& warm_start, const MppiConfig& cfg, Rng& rng) {
    const FdmConfig& fc = fdm.config();
    ActionSeq mean = sized_warm_start(warm_start, fc.n, fc.dt_p, fc.bounds);
    const Tensor context = fdm.encode_context(obs);

    PlanResult out;
    for (int it = 0; it < cfg.iterations; ++it) {
        Tensor cands = perturb_candidates(mean, cfg, fc.bounds, rng);
        PopulationEval ev = evaluate_population(fdm, context, cands, goal, cfg);
        mean = mppi_update(mean, ev.rewards, cands, cfg, fc.bounds);
        FdmPrediction mp = fdm.rollout(context, seq_to_tensor(mean));
        out.iter_terminal_dist.push_back(terminal_distance(mp, 0, goal));
        if (it == cfg.iterations - 1) {
            out.rewards = std::move(ev.rewards);
            out.weights = mppi_weights(out.rewards, cfg.gamma);
            out.best_prediction = std::move(mp);
        }
    }
    out.best_actions = std::move(mean);
    return out;
}

FdmBatch observe_for_planner(const std::vector<std::pair<Se2Pose, ProprioObs>>& history,
                             const SimState& current, const TerrainGrid& grid,
                             const SimParams& params, const FdmConfig& cfg) {
    const int n = cfg.n, P = cfg.proprio_dim;
    std::vector<double> hist_states(static_cast<std::size_t>(n) * 3);
    std::vector<double> hist_proprio(static_cast<std::size_t>(n) * P);
    for (int t = 0; t < n; ++t) {
        // Oldest first; missing entries repeat the oldest available record.
        const std::int64_t want = static_cast<std::int64_t>(history.size()) - n + t;
        const std::size_t idx = static_cast<std::size_t>(std::max<std::int64_t>(want, 0));
        const auto& [pose, prop] = history.empty()
                                       ? std::pair<Se2Pose, ProprioObs>{current.pose, {}}
                                       : history[std::min(idx, history.size() - 1)];
        const Se2Pose rel = se2_relative(current.pose, pose);
        hist_states[static_cast<std::size_t>(t) * 3] = rel.x;
        hist_states[static_cast<std::size_t>(t) * 3 + 1] = rel.y;
        hist_states[static_cast<std::size_t>(t) * 3 + 2] = rel.yaw;
        const auto v = prop.vec();
        for (int c = 0; c < P; ++c) hist_proprio[static_cast<std::size_t>(t) * P + c] = v[c];
    }
    ScanConfig sc;
    sc.u = cfg.scan_u;
    sc.v = cfg.scan_v;
    const HeightScan scan = sample_height_scan(current.pose, grid, params, sc);
    return make_observation(hist_states, hist_proprio, scan.values, cfg);
}

EpisodeLog run_receding_horizon(const TerrainGrid& grid, const SimParams& params,
                                const SimState& start, FdmNet& fdm, const Se2Pose& goal,
                                const MppiConfig& cfg, const EpisodeLimits& limits, Rng& rng) {
    const FdmConfig& fc = fdm.config();
    const int n = fc.n;
    const int steps_per_replan =
        std::max(1, static_cast<int>(std::lround(cfg.replan_period / params.dt_sim)));

    EpisodeLog log;
    SimState state = start;
    double t = 0.0;
    log.rows.push_back({0.0, state.pose.x, state.pose.y, state.pose.yaw, 0.0, 0.0, 0.0,
                        state.failed ? 1 : 0});

    if (std::hypot(state.pose.x - goal.x, state.pose.y - goal.y) < limits.goal_tolerance) {
        log.outcome = EpisodeOutcome::goal_reached;
        return log;
    }
    if (state.failed) {
        log.outcome = EpisodeOutcome::failure;
        return log;
    }

    std::vector<std::pair<Se2Pose, ProprioObs>> history;
    history.assign(static_cast<std::size_t>(n),
                   {state.pose, make_proprio_obs(state, Twist{}, grid, params)});

    ActionSeq warm;
    warm.dt_p = fc.dt_p;
    warm.twists.assign(static_cast<std::size_t>(n), Twist{});

    while (t < limits.max_time - 1e-9) {
        const FdmBatch obs = observe_for_planner(history, state, grid, params, fc);
        const Se2Pose body_goal = se2_relative(state.pose, goal);
        const PlanResult pr = plan(fdm, obs, body_goal, warm, cfg, rng);
        const Twist cmd = pr.best_actions.twists[0];

        for (int s = 0; s < steps_per_replan; ++s) {
            const Se2Pose prev = state.pose;
            state = step_dynamics(state, cmd, grid, params, rng);
            t += params.dt_sim;
            log.path_length += std::hypot(state.pose.x - prev.x, state.pose.y - prev.y);
            history.push_back({state.pose, make_proprio_obs(state, cmd, grid, params)});
            if (history.size() > static_cast<std::size_t>(n))
                history.erase(history.begin());
            log.rows.push_back({t, state.pose.x, state.pose.y, state.pose.yaw, cmd.vx, cmd.vy,
                                cmd.omega, state.failed ? 1 : 0});
            if (state.failed) {
                log.outcome = EpisodeOutcome::failure;
                log.path_time = t;
                return log;
            }
            if (std::hypot(state.pose.x - goal.x, state.pose.y - goal.y) <
                limits.goal_tolerance) {
                log.outcome = EpisodeOutcome::goal_reached;
                log.path_time = t;
                return log;
            }
            if (t >= limits.max_time - 1e-9) break;
        }

        warm = pr.best_actions;
        warm.twists.erase(warm.twists.begin());
        warm.twists.push_back(warm.twists.back());
    }
    log.outcome = EpisodeOutcome::timeout;
    log.path_time = t;
    return log;
}

std::string episode_csv(const EpisodeLog& log) {
    std::string out = "t,x,y,yaw,vx_cmd,vy_cmd,w_cmd,failed\n";
    char line[256];
    for (const EpisodeRow& r : log.rows) {
        std::snprintf(line, sizeof(line), "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%d\n", r.t, r.x,
                      r.y, r.yaw, r.vx_cmd, r.vy_cmd, r.w_cmd, r.failed);
        out += line;
    }
    return out;
}

ActionSeq sample_planner_in_loop(FdmNet& fdm, const MppiConfig& planner_cfg,
                                 const TerrainGrid& grid, const SimParams& params,
                                 const SimState& state, const Se2Pose& goal,
                                 const SamplerConfig& cfg, int n, Rng& rng) {
    try {
        const FdmConfig& fc = fdm.config();
        std::vector<std::pair<Se2Pose, ProprioObs>> history(
            static_cast<std::size_t>(fc.n),
            {state.pose, make_proprio_obs(state, Twist{}, grid, params)});
        const FdmBatch obs = observe_for_planner(history, state, grid, params, fc);
        ActionSeq warm;
        warm.dt_p = fc.dt_p;
        warm.twists.assign(static_cast<std::size_t>(fc.n), Twist{});
        PlanResult pr = plan(fdm, obs, se2_relative(state.pose, goal), warm, planner_cfg, rng);
        ActionSeq out = std::move(pr.best_actions);
        out.dt_p = cfg.dt_p;
        if (static_cast<int>(out.twists.size()) > n) out.twists.resize(n);
        while (static_cast<int>(out.twists.size()) < n) out.twists.push_back(out.twists.back());
        return out;
    } catch (const std::exception&) {
        return sample_linear_correlated(cfg, n, rng);
    }
}

}  // namespace fdm
