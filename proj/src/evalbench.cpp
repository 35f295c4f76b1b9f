#include "fdm/evalbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <stdexcept>

#include "fdm/csv.hpp"
#include "fdm/svg.hpp"
#include "fdm/threading.hpp"

namespace fdm {
namespace {

constexpr std::uint64_t kCollectStream = 0x5eed;
constexpr std::uint64_t kTerrainStream = 0x7e55;
constexpr std::uint64_t kCiStream = 0xc100;

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

bool any_positive(const std::vector<double>& seq, double delta) {
    for (double r : seq)
        if (r > delta) return true;
    return false;
}

}  // namespace

ConfusionMetrics confusion_from_counts(int tp, int fp, int fn, int tn) {
    ConfusionMetrics m;
    m.tp = tp;
    m.fp = fp;
    m.fn = fn;
    m.tn = tn;
    const int pred_pos = tp + fp;
    const int label_pos = tp + fn;
    const int total = tp + fp + fn + tn;
    m.precision_defined = pred_pos > 0;
    m.precision = m.precision_defined ? static_cast<double>(tp) / pred_pos : 0.0;
    m.recall = label_pos > 0 ? static_cast<double>(tp) / label_pos : 0.0;
    m.accuracy = total > 0 ? static_cast<double>(tp + tn) / total : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                        : 0.0;
    return m;
}

ConfusionMetrics failure_confusion(const std::vector<std::vector<double>>& pred_risks,
                                   const std::vector<std::vector<double>>& label_risks,
                                   double delta_risk) {
    if (pred_risks.empty() || pred_risks.size() != label_risks.size())
        throw std::invalid_argument("failure_confusion: empty or misaligned inputs");
    int tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < pred_risks.size(); ++i) {
        if (pred_risks[i].size() != label_risks[i].size())
            throw std::invalid_argument("failure_confusion: empty or misaligned inputs");
        const bool pred = any_positive(pred_risks[i], delta_risk);
        const bool label = any_positive(label_risks[i], delta_risk);
        if (pred && label)
            ++tp;
        else if (pred)
            ++fp;
        else if (label)
            ++fn;
        else
            ++tn;
    }
    return confusion_from_counts(tp, fp, fn, tn);
}

PoseTrajectory constant_velocity_predict(const ActionSeq& actions) {
    return integrate_twist(Se2Pose::identity(), actions);
}

FdmNet constant_velocity_net(const FdmConfig& cfg) {
    FdmNet net(cfg, 0);
    net.set_norm(NormStats::identity(cfg.proprio_dim));
    for (Param* p : net.params())
        if (p->name == "state3.W" || p->name == "state3.b" || p->name == "risk2.W" ||
            p->name == "risk2.b")
            p->v.fill(0.0);
    return net;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile: empty sample");
    std::sort(values.begin(), values.end());
    q = std::clamp(q, 0.0, 1.0);
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::array<double, 2> bootstrap_ci(const std::vector<double>& values, int resamples, Rng& rng) {
    if (values.empty() || resamples <= 0) return {0.0, 0.0};
    std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
    std::vector<double> means;
    means.reserve(static_cast<std::size_t>(resamples));
    for (int r = 0; r < resamples; ++r) {
        double s = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) s += values[pick(rng)];
        means.push_back(s / static_cast<double>(values.size()));
    }
    return {quantile(means, 0.025), quantile(means, 0.975)};
}

PredictionErrors prediction_errors(FdmNet* net, const Dataset& ds, int batch) {
    if (net) {
        const FdmConfig& fc = net->config();
        if (fc.n != ds.n || fc.proprio_dim != ds.proprio_dim || fc.scan_u != ds.u ||
            fc.scan_v != ds.v)
            throw std::invalid_argument("prediction_errors: dataset shape mismatch");
    }
    const int n = ds.n;
    const std::size_t count = ds.samples.size();
    PredictionErrors pe;
    pe.step_err.assign(static_cast<std::size_t>(n), std::vector<double>(count, 0.0));
    pe.risks.assign(count, std::vector<double>(static_cast<std::size_t>(n), 0.0));
    pe.labels.assign(count, std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (std::size_t i = 0; i < count; ++i)
        for (int t = 0; t < n; ++t)
            pe.labels[i][t] = ds.samples[i].label_risks[static_cast<std::size_t>(t)];

    if (net) {
        for (std::size_t b0 = 0; b0 < count; b0 += static_cast<std::size_t>(batch)) {
            const std::size_t b1 = std::min(count, b0 + static_cast<std::size_t>(batch));
            std::vector<const FdmSample*> ptrs;
            ptrs.reserve(b1 - b0);
            for (std::size_t i = b0; i < b1; ++i) ptrs.push_back(&ds.samples[i]);
            const FdmBatch fb = make_batch(ptrs, net->config());
            const FdmPrediction pred = net->infer(fb);
            for (std::size_t b = 0; b < b1 - b0; ++b)
                for (int t = 0; t < n; ++t) {
                    const std::size_t o = (b * n + static_cast<std::size_t>(t)) * 3;
                    const double dx =
                        pred.poses.ptr()[o] - ds.samples[b0 + b].label_poses[t * 3 + 0];
                    const double dy =
                        pred.poses.ptr()[o + 1] - ds.samples[b0 + b].label_poses[t * 3 + 1];
                    pe.step_err[static_cast<std::size_t>(t)][b0 + b] = std::hypot(dx, dy);
                    pe.risks[b0 + b][static_cast<std::size_t>(t)] =
                        pred.risks.ptr()[b * n + static_cast<std::size_t>(t)];
                }
        }
    } else {
        parallel_for(count, [&](std::size_t i) {
            const FdmSample& s = ds.samples[i];
            ActionSeq seq;
            seq.dt_p = ds.dt_p;
            seq.twists.resize(static_cast<std::size_t>(n));
            for (int t = 0; t < n; ++t)
                seq.twists[static_cast<std::size_t>(t)] = {s.actions[t * 3 + 0],
                                                           s.actions[t * 3 + 1],
                                                           s.actions[t * 3 + 2]};
            const PoseTrajectory traj = constant_velocity_predict(seq);
            for (int t = 0; t < n; ++t) {
                const double dx = traj.poses[static_cast<std::size_t>(t)].x -
                                  s.label_poses[t * 3 + 0];
                const double dy = traj.poses[static_cast<std::size_t>(t)].y -
                                  s.label_poses[t * 3 + 1];
                pe.step_err[static_cast<std::size_t>(t)][i] = std::hypot(dx, dy);
            }
        });
    }
    return pe;
}

FdmMetrics summarize_errors(const PredictionErrors& pe, double delta_risk) {
    FdmMetrics m;
    const int n = static_cast<int>(pe.step_err.size());
    if (n == 0 || pe.step_err[0].empty()) return m;
    m.samples = static_cast<int>(pe.step_err[0].size());
    m.step_mean.resize(static_cast<std::size_t>(n));
    m.step_std.resize(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
        const auto& col = pe.step_err[static_cast<std::size_t>(t)];
        const double mu = mean_of(col);
        double var = 0.0;
        for (double e : col) var += (e - mu) * (e - mu);
        m.step_mean[static_cast<std::size_t>(t)] = mu;
        m.step_std[static_cast<std::size_t>(t)] = std::sqrt(var / static_cast<double>(col.size()));
    }
    const auto& fin = pe.step_err.back();
    m.final_mean = mean_of(fin);
    m.final_q50 = quantile(fin, 0.5);
    m.final_q95 = quantile(fin, 0.95);
    m.confusion = failure_confusion(pe.risks, pe.labels, delta_risk);
    return m;
}

FdmBenchReport run_fdm_benchmark(FdmNet& net, const FdmBenchConfig& cfg, const SimParams& sim) {
    FdmBenchReport rep;
    rep.summary_csv =
        "env,method,samples,final_mean,final_q50,final_q95,precision,precision_defined,recall,"
        "accuracy,f1\n";
    rep.step_csv = "env,method,step,err_mean,err_std\n";
    std::vector<SvgSeries> curves;
    std::vector<SvgBox> boxes;

    for (std::size_t ki = 0; ki < cfg.kinds.size(); ++ki) {
        const TerrainKind kind = cfg.kinds[ki];
        TrainConfig cc = cfg.collect;
        cc.kinds = {kind};
        cc.model = net.config();
        cc.seed = hash_seed(cfg.seed, kCollectStream + ki);
        Rng rng(hash_seed(cc.seed, 1));
        const Dataset ds = collect_dataset(cc, sim, 0, nullptr, cfg.samples_per_kind, rng);

        for (int pass = 0; pass < 2; ++pass) {
            const bool is_fdm = pass == 0;
            const PredictionErrors pe =
                prediction_errors(is_fdm ? &net : nullptr, ds, cfg.batch);
            const FdmMetrics m = summarize_errors(pe, cfg.delta_risk);
            const std::string method = is_fdm ? "fdm" : "cv";
            rep.rows.push_back({kind, method, m});

            const std::string env = to_string(kind);
            append_format(rep.summary_csv, "%s,%s,%d,%.9g,%.9g,%.9g,%.9g,%d,%.9g,%.9g,%.9g\n",
                          env.c_str(), method.c_str(), m.samples, m.final_mean, m.final_q50,
                          m.final_q95, m.confusion.precision, m.confusion.precision_defined ? 1 : 0,
                          m.confusion.recall, m.confusion.accuracy, m.confusion.f1);
            SvgSeries series;
            series.label = env + "/" + method;
            series.color = svg_color(curves.size());
            for (std::size_t t = 0; t < m.step_mean.size(); ++t) {
                append_format(rep.step_csv, "%s,%s,%zu,%.9g,%.9g\n", env.c_str(), method.c_str(),
                              t, m.step_mean[t], m.step_std[t]);
                series.points.push_back(
                    {static_cast<double>(t + 1) * ds.dt_p, m.step_mean[t]});
            }
            curves.push_back(std::move(series));
            const auto& fin = pe.step_err.back();
            boxes.push_back({env + "/" + method, quantile(fin, 0.05), quantile(fin, 0.25),
                             quantile(fin, 0.5), quantile(fin, 0.75), quantile(fin, 0.95)});
        }
    }
    rep.step_svg =
        svg_line_chart(curves, "mean position error by prediction step", "horizon [s]",
                       "error [m]");
    rep.final_box_svg = svg_box_plot(boxes, "final-step position error", "error [m]");
    return rep;
}

std::string to_string(PlanMethod m) {
    switch (m) {
        case PlanMethod::fdm: return "fdm";
        case PlanMethod::fdm_no_risk: return "fdm_no_risk";
        case PlanMethod::constant_velocity: return "cv";
    }
    return "fdm";
}

PlanMethod plan_method_from_string(const std::string& s) {
    if (s == "fdm") return PlanMethod::fdm;
    if (s == "fdm_no_risk") return PlanMethod::fdm_no_risk;
    if (s == "cv") return PlanMethod::constant_velocity;
    throw std::invalid_argument("unknown plan method: " + s);
}

std::string to_string(EpisodeOutcome o) {
    switch (o) {
        case EpisodeOutcome::goal_reached: return "reached";
        case EpisodeOutcome::failure: return "failure";
        case EpisodeOutcome::timeout: return "timeout";
    }
    return "timeout";
}

EpisodeOutcome outcome_from_string(const std::string& s) {
    if (s == "reached") return EpisodeOutcome::goal_reached;
    if (s == "failure") return EpisodeOutcome::failure;
    if (s == "timeout") return EpisodeOutcome::timeout;
    throw std::invalid_argument("unknown episode outcome: " + s);
}

PlanMetrics metrics_from_episodes(const std::vector<PlanEpisodeRow>& rows) {
    PlanMetrics m;
    m.episodes = static_cast<int>(rows.size());
    if (rows.empty()) return m;
    int succ = 0;
    double len_succ = 0.0, len_all = 0.0, time_succ = 0.0, time_all = 0.0;
    for (const auto& r : rows) {
        len_all += r.path_length;
        time_all += r.path_time;
        if (r.outcome == EpisodeOutcome::goal_reached) {
            ++succ;
            len_succ += r.path_length;
            time_succ += r.path_time;
        }
    }
    m.success_pct = 100.0 * succ / static_cast<double>(rows.size());
    m.mpl_all = len_all / static_cast<double>(rows.size());
    m.mpt_all = time_all / static_cast<double>(rows.size());
    m.mpl_success = succ > 0 ? len_succ / succ : 0.0;
    m.mpt_success = succ > 0 ? time_succ / succ : 0.0;
    return m;
}

std::string format_episodes_csv(const std::vector<PlanEpisodeRow>& rows) {
    std::string out = "env,method,episode,outcome,path_length,path_time\n";
    for (const auto& r : rows)
        append_format(out, "%s,%s,%d,%s,%.17g,%.17g\n", to_string(r.kind).c_str(),
                      to_string(r.method).c_str(), r.episode, to_string(r.outcome).c_str(),
                      r.path_length, r.path_time);
    return out;
}

std::vector<PlanEpisodeRow> parse_episodes_csv(const std::string& csv) {
    const auto rows = parse_csv(csv);
    if (rows.empty() || rows[0].empty() || rows[0][0] != "env")
        throw std::invalid_argument("episode csv: missing header");
    std::vector<PlanEpisodeRow> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i];
        if (f.size() != 6) throw std::invalid_argument("episode csv: malformed row");
        PlanEpisodeRow r;
        r.kind = terrain_kind_from_string(f[0]);
        r.method = plan_method_from_string(f[1]);
        r.episode = std::stoi(f[2]);
        r.outcome = outcome_from_string(f[3]);
        r.path_length = std::stod(f[4]);
        r.path_time = std::stod(f[5]);
        out.push_back(r);
    }
    return out;
}

std::vector<std::uint8_t> traversable_cells(const TerrainGrid& grid, const SimParams& params) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(grid.W) * grid.H, 0);
    parallel_for(static_cast<std::size_t>(grid.H), [&](std::size_t iy) {
        for (int ix = 0; ix < grid.W; ++ix) {
            Se2Pose p{(ix + 0.5) * grid.cell_size, (static_cast<int>(iy) + 0.5) * grid.cell_size,
                      0.0};
            if (check_failure(p, grid, params)) continue;
            p.yaw = M_PI / 2.0;
            if (check_failure(p, grid, params)) continue;
            out[iy * static_cast<std::size_t>(grid.W) + static_cast<std::size_t>(ix)] = 1;
        }
    });
    return out;
}

std::vector<std::uint8_t> reachable_cells(const TerrainGrid& grid, const SimParams& params,
                                          const Se2Pose& start) {
    const auto open = traversable_cells(grid, params);
    std::vector<std::uint8_t> seen(open.size(), 0);
    const int sx = std::clamp(static_cast<int>(start.x / grid.cell_size), 0, grid.W - 1);
    const int sy = std::clamp(static_cast<int>(start.y / grid.cell_size), 0, grid.H - 1);
    const std::size_t s0 = static_cast<std::size_t>(sy) * grid.W + sx;
    if (!open[s0]) return seen;
    std::deque<std::pair<int, int>> queue{{sx, sy}};
    seen[s0] = 1;
    while (!queue.empty()) {
        const auto [cx, cy] = queue.front();
        queue.pop_front();
        constexpr int dx[] = {1, -1, 0, 0};
        constexpr int dy[] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
            const int nx = cx + dx[d], ny = cy + dy[d];
            if (!grid.cell_in_bounds(nx, ny)) continue;
            const std::size_t ni = static_cast<std::size_t>(ny) * grid.W + nx;
            if (!open[ni] || seen[ni]) continue;
            seen[ni] = 1;
            queue.emplace_back(nx, ny);
        }
    }
    return seen;
}

std::optional<Se2Pose> sample_reachable_goal(const TerrainGrid& grid, const SimParams& params,
                                             const Se2Pose& start, double dmin, double dmax,
                                             Rng& rng) {
    const auto reach = reachable_cells(grid, params, start);
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < reach.size(); ++i) {
        if (!reach[i]) continue;
        const double cx = (static_cast<double>(i % grid.W) + 0.5) * grid.cell_size;
        const double cy = (static_cast<double>(i / grid.W) + 0.5) * grid.cell_size;
        const double d = std::hypot(cx - start.x, cy - start.y);
        if (d >= dmin && d <= dmax) candidates.push_back(i);
    }
    if (candidates.empty()) return std::nullopt;
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    const std::size_t i = candidates[pick(rng)];
    return Se2Pose{(static_cast<double>(i % grid.W) + 0.5) * grid.cell_size,
                   (static_cast<double>(i / grid.W) + 0.5) * grid.cell_size, 0.0};
}

PlanBenchConfig::PlanBenchConfig() {
    mppi.population = 128;
    mppi.iterations = 2;
    mppi.gamma = 0.5;
}

PlanBenchReport run_planning_benchmark(FdmNet& net, const PlanBenchConfig& cfg,
                                       const SimParams& sim) {
    FdmNet cv = constant_velocity_net(net.config());
    const std::size_t episodes = static_cast<std::size_t>(std::max(cfg.episodes, 0));
    const std::size_t tasks = cfg.kinds.size() * episodes;
    std::vector<std::vector<PlanEpisodeRow>> slots(tasks);

    parallel_for(tasks, [&](std::size_t ti) {
        const std::size_t ki = ti / episodes;
        const int ep = static_cast<int>(ti % episodes);
        const TerrainKind kind = cfg.kinds[ki];
        for (int attempt = 0; attempt < 16; ++attempt) {
            const std::uint64_t tseed = hash_seed(hash_seed(cfg.seed, kTerrainStream + ki),
                                                  static_cast<std::uint64_t>(ep) * 131 + attempt);
            const TerrainGrid grid = generate_terrain(kind, tseed, cfg.terrain_size);
            Rng erng(hash_seed(tseed, 1));
            const auto start = sample_spawn_pose(grid, sim, erng);
            if (!start) continue;
            const auto goal =
                sample_reachable_goal(grid, sim, *start, cfg.goal_min, cfg.goal_max, erng);
            if (!goal) continue;
            SimState s0;
            s0.pose = *start;
            for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
                const PlanMethod method = cfg.methods[mi];
                MppiConfig mc = cfg.mppi;
                FdmNet* planner = &net;
                if (method == PlanMethod::fdm_no_risk) mc.lambda_risk = 0.0;
                if (method == PlanMethod::constant_velocity) planner = &cv;
                Rng mrng(hash_seed(tseed, 2 + mi));
                const EpisodeLog log =
                    run_receding_horizon(grid, sim, s0, *planner, *goal, mc, cfg.limits, mrng);
                slots[ti].push_back(
                    {kind, method, ep, log.outcome, log.path_length, log.path_time});
            }
            return;
        }
    });

    PlanBenchReport rep;
    for (const auto& slot : slots)
        rep.episodes.insert(rep.episodes.end(), slot.begin(), slot.end());

    rep.summary_csv =
        "env,method,episodes,success_pct,success_lo,success_hi,mpl_success,mpl_all,mpt_success,"
        "mpt_all\n";
    for (std::size_t ki = 0; ki < cfg.kinds.size(); ++ki)
        for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
            std::vector<PlanEpisodeRow> cell;
            std::vector<double> succ;
            for (const auto& r : rep.episodes)
                if (r.kind == cfg.kinds[ki] && r.method == cfg.methods[mi]) {
                    cell.push_back(r);
                    succ.push_back(r.outcome == EpisodeOutcome::goal_reached ? 100.0 : 0.0);
                }
            PlanMetrics m = metrics_from_episodes(cell);
            Rng crng(hash_seed(cfg.seed, kCiStream + ki * 16 + mi));
            const auto ci = bootstrap_ci(succ, cfg.bootstrap_resamples, crng);
            m.success_lo = ci[0];
            m.success_hi = ci[1];
            rep.rows.push_back({cfg.kinds[ki], cfg.methods[mi], m});
            append_format(rep.summary_csv, "%s,%s,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                          to_string(cfg.kinds[ki]).c_str(), to_string(cfg.methods[mi]).c_str(),
                          m.episodes, m.success_pct, m.success_lo, m.success_hi, m.mpl_success,
                          m.mpl_all, m.mpt_success, m.mpt_all);
        }
    rep.episodes_csv = format_episodes_csv(rep.episodes);
    return rep;
}

FinetuneReport run_finetune_experiment(const FdmNet& checkpoint, const FinetuneConfig& cfg,
                                       const SimParams& base, const SimParams& shifted,
                                       FdmNet* tuned_out) {
    auto collect = [&](const SimParams& sp, std::uint64_t stream, int count) {
        TrainConfig cc = cfg.collect;
        cc.model = checkpoint.config();
        cc.seed = hash_seed(cfg.seed, stream);
        Rng rng(hash_seed(cc.seed, 1));
        return collect_dataset(cc, sp, 0, nullptr, count, rng);
    };
    const Dataset base_train = collect(base, 0xb0, cfg.train_samples);
    const Dataset shift_train = collect(shifted, 0x5f, cfg.train_samples);
    const Dataset base_held = collect(base, 0xb1, cfg.heldout_samples);
    const Dataset shift_held = collect(shifted, 0x5e, cfg.heldout_samples);

    auto final_err = [&](FdmNet& n, const Dataset& ds) {
        return mean_of(prediction_errors(&n, ds, cfg.eval_batch).step_err.back());
    };

    FinetuneReport rep;
    FdmNet pre = checkpoint;
    rep.pre_base = final_err(pre, base_held);
    rep.pre_shifted = final_err(pre, shift_held);

    Rng trng(hash_seed(cfg.seed, 0x7d));
    FdmNet tuned = fine_tune(checkpoint, base_train, shift_train, cfg.steps, cfg.lr, cfg.batch,
                             cfg.weight_decay, trng);
    rep.post_base = final_err(tuned, base_held);
    rep.post_shifted = final_err(tuned, shift_held);
    rep.shifted_reduction_pct =
        rep.pre_shifted > 0.0 ? 100.0 * (rep.pre_shifted - rep.post_shifted) / rep.pre_shifted
                              : 0.0;
    rep.base_reduction_pct =
        rep.pre_base > 0.0 ? 100.0 * (rep.pre_base - rep.post_base) / rep.pre_base : 0.0;

    rep.csv = "domain,pre_error,post_error,relative_reduction_pct\n";
    append_format(rep.csv, "shifted,%.9g,%.9g,%.9g\n", rep.pre_shifted, rep.post_shifted,
                  rep.shifted_reduction_pct);
    append_format(rep.csv, "base,%.9g,%.9g,%.9g\n", rep.pre_base, rep.post_base,
                  rep.base_reduction_pct);
    if (tuned_out) *tuned_out = tuned;
    return rep;
}

}  // namespace fdm
