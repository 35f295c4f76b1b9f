#include "fdm/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <stdexcept>

#include "fdm/config.hpp"
#include "fdm/csv.hpp"
#include "fdm/evalbench.hpp"
#include "fdm/io.hpp"
#include "fdm/svg.hpp"
#include "fdm/threading.hpp"

namespace fdm {
namespace {

constexpr const char* kUsage =
    R"(usage: fdm <subcommand> [--key=value ...]

subcommands:
  gen-data    collect a dataset on one terrain kind (--sim.kind, --count)
  train       run the collect/train rounds; writes checkpoints and metrics
  finetune    adapt a checkpoint to the shifted embodiment (--model)
  eval-fdm    benchmark a checkpoint against the constant-velocity baseline (--model)
  plan        one receding-horizon episode; --goal=x,y[,yaw] in the start frame (--model)
  bench-plan  navigation success benchmark across planner methods (--model)
  plot        render a metrics or episode csv as svg (--input)

Keys live in sections {sim, sampler, fdm, mppi, eval}; top-level keys are
seed, out, threads, count, goal, model, input. --config=FILE loads a
sectioned key = value file first; remaining flags override it. The FDM_OUT
environment variable overrides the default output directory. Every run
writes <out>/config.resolved.
)";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Se2Pose parse_goal(const std::string& s) {
    const auto rows = parse_csv(s + "\n");
    Se2Pose g;
    g.x = std::stod(rows[0][0]);
    g.y = std::stod(rows[0][1]);
    g.yaw = rows[0].size() > 2 ? std::stod(rows[0][2]) : 0.0;
    return g;
}

std::string require_path(const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(std::string("missing required --") + flag);
    return value;
}

TrainConfig assemble_train(const RunConfig& rc) {
    TrainConfig cc = rc.train;
    cc.model = rc.fdm;
    cc.sampler = rc.sampler;
    cc.sampler.dt_p = rc.fdm.dt_p;
    cc.planner = rc.mppi;
    cc.terrain_size = rc.terrain_size;
    cc.seed = rc.seed;
    return cc;
}

int cmd_gen_data(const RunConfig& rc) {
    TrainConfig cc = assemble_train(rc);
    cc.kinds = {rc.terrain_kind};
    Rng rng(hash_seed(rc.seed, 0xda7a));
    const Dataset ds = collect_dataset(cc, rc.sim, 0, nullptr, rc.count, rng);
    const std::string path = rc.out_dir + "/dataset.fdmrb";
    save_dataset(ds, path);
    std::printf("wrote %s (%zu samples, %s)\n", path.c_str(), ds.samples.size(),
                to_string(rc.terrain_kind).c_str());
    return 0;
}

int cmd_train(const RunConfig& rc) {
    TrainConfig cc = assemble_train(rc);
    cc.out_dir = rc.out_dir;
    Rng rng(hash_seed(rc.seed, 0x17a1));
    const TrainResult res = train(cc, rc.sim, cc.rounds, rng);
    const auto rows = parse_csv(res.metrics_csv);
    if (rows.size() > 1)
        std::printf("final losses: pose=%s risk=%s stop=%s total=%s\n", rows.back()[2].c_str(),
                    rows.back()[3].c_str(), rows.back()[4].c_str(), rows.back()[5].c_str());
    std::printf("wrote %s/fdm_final.fdmck and %s/train_metrics.csv\n", rc.out_dir.c_str(),
                rc.out_dir.c_str());
    return 0;
}

int cmd_finetune(const RunConfig& rc) {
    const FdmNet checkpoint = FdmNet::load(require_path(rc.model_path, "model"));
    FinetuneConfig fc;
    fc.collect = assemble_train(rc);
    fc.seed = hash_seed(rc.seed, 0xf17e);
    FdmNet tuned = checkpoint;
    const FinetuneReport rep =
        run_finetune_experiment(checkpoint, fc, rc.sim, SimParams::shifted(), &tuned);
    atomic_write_file(rc.out_dir + "/finetune.csv", rep.csv);
    tuned.save(rc.out_dir + "/fdm_tuned.fdmck");
    std::printf("shifted error %.4f -> %.4f (%.1f%% reduction)\n", rep.pre_shifted,
                rep.post_shifted, rep.shifted_reduction_pct);
    std::printf("base error %.4f -> %.4f (%.1f%% reduction)\n", rep.pre_base, rep.post_base,
                rep.base_reduction_pct);
    std::printf("wrote %s/finetune.csv and %s/fdm_tuned.fdmck\n", rc.out_dir.c_str(),
                rc.out_dir.c_str());
    return 0;
}

int cmd_eval_fdm(const RunConfig& rc) {
    FdmNet net = FdmNet::load(require_path(rc.model_path, "model"));
    FdmBenchConfig bc;
    bc.collect = assemble_train(rc);
    bc.samples_per_kind = rc.eval.fdm_samples;
    bc.batch = rc.eval.batch;
    bc.delta_risk = rc.eval.delta_risk;
    bc.seed = hash_seed(rc.seed, 0xe7a1);
    const FdmBenchReport rep = run_fdm_benchmark(net, bc, rc.sim);
    atomic_write_file(rc.out_dir + "/fdm_summary.csv", rep.summary_csv);
    atomic_write_file(rc.out_dir + "/fdm_steps.csv", rep.step_csv);
    atomic_write_file(rc.out_dir + "/fdm_steps.svg", rep.step_svg);
    atomic_write_file(rc.out_dir + "/fdm_final_box.svg", rep.final_box_svg);
    std::fputs(rep.summary_csv.c_str(), stdout);
    std::printf("wrote fdm_summary.csv, fdm_steps.csv and svg plots in %s\n",
                rc.out_dir.c_str());
    return 0;
}

int cmd_plan(const RunConfig& rc) {
    FdmNet net = FdmNet::load(require_path(rc.model_path, "model"));
    const TerrainGrid grid =
        generate_terrain(rc.terrain_kind, hash_seed(rc.seed, 0x9147), rc.terrain_size);
    Rng rng(hash_seed(rc.seed, 0x914e));
    const auto start = sample_spawn_pose(grid, rc.sim, rng);
    if (!start) throw std::runtime_error("no feasible spawn pose on this terrain");
    const Se2Pose goal = se2_compose(*start, parse_goal(rc.goal));
    SimState s0;
    s0.pose = *start;
    const EpisodeLimits limits{rc.eval.max_time, rc.eval.goal_tolerance};
    const EpisodeLog log =
        run_receding_horizon(grid, rc.sim, s0, net, goal, rc.mppi, limits, rng);

    atomic_write_file(rc.out_dir + "/episode.csv", episode_csv(log));
    SvgSeries path;
    path.label = to_string(log.outcome);
    path.color = log.outcome == EpisodeOutcome::goal_reached ? "#2ca02c" : "#d62728";
    for (const EpisodeRow& r : log.rows) path.points.push_back({r.x, r.y});
    SvgSeries goal_mark;
    goal_mark.label = "goal";
    goal_mark.color = "#1f77b4";
    goal_mark.points.push_back({goal.x, goal.y});
    atomic_write_file(rc.out_dir + "/path.svg",
                      svg_path_overlay(grid, {path, goal_mark},
                                       "episode path (" + to_string(log.outcome) + ")"));
    std::printf("outcome=%s path_length=%.3f path_time=%.3f\n", to_string(log.outcome).c_str(),
                log.path_length, log.path_time);
    std::printf("wrote %s/episode.csv and %s/path.svg\n", rc.out_dir.c_str(),
                rc.out_dir.c_str());
    return 0;
}

int cmd_bench_plan(const RunConfig& rc) {
    FdmNet net = FdmNet::load(require_path(rc.model_path, "model"));
    PlanBenchConfig pc;
    pc.mppi = rc.mppi;
    pc.episodes = rc.eval.plan_episodes;
    pc.terrain_size = rc.terrain_size;
    pc.goal_min = rc.eval.goal_min;
    pc.goal_max = rc.eval.goal_max;
    pc.limits = {rc.eval.max_time, rc.eval.goal_tolerance};
    pc.bootstrap_resamples = rc.eval.bootstrap;
    pc.seed = hash_seed(rc.seed, 0xbea2);
    const PlanBenchReport rep = run_planning_benchmark(net, pc, rc.sim);
    atomic_write_file(rc.out_dir + "/plan_summary.csv", rep.summary_csv);
    atomic_write_file(rc.out_dir + "/plan_episodes.csv", rep.episodes_csv);
    std::fputs(rep.summary_csv.c_str(), stdout);
    std::printf("wrote plan_summary.csv and plan_episodes.csv in %s\n", rc.out_dir.c_str());
    return 0;
}

int cmd_plot(const RunConfig& rc) {
    const std::string input = require_path(rc.input_path, "input");
    const auto bytes = read_file(input);
    const auto rows = parse_csv(std::string(bytes.begin(), bytes.end()));
    if (rows.empty()) throw std::runtime_error("plot: empty csv " + input);
    const auto& header = rows[0];

    std::vector<SvgSeries> series;
    std::string title = input, x_label, y_label;
    const std::size_t slash = title.find_last_of('/');
    if (slash != std::string::npos) title = title.substr(slash + 1);

    if (header.size() == 5 && header[0] == "env" && header[2] == "step") {
        x_label = "step";
        y_label = header[3];
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const std::string key = rows[i][0] + "/" + rows[i][1];
            SvgSeries* s = nullptr;
            for (auto& existing : series)
                if (existing.label == key) s = &existing;
            if (!s) {
                series.push_back({key, svg_color(series.size()), {}});
                s = &series.back();
            }
            s->points.push_back({std::stod(rows[i][2]), std::stod(rows[i][3])});
        }
    } else if (header.size() >= 3 && header[0] == "round" && header[1] == "epoch") {
        x_label = "epoch";
        y_label = "loss";
        for (std::size_t c = 2; c < header.size(); ++c)
            series.push_back({header[c], svg_color(c - 2), {}});
        for (std::size_t i = 1; i < rows.size(); ++i)
            for (std::size_t c = 2; c < header.size(); ++c)
                series[c - 2].points.push_back(
                    {static_cast<double>(i - 1), std::stod(rows[i][c])});
    } else if (header.size() >= 3 && header[0] == "t" && header[1] == "x") {
        x_label = "x [m]";
        y_label = "y [m]";
        series.push_back({"path", svg_color(0), {}});
        for (std::size_t i = 1; i < rows.size(); ++i)
            series[0].points.push_back({std::stod(rows[i][1]), std::stod(rows[i][2])});
    } else {
        throw std::runtime_error("plot: unrecognized csv header in " + input);
    }

    std::string out_path = input;
    if (out_path.size() > 4 && out_path.substr(out_path.size() - 4) == ".csv")
        out_path.resize(out_path.size() - 4);
    out_path += ".svg";
    atomic_write_file(out_path, svg_line_chart(series, title, x_label, y_label));
    std::printf("wrote %s\n", out_path.c_str());
    return 0;
}

int dispatch(const std::string& sub, const RunConfig& rc) {
    if (sub == "gen-data") return cmd_gen_data(rc);
    if (sub == "train") return cmd_train(rc);
    if (sub == "finetune") return cmd_finetune(rc);
    if (sub == "eval-fdm") return cmd_eval_fdm(rc);
    if (sub == "plan") return cmd_plan(rc);
    if (sub == "bench-plan") return cmd_bench_plan(rc);
    if (sub == "plot") return cmd_plot(rc);
    throw UsageError("unknown subcommand: " + sub);
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    const std::uint32_t probe = 1;
    if (*reinterpret_cast<const std::uint8_t*>(&probe) != 1) {
        std::fprintf(stderr, "big-endian hosts are not supported\n");
        return 1;
    }
    if (args.empty() || args[0] == "--help" || args[0] == "help") {
        std::fputs(kUsage, args.empty() ? stderr : stdout);
        return args.empty() ? 2 : 0;
    }
    const std::string sub = args[0];

    RunConfig rc;
    try {
        // Flags are key = value pairs; --config loads a file first so that
        // the remaining flags override its values.
        std::vector<std::pair<std::string, std::string>> flags;
        for (std::size_t i = 1; i < args.size(); ++i) {
            const std::string& arg = args[i];
            if (arg.size() < 3 || arg.substr(0, 2) != "--")
                throw UsageError("unexpected argument: " + arg);
            std::string key = arg.substr(2), value;
            const std::size_t eq = key.find('=');
            if (eq != std::string::npos) {
                value = key.substr(eq + 1);
                key.resize(eq);
            } else {
                if (i + 1 >= args.size()) throw UsageError("missing value for --" + key);
                value = args[++i];
            }
            flags.emplace_back(std::move(key), std::move(value));
        }
        for (const auto& [key, value] : flags)
            if (key == "config") {
                const auto bytes = read_file(value);
                rc = parse_config_text(std::string(bytes.begin(), bytes.end()), rc);
            }
        if (const char* env_out = std::getenv("FDM_OUT"); env_out && *env_out)
            rc.out_dir = env_out;
        for (const auto& [key, value] : flags)
            if (key != "config") set_config_key(rc, key, value);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n%s", e.what(), kUsage);
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }

    try {
        if (rc.threads > 0) set_worker_count(rc.threads);
        ensure_dir(rc.out_dir);
        atomic_write_file(rc.out_dir + "/config.resolved", resolved_config(rc));
        return dispatch(sub, rc);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n%s", e.what(), kUsage);
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace fdm
