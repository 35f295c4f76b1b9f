#include <doctest.h>

#include <cmath>
#include <cstring>

#include "fdm/csv.hpp"
#include "fdm/evalbench.hpp"
#include "fdm/svg.hpp"

using namespace fdm;

namespace {

FdmConfig tiny_model() {
    FdmConfig fc;
    fc.history_hidden = 12;
    fc.history_layers = 1;
    fc.pred_hidden = 16;
    fc.pred_layers = 1;
    fc.action_enc = 8;
    fc.state_head_hidden = 16;
    fc.risk_head_hidden = 8;
    fc.dropout = 0.0;
    return fc;
}

TrainConfig tiny_collect() {
    TrainConfig cc;
    cc.envs = 4;
    cc.sequences_per_episode = 2;
    cc.terrain_size = 60;
    return cc;
}

}  // namespace

TEST_CASE("confusion metrics follow the standard definitions") {
    const ConfusionMetrics m = confusion_from_counts(9, 1, 1, 89);
    CHECK(m.precision == doctest::Approx(0.9));
    CHECK(m.recall == doctest::Approx(0.9));
    CHECK(m.accuracy == doctest::Approx(0.98));
    CHECK(m.f1 == doctest::Approx(0.9));
    CHECK(m.precision_defined);

    SUBCASE("perfect predictions score 1 everywhere") {
        const std::vector<std::vector<double>> risks = {{0.9, 0.1}, {0.0, 0.0}, {0.2, 0.8}};
        const std::vector<std::vector<double>> labels = {{1.0, 0.0}, {0.0, 0.0}, {0.0, 1.0}};
        const ConfusionMetrics p = failure_confusion(risks, labels, 0.5);
        CHECK(p.precision == 1.0);
        CHECK(p.recall == 1.0);
        CHECK(p.accuracy == 1.0);
        CHECK(p.f1 == 1.0);
    }
    SUBCASE("all-negative predictor reports zero precision with the flag cleared") {
        const std::vector<std::vector<double>> risks = {{0.1, 0.2}, {0.0, 0.3}};
        const std::vector<std::vector<double>> labels = {{1.0, 0.0}, {0.0, 0.0}};
        const ConfusionMetrics p = failure_confusion(risks, labels, 0.5);
        CHECK_FALSE(p.precision_defined);
        CHECK(p.precision == 0.0);
        CHECK(p.recall == 0.0);
        CHECK(p.f1 == 0.0);
        CHECK(p.accuracy == doctest::Approx(0.5));
    }
    SUBCASE("a sequence is positive when any step clears the threshold") {
        const std::vector<std::vector<double>> risks = {{0.2, 0.6}, {0.4, 0.4}};
        const std::vector<std::vector<double>> labels = {{0.0, 1.0}, {0.0, 0.0}};
        const ConfusionMetrics p = failure_confusion(risks, labels, 0.5);
        CHECK(p.tp == 1);
        CHECK(p.tn == 1);
        CHECK(p.fp == 0);
        CHECK(p.fn == 0);
    }
    SUBCASE("the f1 identity holds for arbitrary counts") {
        Rng rng(11);
        std::uniform_int_distribution<int> c(0, 40);
        for (int i = 0; i < 200; ++i) {
            const ConfusionMetrics p = confusion_from_counts(c(rng), c(rng), c(rng), c(rng));
            if (p.precision + p.recall > 0.0)
                CHECK(p.f1 ==
                      doctest::Approx(2.0 * p.precision * p.recall / (p.precision + p.recall)));
            else
                CHECK(p.f1 == 0.0);
            CHECK(p.precision >= 0.0);
            CHECK(p.precision <= 1.0);
            CHECK(p.recall >= 0.0);
            CHECK(p.recall <= 1.0);
            CHECK(p.accuracy <= 1.0);
            CHECK(p.f1 <= 1.0);
        }
    }
    SUBCASE("empty or misaligned inputs are rejected") {
        CHECK_THROWS_AS(failure_confusion({}, {}, 0.5), std::invalid_argument);
        CHECK_THROWS_AS(failure_confusion({{0.1}}, {{0.1}, {0.2}}, 0.5), std::invalid_argument);
        CHECK_THROWS_AS(failure_confusion({{0.1, 0.2}}, {{0.1}}, 0.5), std::invalid_argument);
    }
}

TEST_CASE("constant-velocity prediction integrates the commands") {
    ActionSeq seq;
    seq.dt_p = 0.5;
    seq.twists.assign(10, Twist{1.0, 0.0, 0.0});
    const PoseTrajectory straight = constant_velocity_predict(seq);
    REQUIRE(straight.poses.size() == 10);
    CHECK(straight.poses.back().x == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(straight.poses.back().y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(straight.poses.back().yaw == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(straight.risks.empty());

    seq.twists.assign(10, Twist{});
    for (const auto& p : constant_velocity_predict(seq).poses) {
        CHECK(p.x == 0.0);
        CHECK(p.y == 0.0);
        CHECK(p.yaw == 0.0);
    }

    SUBCASE("matches a network with zeroed residual and risk heads") {
        const FdmConfig fc = tiny_model();
        FdmNet net = constant_velocity_net(fc);
        std::vector<double> hist_states(static_cast<std::size_t>(fc.n) * 3, 0.0);
        std::vector<double> hist_proprio(static_cast<std::size_t>(fc.n) * fc.proprio_dim, 0.0);
        std::vector<float> scan(static_cast<std::size_t>(fc.scan_u) * fc.scan_v, 0.0f);
        FdmBatch obs = make_observation(hist_states, hist_proprio, scan, fc);

        Rng rng(5);
        ActionSeq cmds;
        cmds.dt_p = fc.dt_p;
        for (int t = 0; t < fc.n; ++t)
            cmds.twists.push_back(
                {uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)});
        for (int t = 0; t < fc.n; ++t) {
            obs.actions.ptr()[t * 3 + 0] = cmds.twists[t].vx;
            obs.actions.ptr()[t * 3 + 1] = cmds.twists[t].vy;
            obs.actions.ptr()[t * 3 + 2] = cmds.twists[t].omega;
        }
        const FdmPrediction pred = net.infer(obs);
        const PoseTrajectory cv = constant_velocity_predict(cmds);
        for (int t = 0; t < fc.n; ++t) {
            CHECK(pred.poses.ptr()[t * 3 + 0] == doctest::Approx(cv.poses[t].x).epsilon(1e-9));
            CHECK(pred.poses.ptr()[t * 3 + 1] == doctest::Approx(cv.poses[t].y).epsilon(1e-9));
            CHECK(pred.risks.ptr()[t] == doctest::Approx(0.5).epsilon(1e-12));
        }
    }
}

TEST_CASE("quantiles interpolate and bootstrap intervals bracket the mean") {
    CHECK(quantile({5.0, 1.0, 3.0, 2.0, 4.0}, 0.5) == doctest::Approx(3.0));
    CHECK(quantile({5.0, 1.0, 3.0, 2.0, 4.0}, 0.0) == doctest::Approx(1.0));
    CHECK(quantile({5.0, 1.0, 3.0, 2.0, 4.0}, 1.0) == doctest::Approx(5.0));
    CHECK(quantile({0.0, 10.0}, 0.3) == doctest::Approx(3.0));
    CHECK(quantile({7.0}, 0.95) == doctest::Approx(7.0));
    CHECK_THROWS_AS(quantile({}, 0.5), std::invalid_argument);

    const std::vector<double> flat(20, 4.0);
    Rng rng(3);
    const auto ci0 = bootstrap_ci(flat, 200, rng);
    CHECK(ci0[0] == 4.0);
    CHECK(ci0[1] == 4.0);

    std::vector<double> bern;
    for (int i = 0; i < 60; ++i) bern.push_back(i % 3 == 0 ? 100.0 : 0.0);
    Rng a(9), b(9);
    const auto ci_a = bootstrap_ci(bern, 500, a);
    const auto ci_b = bootstrap_ci(bern, 500, b);
    CHECK(ci_a[0] == ci_b[0]);
    CHECK(ci_a[1] == ci_b[1]);
    const double mu = 100.0 / 3.0;
    CHECK(ci_a[0] <= mu);
    CHECK(ci_a[1] >= mu);
    CHECK(ci_a[0] >= 0.0);
    CHECK(ci_a[1] <= 100.0);
}

TEST_CASE("prediction errors agree with direct integration") {
    Dataset ds;
    ds.n = 10;
    FdmSample s;
    s.n = ds.n;
    s.history_states.assign(static_cast<std::size_t>(ds.n) * 3, 0.0f);
    s.history_proprio.assign(static_cast<std::size_t>(ds.n) * FdmSample::kProprioDim, 0.0f);
    s.scan.values.assign(32 * 32, 0.0f);
    s.actions.assign(static_cast<std::size_t>(ds.n) * 3, 0.0f);
    for (int t = 0; t < ds.n; ++t) s.actions[t * 3] = 0.8f;
    ActionSeq seq;
    seq.dt_p = ds.dt_p;
    for (int t = 0; t < ds.n; ++t) seq.twists.push_back({0.8, 0.0, 0.0});
    const PoseTrajectory truth = constant_velocity_predict(seq);
    s.label_poses.assign(static_cast<std::size_t>(ds.n) * 3, 0.0f);
    for (int t = 0; t < ds.n; ++t) {
        s.label_poses[t * 3 + 0] = static_cast<float>(truth.poses[t].x) + 0.25f;
        s.label_poses[t * 3 + 1] = static_cast<float>(truth.poses[t].y);
    }
    s.label_risks.assign(static_cast<std::size_t>(ds.n), 0);
    s.label_risks.back() = 1;
    ds.samples = {s, s};

    const PredictionErrors pe = prediction_errors(nullptr, ds, 8);
    REQUIRE(pe.step_err.size() == 10);
    for (int t = 0; t < ds.n; ++t)
        for (double e : pe.step_err[t]) CHECK(e == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(pe.risks[0] == std::vector<double>(10, 0.0));
    CHECK(pe.labels[1].back() == 1.0);

    const FdmMetrics m = summarize_errors(pe, 0.5);
    CHECK(m.samples == 2);
    CHECK(m.final_mean == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(m.final_q50 == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(m.step_std[0] == doctest::Approx(0.0));
    CHECK_FALSE(m.confusion.precision_defined);
    CHECK(m.confusion.fn == 2);

    FdmConfig wrong = tiny_model();
    wrong.n = 4;
    FdmNet net(wrong, 1);
    CHECK_THROWS_AS(prediction_errors(&net, ds, 8), std::invalid_argument);
}

TEST_CASE("model benchmark emits consistent, reproducible reports") {
    FdmNet net(tiny_model(), 21);
    net.set_norm(NormStats::identity(net.config().proprio_dim));
    FdmBenchConfig cfg;
    cfg.kinds = {TerrainKind::plane, TerrainKind::obstacles2d};
    cfg.samples_per_kind = 40;
    cfg.batch = 32;
    cfg.collect = tiny_collect();
    cfg.seed = 77;

    const SimParams sim = SimParams::nominal();
    const FdmBenchReport rep = run_fdm_benchmark(net, cfg, sim);
    REQUIRE(rep.rows.size() == 4);
    for (const auto& row : rep.rows) {
        CHECK(row.metrics.samples == 40);
        CHECK(row.metrics.final_mean >= 0.0);
        CHECK(row.metrics.final_q50 <= row.metrics.final_q95);
        const auto& c = row.metrics.confusion;
        if (c.precision + c.recall > 0.0)
            CHECK(c.f1 ==
                  doctest::Approx(2.0 * c.precision * c.recall / (c.precision + c.recall)));
        if (row.method == "cv") CHECK_FALSE(c.precision_defined);
        for (std::size_t t = 1; t < row.metrics.step_mean.size(); ++t)
            CHECK(row.metrics.step_mean[t] >= 0.0);
    }
    const auto summary = parse_csv(rep.summary_csv);
    CHECK(summary.size() == 5);
    CHECK(summary[0][0] == "env");
    const auto steps = parse_csv(rep.step_csv);
    CHECK(steps.size() == 1 + 4 * 10);
    CHECK(rep.step_svg.find("<svg") != std::string::npos);
    CHECK(rep.step_svg.find("</svg>") != std::string::npos);
    CHECK(rep.final_box_svg.find("<rect") != std::string::npos);

    const FdmBenchReport again = run_fdm_benchmark(net, cfg, sim);
    CHECK(rep.summary_csv == again.summary_csv);
    CHECK(rep.step_csv == again.step_csv);
    CHECK(rep.step_svg == again.step_svg);
    CHECK(rep.final_box_svg == again.final_box_svg);
}

TEST_CASE("plan metrics aggregate episode rows and survive the csv round trip") {
    std::vector<PlanEpisodeRow> rows;
    rows.push_back({TerrainKind::plane, PlanMethod::fdm, 0, EpisodeOutcome::goal_reached,
                    4.0, 8.0});
    rows.push_back({TerrainKind::plane, PlanMethod::fdm, 1, EpisodeOutcome::failure, 2.0, 3.0});
    rows.push_back({TerrainKind::plane, PlanMethod::fdm, 2, EpisodeOutcome::goal_reached,
                    6.0, 10.0});

    const PlanMetrics m = metrics_from_episodes(rows);
    CHECK(m.episodes == 3);
    CHECK(m.success_pct == doctest::Approx(200.0 / 3.0));
    CHECK(m.mpl_success == doctest::Approx(5.0));
    CHECK(m.mpl_all == doctest::Approx(4.0));
    CHECK(m.mpt_success == doctest::Approx(9.0));
    CHECK(m.mpt_all == doctest::Approx(7.0));

    rows[0].path_length = 4.000000013370001;
    rows[2].path_time = 10.999999999999071;
    const std::string csv = format_episodes_csv(rows);
    const auto parsed = parse_episodes_csv(csv);
    REQUIRE(parsed.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(parsed[i].kind == rows[i].kind);
        CHECK(parsed[i].method == rows[i].method);
        CHECK(parsed[i].episode == rows[i].episode);
        CHECK(parsed[i].outcome == rows[i].outcome);
        CHECK(parsed[i].path_length == rows[i].path_length);
        CHECK(parsed[i].path_time == rows[i].path_time);
    }
    const PlanMetrics back = metrics_from_episodes(parsed);
    CHECK(back.success_pct == metrics_from_episodes(rows).success_pct);
    CHECK(back.mpl_all == metrics_from_episodes(rows).mpl_all);
    CHECK(back.mpt_success == metrics_from_episodes(rows).mpt_success);

    CHECK(parse_episodes_csv("env,method,episode,outcome,path_length,path_time\n").empty());
    CHECK_THROWS_AS(parse_episodes_csv("bogus\n"), std::invalid_argument);
    CHECK(metrics_from_episodes({}).episodes == 0);
}

TEST_CASE("reachability vetting only offers goals the grid can reach") {
    const SimParams sim = SimParams::nominal();
    TerrainGrid grid = generate_terrain(TerrainKind::plane, 4, 60);

    const Se2Pose start{3.0, 3.0, 0.0};
    const auto open = traversable_cells(grid, sim);
    const auto reach = reachable_cells(grid, sim, start);
    std::size_t open_count = 0, reach_count = 0;
    for (std::size_t i = 0; i < open.size(); ++i) {
        open_count += open[i];
        reach_count += reach[i];
        CHECK(reach[i] <= open[i]);
    }
    CHECK(open_count > 0);
    CHECK(reach_count == open_count);

    Rng rng(12);
    const auto goal = sample_reachable_goal(grid, sim, start, 1.0, 2.0, rng);
    REQUIRE(goal.has_value());
    const double d = std::hypot(goal->x - start.x, goal->y - start.y);
    CHECK(d >= 1.0);
    CHECK(d <= 2.0);
    Rng rng2(12);
    const auto goal2 = sample_reachable_goal(grid, sim, start, 1.0, 2.0, rng2);
    CHECK(goal->x == goal2->x);
    CHECK(goal->y == goal2->y);

    SUBCASE("a wall ring leaves outside goals unreachable") {
        for (int iy = 0; iy < grid.H; ++iy)
            for (int ix = 0; ix < grid.W; ++ix) {
                const double cx = (ix + 0.5) * grid.cell_size;
                const double cy = (iy + 0.5) * grid.cell_size;
                const double r = std::hypot(cx - start.x, cy - start.y);
                if (r >= 1.0 && r <= 1.6) grid.h_ref(ix, iy) = 2.0f;
            }
        Rng rng3(12);
        CHECK_FALSE(sample_reachable_goal(grid, sim, start, 2.0, 2.6, rng3).has_value());
        const auto inside = sample_reachable_goal(grid, sim, start, 0.4, 0.6, rng3);
        CHECK(inside.has_value());
    }
}

TEST_CASE("planning benchmark pairs methods per episode and reaches plane goals") {
    FdmNet net(tiny_model(), 33);
    net.set_norm(NormStats::identity(net.config().proprio_dim));

    PlanBenchConfig cfg;
    cfg.kinds = {TerrainKind::plane};
    cfg.methods = {PlanMethod::constant_velocity};
    cfg.episodes = 4;
    cfg.terrain_size = 60;
    cfg.limits.max_time = 30.0;
    cfg.bootstrap_resamples = 200;
    cfg.seed = 404;

    const SimParams sim = SimParams::nominal();
    const PlanBenchReport rep = run_planning_benchmark(net, cfg, sim);
    REQUIRE(rep.rows.size() == 1);
    REQUIRE(rep.episodes.size() == 4);
    const PlanMetrics& m = rep.rows[0].metrics;
    CHECK(m.episodes == 4);
    CHECK(m.success_pct >= 75.0);
    CHECK(m.mpl_all >= 0.0);
    CHECK(m.success_lo <= m.success_pct);
    CHECK(m.success_hi >= m.success_pct);

    const PlanMetrics recomputed = metrics_from_episodes(parse_episodes_csv(rep.episodes_csv));
    CHECK(recomputed.success_pct == m.success_pct);
    CHECK(recomputed.mpl_success == m.mpl_success);
    CHECK(recomputed.mpl_all == m.mpl_all);
    CHECK(recomputed.mpt_success == m.mpt_success);
    CHECK(recomputed.mpt_all == m.mpt_all);

    const PlanBenchReport again = run_planning_benchmark(net, cfg, sim);
    CHECK(rep.episodes_csv == again.episodes_csv);
    CHECK(rep.summary_csv == again.summary_csv);
}

TEST_CASE("fine-tune experiment reports before/after errors per domain") {
    FdmNet net(tiny_model(), 9);
    net.set_norm(NormStats::identity(net.config().proprio_dim));

    FinetuneConfig cfg;
    cfg.collect = tiny_collect();
    cfg.train_samples = 24;
    cfg.heldout_samples = 16;
    cfg.steps = 5;
    cfg.batch = 8;
    cfg.eval_batch = 16;
    cfg.seed = 55;

    const SimParams base = SimParams::nominal();
    const SimParams shifted = SimParams::shifted();
    FdmNet tuned = net;
    const FinetuneReport rep = run_finetune_experiment(net, cfg, base, shifted, &tuned);

    CHECK(rep.pre_shifted > 0.0);
    CHECK(rep.post_shifted > 0.0);
    CHECK(rep.shifted_reduction_pct ==
          doctest::Approx(100.0 * (rep.pre_shifted - rep.post_shifted) / rep.pre_shifted));
    CHECK(rep.base_reduction_pct ==
          doctest::Approx(100.0 * (rep.pre_base - rep.post_base) / rep.pre_base));
    const auto rows = parse_csv(rep.csv);
    REQUIRE(rows.size() == 3);
    CHECK(rows[1][0] == "shifted");
    CHECK(rows[2][0] == "base");
    CHECK(rows[0].size() == 4);

    SUBCASE("a zero shift leaves errors in the same regime") {
        const FinetuneReport same = run_finetune_experiment(net, cfg, base, base);
        CHECK(same.post_shifted / same.pre_shifted > 0.5);
        CHECK(same.post_shifted / same.pre_shifted < 1.5);
    }
}
