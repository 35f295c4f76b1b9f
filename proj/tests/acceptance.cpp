// End-to-end acceptance gate. Each criterion prints one PASS/FAIL line; the
// binary exits nonzero when any criterion fails. Heavy criteria share one
// desk-scale training run; every threshold is pinned here as a constant.

#include "fdm/evalbench.hpp"
#include "fdm/gradcheck.hpp"
#include "fdm/io.hpp"
#include "fdm/model.hpp"
#include "fdm/mppi.hpp"
#include "fdm/replay.hpp"
#include "fdm/rng.hpp"
#include "fdm/sampling.hpp"
#include "fdm/sim.hpp"
#include "fdm/terrain.hpp"
#include "fdm/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

using namespace fdm;

namespace {

constexpr double kGradTol = 1e-4;          // max relative error vs finite differences
constexpr double kGradBudgetSec = 60.0;
constexpr double kCvMatchTol = 1e-12;      // max pose deviation from closed-form rollout
constexpr double kTrainBudgetSec = 1800.0;
constexpr double kErrReduction = 0.40;     // final-step error reduction vs constant velocity
constexpr double kF1Obstacles = 0.80;
constexpr double kF1Stairs = 0.75;
constexpr double kScanF1Drop = 0.05;       // F1 lost when the height scan is removed
constexpr double kScanErrRise = 0.30;      // relative final-error increase, no scan
constexpr double kProprioErrRise = 0.10;   // relative final-error increase, no proprio
constexpr double kPlanBudgetSec = 1200.0;
constexpr double kStairsGapPp = 15.0;      // success gap over constant velocity, stairs
constexpr double kTuneReductionPct = 20.0; // shifted-domain error reduction
constexpr double kTuneForgetCapPct = 25.0; // tolerated base-domain degradation
constexpr double kWeightSumTol = 1e-9;
constexpr double kWeightShiftTol = 1e-12;
constexpr std::uint64_t kSeed = 0xacce55ULL;

struct Result {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

std::vector<Result> g_results;

bool recorded(int id) {
    for (const Result& r : g_results)
        if (r.id == id) return true;
    return false;
}

void record(int id, std::string name, bool pass, std::string detail) {
    if (recorded(id)) return;
    g_results.push_back({id, std::move(name), pass, std::move(detail)});
    const Result& r = g_results.back();
    std::fprintf(stderr, "[acceptance] %s %2d: %s (%s)\n", r.pass ? "PASS" : "FAIL", r.id,
                 r.name.c_str(), r.detail.c_str());
    std::fflush(stderr);
}

void note(const char* msg) {
    std::fprintf(stderr, "[acceptance] %s\n", msg);
    std::fflush(stderr);
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string format(const char* fmt, ...) {
    va_list ap;
    va_start(ap, fmt);
    char buf[512];
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    return buf;
}

FdmBatch random_batch(const FdmConfig& cfg, int B, double action_scale, Rng& rng) {
    std::vector<FdmSample> samples;
    for (int b = 0; b < B; ++b) {
        FdmSample s;
        s.n = cfg.n;
        s.history_states.resize(static_cast<std::size_t>(cfg.n) * 3);
        s.history_proprio.resize(static_cast<std::size_t>(cfg.n) * FdmSample::kProprioDim);
        s.actions.resize(static_cast<std::size_t>(cfg.n) * 3);
        s.label_poses.resize(static_cast<std::size_t>(cfg.n) * 3);
        s.label_risks.resize(static_cast<std::size_t>(cfg.n));
        for (auto& v : s.history_states) v = static_cast<float>(uniform(rng, -0.5, 0.5));
        for (auto& v : s.history_proprio) v = static_cast<float>(uniform(rng, -1.0, 1.0));
        for (auto& v : s.actions)
            v = static_cast<float>(uniform(rng, -action_scale, action_scale));
        for (auto& v : s.label_poses) v = static_cast<float>(uniform(rng, -2.0, 2.0));
        for (auto& v : s.label_risks) v = rng() % 2;
        s.scan.u = cfg.scan_u;
        s.scan.v = cfg.scan_v;
        s.scan.values.resize(static_cast<std::size_t>(cfg.scan_u) * cfg.scan_v);
        s.scan.occluded.assign(s.scan.values.size(), 0);
        for (auto& v : s.scan.values) v = static_cast<float>(uniform(rng, -0.5, 0.5));
        samples.push_back(std::move(s));
    }
    return make_batch(samples, cfg);
}

std::string temp_path(const char* stem) {
    return (std::filesystem::temp_directory_path() / stem).string();
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness on the full network graph.

void criterion_gradients() {
    const auto t0 = Clock::now();
    FdmConfig cfg;
    cfg.dropout = 0.0;       // the check re-runs forward; it must be deterministic
    cfg.delta_risk = 1e-6;   // keep the stop gate active and away from its step
    FdmNet net(cfg, 43);
    net.set_norm(NormStats::identity(cfg.proprio_dim));
    Rng rng(hash_seed(kSeed, 0x01));
    FdmBatch batch = random_batch(cfg, 4, 0.5, rng);
    Rng fwd_rng(1);
    auto loss_fn = [&]() {
        net.zero_grad();
        net.clear_caches();
        FdmPrediction pred = net.forward(batch, true, fwd_rng);
        FdmLosses l = compute_losses(pred, batch, cfg);
        net.backward(pred, batch);
        return l.total;
    };
    Rng probe_rng(hash_seed(kSeed, 0x02));
    const double err = finite_diff_check(loss_fn, net.params(), 1e-5, 2, probe_rng);
    const double secs = seconds_since(t0);
    record(1, "analytic gradients match central finite differences",
           err < kGradTol && secs < kGradBudgetSec,
           format("max rel err %.2e (tol %.0e), %.1f s (budget %.0f s)", err, kGradTol, secs,
                  kGradBudgetSec));
}

// ---------------------------------------------------------------------------
// 2. Zeroed residual head reproduces the closed-form rollout.

void criterion_cv_identity() {
    FdmConfig cfg;
    FdmNet net = constant_velocity_net(cfg);
    Rng rng(hash_seed(kSeed, 0x03));
    FdmBatch batch = random_batch(cfg, 100, 2.0, rng);  // scale 2 exercises clipping
    FdmPrediction pred = net.infer(batch);
    double max_diff = 0.0;
    for (int b = 0; b < batch.B; ++b) {
        ActionSeq seq;
        seq.dt_p = cfg.dt_p;
        for (int k = 0; k < cfg.n; ++k) {
            const std::size_t o = (static_cast<std::size_t>(b) * cfg.n + k) * 3;
            seq.twists.push_back({batch.actions[o], batch.actions[o + 1], batch.actions[o + 2]});
        }
        PoseTrajectory ref = constant_velocity_predict(seq);
        for (int k = 0; k < cfg.n; ++k) {
            const std::size_t o = (static_cast<std::size_t>(b) * cfg.n + k) * 3;
            max_diff = std::max(max_diff, std::abs(pred.poses[o] - ref.poses[k].x));
            max_diff = std::max(max_diff, std::abs(pred.poses[o + 1] - ref.poses[k].y));
            max_diff = std::max(max_diff, std::abs(pred.poses[o + 2] - ref.poses[k].yaw));
        }
    }
    record(2, "zeroed residual head reproduces constant-velocity rollouts",
           max_diff < kCvMatchTol,
           format("max pose diff %.2e over 100 sequences (tol %.0e)", max_diff, kCvMatchTol));
}

// ---------------------------------------------------------------------------
// 9. Planner weight algebra.

void criterion_weights() {
    Rng rng(hash_seed(kSeed, 0x04));
    double worst_sum = 0.0, worst_shift = 0.0;
    int argmax_breaks = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int C = 2 + static_cast<int>(rng() % 63);
        const double gamma = uniform(rng, 0.05, 2.0);
        std::vector<double> rewards(C);
        for (double& r : rewards) r = uniform(rng, -50.0, 10.0);
        const std::vector<double> w = mppi_weights(rewards, gamma);

        double sum = 0.0;
        for (double v : w) sum += v;
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));

        const double shift = uniform(rng, -100.0, 100.0);
        std::vector<double> shifted = rewards;
        for (double& r : shifted) r += shift;
        const std::vector<double> ws = mppi_weights(shifted, gamma);
        for (int i = 0; i < C; ++i)
            worst_shift = std::max(worst_shift, std::abs(w[i] - ws[i]));

        const auto ir = std::max_element(rewards.begin(), rewards.end()) - rewards.begin();
        const auto iw = std::max_element(w.begin(), w.end()) - w.begin();
        if (ir != iw) ++argmax_breaks;
    }
    record(9, "planner weights normalized, shift-invariant, argmax-preserving",
           worst_sum <= kWeightSumTol && worst_shift <= kWeightShiftTol && argmax_breaks == 0,
           format("|sum-1| %.1e (tol %.0e), shift dev %.1e (tol %.0e), argmax breaks %d",
                  worst_sum, kWeightSumTol, worst_shift, kWeightShiftTol, argmax_breaks));
}

// ---------------------------------------------------------------------------
// 10. Label freezing and sampler invariants.

void criterion_labels_and_samplers() {
    TrainConfig tc;
    tc.seed = hash_seed(kSeed, 0x05);
    Rng rng(hash_seed(tc.seed, 1));
    Dataset ds = collect_dataset(tc, SimParams::nominal(), 0, nullptr, 10000, rng);

    int freeze_breaks = 0, risk_breaks = 0;
    for (const FdmSample& s : ds.samples) {
        int first = -1;
        for (int k = 0; k < s.n; ++k)
            if (s.label_risks[static_cast<std::size_t>(k)] != 0.0f) { first = k; break; }
        if (first < 0) continue;
        for (int k = first; k < s.n; ++k) {
            if (s.label_risks[static_cast<std::size_t>(k)] != 1.0f) ++risk_breaks;
            for (int d = 0; d < 3; ++d)
                if (s.label_poses[static_cast<std::size_t>(k) * 3 + d] !=
                    s.label_poses[static_cast<std::size_t>(first) * 3 + d])
                    ++freeze_breaks;
        }
    }

    SamplerConfig sc;
    int beta_breaks = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Twist a0{uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0)};
        const Twist ar{uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0)};
        const ActionSeq seq = linear_recursion(a0, ar, 1.0, 10, sc.bounds, sc.dt_p);
        const Twist ref = sc.bounds.clip(a0);
        for (const Twist& t : seq.twists)
            if (t.vx != ref.vx || t.vy != ref.vy || t.omega != ref.omega) ++beta_breaks;
    }

    int bound_breaks = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        for (const ActionSeq& seq : {sample_linear_correlated(sc, 10, rng),
                                     sample_normal_correlated(sc, 10, rng)})
            for (const Twist& t : seq.twists)
                if (!sc.bounds.contains(t, 0.0)) ++bound_breaks;
    }

    record(10, "labels freeze at first failure; samplers stay in bounds",
           !ds.samples.empty() && freeze_breaks == 0 && risk_breaks == 0 && beta_breaks == 0 &&
               bound_breaks == 0,
           format("%zu samples, freeze breaks %d, risk breaks %d, beta=1 breaks %d, "
                  "bound breaks %d",
                  ds.samples.size(), freeze_breaks, risk_breaks, beta_breaks, bound_breaks));
}

// ---------------------------------------------------------------------------
// 11. Binary format round-trips.

bool roundtrip_file(const std::string& a, const std::string& b, const char* magic) {
    const std::vector<char> ba = read_file(a), bb = read_file(b);
    return ba == bb && ba.size() >= 8 && std::memcmp(ba.data(), magic, 8) == 0;
}

void criterion_roundtrips() {
    std::string detail;
    bool pass = true;

    TrainConfig tc;
    tc.envs = 8;
    tc.terrain_size = 60;
    tc.seed = hash_seed(kSeed, 0x06);
    Rng rng(hash_seed(tc.seed, 1));
    Dataset ds = collect_dataset(tc, SimParams::nominal(), 0, nullptr, 300, rng);
    const std::string d1 = temp_path("acc_ds1.fdmrb"), d2 = temp_path("acc_ds2.fdmrb");
    save_dataset(ds, d1);
    save_dataset(load_dataset(d1), d2);
    const bool ds_ok = roundtrip_file(d1, d2, "FDMRB001");
    pass = pass && ds_ok;
    detail += format("dataset(%zu) %s", ds.samples.size(), ds_ok ? "ok" : "BROKEN");

    FdmConfig mc;
    FdmNet net(mc, 77);
    net.set_norm(NormStats::identity(mc.proprio_dim));
    const std::string c1 = temp_path("acc_ck1.fdmck"), c2 = temp_path("acc_ck2.fdmck");
    net.save(c1);
    FdmNet::load(c1).save(c2);
    const bool ck_ok = roundtrip_file(c1, c2, "FDMCK001");
    pass = pass && ck_ok;
    detail += format(", checkpoint %s", ck_ok ? "ok" : "BROKEN");

    bool tg_ok = true;
    for (TerrainKind kind : {TerrainKind::plane, TerrainKind::obstacles2d,
                             TerrainKind::mixed2d3d, TerrainKind::stairs3d}) {
        TerrainGrid g = generate_terrain(kind, hash_seed(kSeed, 0x07), 64);
        const std::string t1 = temp_path("acc_tg1.fdmtg"), t2 = temp_path("acc_tg2.fdmtg");
        save_terrain(g, t1);
        save_terrain(load_terrain(t1), t2);
        tg_ok = tg_ok && roundtrip_file(t1, t2, "FDMTG001");
    }
    pass = pass && tg_ok;
    detail += format(", terrain x4 %s", tg_ok ? "ok" : "BROKEN");

    record(11, "dataset, checkpoint, and terrain files round-trip bit-exactly", pass, detail);
}

// ---------------------------------------------------------------------------
// Desk-scale training shared by criteria 3-8.

TrainConfig desk_config(std::uint64_t seed) {
    TrainConfig tc;
    tc.seed = seed;
    return tc;
}

struct TrainedModels {
    std::optional<FdmNet> full, no_scan, no_proprio;
    double full_secs = 0.0;
};

FdmNet train_variant(const char* label, bool use_scan, bool use_proprio, double* secs_out) {
    TrainConfig tc = desk_config(hash_seed(kSeed, 0x10));
    tc.model.use_scan = use_scan;
    tc.model.use_proprio = use_proprio;
    Rng rng(hash_seed(tc.seed, 2));
    note(format("training %s model (%d rounds x %d samples)...", label, tc.rounds,
                tc.samples_per_round)
             .c_str());
    const auto t0 = Clock::now();
    TrainResult tr = train(tc, SimParams::nominal(), tc.rounds, rng);
    const double secs = seconds_since(t0);
    if (secs_out) *secs_out = secs;
    note(format("%s model trained in %.0f s", label, secs).c_str());
    return std::move(tr.net);
}

FdmBenchReport bench_kinds(FdmNet& net, std::vector<TerrainKind> kinds) {
    FdmBenchConfig bc;
    bc.kinds = std::move(kinds);
    bc.seed = hash_seed(kSeed, 0x11);  // disjoint from the training stream
    return run_fdm_benchmark(net, bc, SimParams::nominal());
}

const FdmMetrics& row_metrics(const FdmBenchReport& rep, TerrainKind kind, const char* method) {
    for (const FdmBenchRow& row : rep.rows)
        if (row.kind == kind && row.method == method) return row.metrics;
    throw std::logic_error("benchmark row missing");
}

// 3 + 4: held-out prediction quality after desk training.
void criteria_prediction(TrainedModels& models, const FdmBenchReport& rep) {
    const FdmMetrics& ob_fdm = row_metrics(rep, TerrainKind::obstacles2d, "fdm");
    const FdmMetrics& ob_cv = row_metrics(rep, TerrainKind::obstacles2d, "cv");
    const FdmMetrics& st_fdm = row_metrics(rep, TerrainKind::stairs3d, "fdm");
    const FdmMetrics& st_cv = row_metrics(rep, TerrainKind::stairs3d, "cv");

    const double red_ob = 1.0 - ob_fdm.final_mean / ob_cv.final_mean;
    const double red_st = 1.0 - st_fdm.final_mean / st_cv.final_mean;
    record(3, "desk training beats constant velocity on held-out final error",
           models.full_secs < kTrainBudgetSec && red_ob >= kErrReduction &&
               red_st >= kErrReduction,
           format("train %.0f s (budget %.0f s); obstacles2d %.3f vs %.3f m (-%.1f%%), "
                  "stairs3d %.3f vs %.3f m (-%.1f%%), need >=%.0f%%, 5000 samples each",
                  models.full_secs, kTrainBudgetSec, ob_fdm.final_mean, ob_cv.final_mean,
                  100.0 * red_ob, st_fdm.final_mean, st_cv.final_mean, 100.0 * red_st,
                  100.0 * kErrReduction));

    record(4, "failure classification clears the F1 thresholds",
           ob_fdm.confusion.f1 >= kF1Obstacles && st_fdm.confusion.f1 >= kF1Stairs,
           format("obstacles2d F1 %.3f (need >=%.2f), stairs3d F1 %.3f (need >=%.2f) "
                  "at threshold 0.5",
                  ob_fdm.confusion.f1, kF1Obstacles, st_fdm.confusion.f1, kF1Stairs));
}

// 5: input ablations degrade obstacle-environment accuracy.
void criterion_ablations(TrainedModels& models, const FdmBenchReport& full_rep) {
    models.no_scan = train_variant("no-scan", false, true, nullptr);
    models.no_proprio = train_variant("no-proprio", true, false, nullptr);

    const FdmBenchReport rep_ns = bench_kinds(*models.no_scan, {TerrainKind::obstacles2d});
    const FdmBenchReport rep_np = bench_kinds(*models.no_proprio, {TerrainKind::obstacles2d});

    const FdmMetrics& full = row_metrics(full_rep, TerrainKind::obstacles2d, "fdm");
    const FdmMetrics& ns = row_metrics(rep_ns, TerrainKind::obstacles2d, "fdm");
    const FdmMetrics& np = row_metrics(rep_np, TerrainKind::obstacles2d, "fdm");

    const double f1_drop = full.confusion.f1 - ns.confusion.f1;
    const double scan_rise = ns.final_mean / full.final_mean - 1.0;
    const double prop_rise = np.final_mean / full.final_mean - 1.0;
    record(5, "removing scan or proprioception degrades held-out accuracy",
           f1_drop >= kScanF1Drop && scan_rise >= kScanErrRise && prop_rise >= kProprioErrRise,
           format("no-scan: F1 %.3f->%.3f (drop %.3f, need >=%.2f), error +%.1f%% "
                  "(need >=%.0f%%); no-proprio: error +%.1f%% (need >=%.0f%%)",
                  full.confusion.f1, ns.confusion.f1, f1_drop, kScanF1Drop, 100.0 * scan_rise,
                  100.0 * kScanErrRise, 100.0 * prop_rise, 100.0 * kProprioErrRise));
}

// 6 + 7: closed-loop navigation benchmarks.
const PlanMetrics& plan_row(const PlanBenchReport& r, TerrainKind k, PlanMethod m) {
    for (const PlanBenchRow& row : r.rows)
        if (row.kind == k && row.method == m) return row.metrics;
    throw std::logic_error("planning row missing");
}

void criterion_plan_risk(FdmNet& net) {
    note("planning benchmark: risk-aware vs risk-blind (2 kinds x 200 episodes)...");
    PlanBenchConfig pc;
    pc.kinds = {TerrainKind::obstacles2d, TerrainKind::stairs3d};
    pc.methods = {PlanMethod::fdm, PlanMethod::fdm_no_risk};
    pc.episodes = 200;
    pc.seed = hash_seed(kSeed, 0x12);
    const auto t0 = Clock::now();
    const PlanBenchReport rep = run_planning_benchmark(net, pc, SimParams::nominal());
    const double secs = seconds_since(t0);

    const PlanMetrics& ob_risk = plan_row(rep, TerrainKind::obstacles2d, PlanMethod::fdm);
    const PlanMetrics& ob_blind = plan_row(rep, TerrainKind::obstacles2d, PlanMethod::fdm_no_risk);
    const PlanMetrics& st_risk = plan_row(rep, TerrainKind::stairs3d, PlanMethod::fdm);
    const PlanMetrics& st_blind = plan_row(rep, TerrainKind::stairs3d, PlanMethod::fdm_no_risk);
    record(6, "risk-aware planning succeeds at least as often as risk-blind",
           ob_risk.success_pct >= ob_blind.success_pct &&
               st_risk.success_pct >= st_blind.success_pct && secs < kPlanBudgetSec,
           format("obstacles2d %.1f%% [%.1f, %.1f] vs %.1f%% [%.1f, %.1f]; stairs3d %.1f%% "
                  "[%.1f, %.1f] vs %.1f%% [%.1f, %.1f]; 200 episodes each, %.0f s "
                  "(budget %.0f s)",
                  ob_risk.success_pct, ob_risk.success_lo, ob_risk.success_hi,
                  ob_blind.success_pct, ob_blind.success_lo, ob_blind.success_hi,
                  st_risk.success_pct, st_risk.success_lo, st_risk.success_hi,
                  st_blind.success_pct, st_blind.success_lo, st_blind.success_hi, secs,
                  kPlanBudgetSec));
}

void criterion_plan_cv(FdmNet& net) {
    note("planning benchmark: learned model vs constant velocity on stairs...");
    PlanBenchConfig pc7;
    pc7.kinds = {TerrainKind::stairs3d};
    pc7.methods = {PlanMethod::fdm, PlanMethod::constant_velocity};
    pc7.episodes = 200;
    pc7.seed = hash_seed(kSeed, 0x13);
    const PlanBenchReport rep7 = run_planning_benchmark(net, pc7, SimParams::nominal());
    const PlanMetrics& fdm = plan_row(rep7, TerrainKind::stairs3d, PlanMethod::fdm);
    const PlanMetrics& cv = plan_row(rep7, TerrainKind::stairs3d, PlanMethod::constant_velocity);
    const double gap = fdm.success_pct - cv.success_pct;
    record(7, "learned dynamics beat constant-velocity planning on stairs",
           gap >= kStairsGapPp,
           format("%.1f%% [%.1f, %.1f] vs %.1f%% [%.1f, %.1f], gap %.1f pp "
                  "(need >=%.0f), 200 episodes each",
                  fdm.success_pct, fdm.success_lo, fdm.success_hi, cv.success_pct,
                  cv.success_lo, cv.success_hi, gap, kStairsGapPp));
}

// 8: adaptation to shifted dynamics.
void criterion_finetune(FdmNet& net) {
    note("fine-tuning on the shifted embodiment...");
    FinetuneConfig fc;
    fc.seed = hash_seed(kSeed, 0x14);
    const FinetuneReport rep =
        run_finetune_experiment(net, fc, SimParams::nominal(), SimParams::shifted());
    record(8, "fine-tuning adapts to shifted dynamics without forgetting",
           rep.shifted_reduction_pct >= kTuneReductionPct &&
               rep.base_reduction_pct > -kTuneForgetCapPct,
           format("shifted %.3f->%.3f m (-%.1f%%, need >=%.0f%%); base %.3f->%.3f m "
                  "(%+.1f%%, floor -%.0f%%)",
                  rep.pre_shifted, rep.post_shifted, rep.shifted_reduction_pct,
                  kTuneReductionPct, rep.pre_base, rep.post_base, rep.base_reduction_pct,
                  kTuneForgetCapPct));
}

// ---------------------------------------------------------------------------
// 12. Bytewise reproducibility of training and benchmark outputs.

void criterion_reproducibility() {
    note("reproducibility: two identical reduced-scale pipeline runs...");
    auto pipeline = [](std::uint64_t seed) {
        TrainConfig tc;
        tc.rounds = 2;
        tc.envs = 16;
        tc.samples_per_round = 1500;
        tc.epochs = 2;
        tc.batch = 256;
        tc.terrain_size = 60;
        tc.seed = seed;
        Rng rng(hash_seed(seed, 2));
        TrainResult tr = train(tc, SimParams::nominal(), tc.rounds, rng);

        FdmBenchConfig bc;
        bc.kinds = {TerrainKind::plane, TerrainKind::obstacles2d};
        bc.samples_per_kind = 400;
        bc.collect = tc;
        bc.seed = hash_seed(seed, 3);
        FdmBenchReport fb = run_fdm_benchmark(tr.net, bc, SimParams::nominal());

        PlanBenchConfig pc;
        pc.kinds = {TerrainKind::obstacles2d};
        pc.methods = {PlanMethod::fdm, PlanMethod::constant_velocity};
        pc.episodes = 6;
        pc.terrain_size = 60;
        pc.seed = hash_seed(seed, 4);
        PlanBenchReport pb = run_planning_benchmark(tr.net, pc, SimParams::nominal());

        return tr.metrics_csv + "\n--\n" + fb.summary_csv + fb.step_csv + "\n--\n" +
               pb.summary_csv + pb.episodes_csv;
    };
    const std::string a = pipeline(hash_seed(kSeed, 0x15));
    const std::string b = pipeline(hash_seed(kSeed, 0x15));
    record(12, "fixed seed reproduces training and benchmark outputs byte-for-byte", a == b,
           format("%zu bytes of metrics and benchmark output %s", a.size(),
                  a == b ? "identical across runs" : "DIFFER"));
}

}  // namespace

int main() {
    const auto t0 = Clock::now();
    auto guarded = [](int id, const char* name, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            record(id, name, false, format("exception: %s", e.what()));
        }
    };

    guarded(1, "analytic gradients match central finite differences", criterion_gradients);
    guarded(2, "zeroed residual head reproduces constant-velocity rollouts",
            criterion_cv_identity);
    guarded(9, "planner weights normalized, shift-invariant, argmax-preserving",
            criterion_weights);
    guarded(10, "labels freeze at first failure; samplers stay in bounds",
            criterion_labels_and_samplers);
    guarded(11, "dataset, checkpoint, and terrain files round-trip bit-exactly",
            criterion_roundtrips);

    TrainedModels models;
    guarded(3, "desk training beats constant velocity on held-out final error", [&]() {
        models.full = train_variant("full", true, true, &models.full_secs);
        note("scoring held-out predictions (2 kinds x 5000 samples)...");
        const FdmBenchReport rep =
            bench_kinds(*models.full, {TerrainKind::obstacles2d, TerrainKind::stairs3d});
        criteria_prediction(models, rep);
        guarded(5, "removing scan or proprioception degrades held-out accuracy",
                [&]() { criterion_ablations(models, rep); });
    });
    if (models.full) {
        guarded(6, "risk-aware planning succeeds at least as often as risk-blind",
                [&]() { criterion_plan_risk(*models.full); });
        guarded(7, "learned dynamics beat constant-velocity planning on stairs",
                [&]() { criterion_plan_cv(*models.full); });
        guarded(8, "fine-tuning adapts to shifted dynamics without forgetting",
                [&]() { criterion_finetune(*models.full); });
    }
    guarded(12, "fixed seed reproduces training and benchmark outputs byte-for-byte",
            criterion_reproducibility);

    static const char* kNames[12] = {
        "analytic gradients match central finite differences",
        "zeroed residual head reproduces constant-velocity rollouts",
        "desk training beats constant velocity on held-out final error",
        "failure classification clears the F1 thresholds",
        "removing scan or proprioception degrades held-out accuracy",
        "risk-aware planning succeeds at least as often as risk-blind",
        "learned dynamics beat constant-velocity planning on stairs",
        "fine-tuning adapts to shifted dynamics without forgetting",
        "planner weights normalized, shift-invariant, argmax-preserving",
        "labels freeze at first failure; samplers stay in bounds",
        "dataset, checkpoint, and terrain files round-trip bit-exactly",
        "fixed seed reproduces training and benchmark outputs byte-for-byte",
    };
    for (int id = 1; id <= 12; ++id)
        if (!recorded(id)) record(id, kNames[id - 1], false, "not reached");

    std::sort(g_results.begin(), g_results.end(),
              [](const Result& a, const Result& b) { return a.id < b.id; });
    int passed = 0;
    std::printf("\n");
    for (const Result& r : g_results) {
        std::printf("%s %2d: %s (%s)\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                    r.detail.c_str());
        passed += r.pass ? 1 : 0;
    }
    std::printf("acceptance: %d/%zu criteria passed in %.0f s\n", passed, g_results.size(),
                seconds_since(t0));
    return passed == static_cast<int>(g_results.size()) && g_results.size() == 12 ? 0 : 1;
}
