#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fdm/model.hpp"
#include "fdm/mppi.hpp"
#include "fdm/replay.hpp"
#include "fdm/rng.hpp"
#include "fdm/se2.hpp"
#include "fdm/sim.hpp"
#include "fdm/terrain.hpp"
#include "fdm/trainer.hpp"

namespace fdm {

// Trajectory-level failure classification. When no trajectory is predicted
// positive the precision is undefined; it is reported as 0 with
// precision_defined cleared.
struct ConfusionMetrics {
    int tp = 0, fp = 0, fn = 0, tn = 0;
    double precision = 0.0, recall = 0.0, accuracy = 0.0, f1 = 0.0;
    bool precision_defined = true;
};

ConfusionMetrics confusion_from_counts(int tp, int fp, int fn, int tn);

// A sequence classifies as positive when any step's value exceeds
// delta_risk. Throws std::invalid_argument on empty or misaligned input.
ConfusionMetrics failure_confusion(const std::vector<std::vector<double>>& pred_risks,
                                   const std::vector<std::vector<double>>& label_risks,
                                   double delta_risk);

// Baseline predictor: integrates the commanded twists with zero residuals
// and reports no risks.
PoseTrajectory constant_velocity_predict(const ActionSeq& actions);

// Network of the same shape whose residual and risk output layers are
// zeroed: rollouts reduce to constant-velocity integration with every risk
// pinned at 0.5, below any strict threshold of 0.5.
FdmNet constant_velocity_net(const FdmConfig& cfg);

// Linear-interpolation quantile of an unsorted sample; q in [0, 1].
// Throws std::invalid_argument on an empty sample.
double quantile(std::vector<double> values, double q);

// Percentile-bootstrap 95% interval for the mean.
std::array<double, 2> bootstrap_ci(const std::vector<double>& values, int resamples, Rng& rng);

struct PredictionErrors {
    std::vector<std::vector<double>> step_err;  // [n][samples] position error [m]
    std::vector<std::vector<double>> risks;     // [samples][n] predicted risks
    std::vector<std::vector<double>> labels;    // [samples][n] failure labels
};

// net == nullptr evaluates the constant-velocity baseline (risks all zero).
PredictionErrors prediction_errors(FdmNet* net, const Dataset& ds, int batch);

struct FdmMetrics {
    std::vector<double> step_mean;  // [n] mean position error per step
    std::vector<double> step_std;   // [n]
    double final_mean = 0.0;
    double final_q50 = 0.0;
    double final_q95 = 0.0;
    ConfusionMetrics confusion;
    int samples = 0;
};

FdmMetrics summarize_errors(const PredictionErrors& pe, double delta_risk);

struct FdmBenchConfig {
    std::vector<TerrainKind> kinds{TerrainKind::plane, TerrainKind::obstacles2d,
                                   TerrainKind::mixed2d3d, TerrainKind::stairs3d};
    int samples_per_kind = 5000;
    int batch = 512;
    double delta_risk = 0.5;
    TrainConfig collect;  // collection knobs (envs, terrain size, sampler)
    std::uint64_t seed = 0x9e1dULL;  // keep disjoint from the training seed
};

struct FdmBenchRow {
    TerrainKind kind;
    std::string method;  // "fdm" or "cv"
    FdmMetrics metrics;
};

struct FdmBenchReport {
    std::vector<FdmBenchRow> rows;  // kind-major, fdm before cv
    std::string summary_csv;
    std::string step_csv;
    std::string step_svg;       // per-step mean error curves
    std::string final_box_svg;  // final-step error distribution, capped at q95
};

// Collects a fresh dataset per terrain kind and scores the model against the
// constant-velocity baseline. Fully deterministic in cfg.seed.
FdmBenchReport run_fdm_benchmark(FdmNet& net, const FdmBenchConfig& cfg, const SimParams& sim);

enum class PlanMethod { fdm, fdm_no_risk, constant_velocity };

std::string to_string(PlanMethod m);
PlanMethod plan_method_from_string(const std::string& s);
std::string to_string(EpisodeOutcome o);
EpisodeOutcome outcome_from_string(const std::string& s);

struct PlanMetrics {
    double success_pct = 0.0;
    double success_lo = 0.0, success_hi = 0.0;  // bootstrap 95% interval
    double mpl_success = 0.0, mpl_all = 0.0;    // mean path length [m]
    double mpt_success = 0.0, mpt_all = 0.0;    // mean path time [s]
    int episodes = 0;
};

struct PlanEpisodeRow {
    TerrainKind kind = TerrainKind::plane;
    PlanMethod method = PlanMethod::fdm;
    int episode = 0;
    EpisodeOutcome outcome = EpisodeOutcome::timeout;
    double path_length = 0.0;
    double path_time = 0.0;
};

// Aggregates episode rows; the bootstrap interval is left at 0 (the
// benchmark fills it in with its own rng stream).
PlanMetrics metrics_from_episodes(const std::vector<PlanEpisodeRow>& rows);

// Episode log round-trip: path lengths and times survive exactly.
std::string format_episodes_csv(const std::vector<PlanEpisodeRow>& rows);
std::vector<PlanEpisodeRow> parse_episodes_csv(const std::string& csv);

// Cells whose center passes the failure rule at yaw 0 and yaw pi/2.
std::vector<std::uint8_t> traversable_cells(const TerrainGrid& grid, const SimParams& params);

// 4-connected flood fill over traversable cells from the start position.
std::vector<std::uint8_t> reachable_cells(const TerrainGrid& grid, const SimParams& params,
                                          const Se2Pose& start);

// Uniform pick among reachable cell centers dmin..dmax meters from start.
std::optional<Se2Pose> sample_reachable_goal(const TerrainGrid& grid, const SimParams& params,
                                             const Se2Pose& start, double dmin, double dmax,
                                             Rng& rng);

struct PlanBenchConfig {
    std::vector<TerrainKind> kinds{TerrainKind::plane, TerrainKind::obstacles2d,
                                   TerrainKind::mixed2d3d, TerrainKind::stairs3d};
    std::vector<PlanMethod> methods{PlanMethod::fdm, PlanMethod::fdm_no_risk,
                                    PlanMethod::constant_velocity};
    int episodes = 50;  // per kind/method cell
    int terrain_size = 100;
    double goal_min = 3.0, goal_max = 6.0;
    MppiConfig mppi;
    EpisodeLimits limits;
    int bootstrap_resamples = 1000;
    std::uint64_t seed = 0xbe2cULL;

    PlanBenchConfig();  // desk planner defaults: population 128, 2 iterations
};

struct PlanBenchRow {
    TerrainKind kind;
    PlanMethod method;
    PlanMetrics metrics;
};

struct PlanBenchReport {
    std::vector<PlanBenchRow> rows;
    std::vector<PlanEpisodeRow> episodes;
    std::string summary_csv;
    std::string episodes_csv;
};

// Receding-horizon navigation episodes per terrain kind and method. One
// terrain / start / goal draw per (kind, episode) is shared across methods
// so comparisons are paired. Deterministic in cfg.seed.
PlanBenchReport run_planning_benchmark(FdmNet& net, const PlanBenchConfig& cfg,
                                       const SimParams& sim);

struct FinetuneConfig {
    int train_samples = 2000;
    int heldout_samples = 1000;
    int steps = 300;
    int batch = 256;
    double lr = 3e-4;
    double weight_decay = 1e-2;
    int eval_batch = 512;
    TrainConfig collect;
    std::uint64_t seed = 0xf17eULL;
};

struct FinetuneReport {
    double pre_shifted = 0.0, post_shifted = 0.0;  // final-step mean error [m]
    double pre_base = 0.0, post_base = 0.0;
    double shifted_reduction_pct = 0.0;  // 100 * (pre - post) / pre
    double base_reduction_pct = 0.0;     // negative when the base domain degrades
    std::string csv;  // domain,pre_error,post_error,relative_reduction_pct
};

// Collects base and shifted datasets, fine-tunes a copy of the checkpoint on
// their union, and reports held-out final-step errors before and after. The
// tuned network is written to *tuned_out when given.
FinetuneReport run_finetune_experiment(const FdmNet& checkpoint, const FinetuneConfig& cfg,
                                       const SimParams& base, const SimParams& shifted,
                                       FdmNet* tuned_out = nullptr);

}  // namespace fdm
