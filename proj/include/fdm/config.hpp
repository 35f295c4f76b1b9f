#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fdm/model.hpp"
#include "fdm/mppi.hpp"
#include "fdm/sampling.hpp"
#include "fdm/sim.hpp"
#include "fdm/terrain.hpp"
#include "fdm/trainer.hpp"

namespace fdm {

// Command-line evaluation knobs, mapped onto the benchmark configs at
// dispatch time.
struct EvalConfig {
    int fdm_samples = 5000;   // held-out samples per terrain kind
    int plan_episodes = 50;   // navigation episodes per kind/method
    int batch = 512;
    double delta_risk = 0.5;
    int bootstrap = 1000;
    double goal_min = 3.0;
    double goal_max = 6.0;
    double max_time = 60.0;
    double goal_tolerance = 0.5;
};

// Resolved run settings: top-level keys plus the {sim, sampler, fdm, mppi,
// eval} sections. Training keys live under fdm. The mppi section starts from
// the desk planning budget (population 128, 2 iterations, gamma 0.5) rather
// than the library construction defaults.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    int threads = 0;  // 0 keeps the hardware default
    int count = 1000;            // gen-data sample count
    std::string goal = "4,0,0";  // plan target x,y[,yaw] in the start frame
    std::string model_path;
    std::string input_path;  // plot input csv

    TerrainKind terrain_kind = TerrainKind::plane;
    int terrain_size = 100;
    SimParams sim = SimParams::nominal();
    SamplerConfig sampler;
    FdmConfig fdm;
    MppiConfig mppi;
    EvalConfig eval;
    TrainConfig train;

    RunConfig();
};

// One registry row per key: the dotted name, an echo of the current value,
// and a setter enforcing type and range.
struct ConfigKey {
    std::string name;  // "section.key", or bare for top-level keys
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

const std::vector<ConfigKey>& config_keys();

// Throws std::invalid_argument naming the key on unknown keys, type
// mismatches, and range violations.
void set_config_key(RunConfig& rc, const std::string& name, const std::string& value);

// Sectioned "key = value" text; '#' starts a comment and keys before the
// first [section] header are top-level.
RunConfig parse_config_text(const std::string& text, RunConfig base = RunConfig());

// Echo of every registered key with its current value. Reparses to the same
// configuration.
std::string resolved_config(const RunConfig& rc);

}  // namespace fdm
