#pragma once

#include "fdm/rng.hpp"
#include "fdm/se2.hpp"
#include "fdm/sim.hpp"

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

namespace fdm {

// One simulation tick. scan_ref indexes the owning trajectory's scan store,
// -1 when no scan was captured at this tick.
struct TransitionRecord {
    double time = 0.0;
    SimState sim_state;
    ProprioObs proprio;
    int scan_ref = -1;
    Twist cmd;
};

struct Trajectory {
    std::vector<TransitionRecord> records;
    std::vector<HeightScan> scans;
};

// FIFO of whole trajectories, bounded by total record count.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t max_records = 1'000'000)
        : max_records_(max_records) {}

    // Records must be strictly time-ordered.
    void push_trajectory(Trajectory traj);
    void clear();

    std::size_t trajectory_count() const { return trajectories_.size(); }
    std::size_t record_count() const { return total_records_; }
    const Trajectory& trajectory(std::size_t id) const { return trajectories_[id]; }

private:
    std::size_t max_records_;
    std::size_t total_records_ = 0;
    std::deque<Trajectory> trajectories_;
};

// Training sample, stored in file precision (f32). All poses are expressed
// in the base frame at t0; history runs oldest to newest and ends at t0.
struct FdmSample {
    int n = 10;
    std::vector<float> history_states;   // n * 3: x, y, yaw
    std::vector<float> history_proprio;  // n * proprio_dim
    HeightScan scan;                     // at t0
    std::vector<float> actions;          // n * 3, commands at dt_p spacing
    std::vector<float> label_poses;      // n * 3
    std::vector<std::uint8_t> label_risks;  // n, {0, 1}

    static constexpr int kProprioDim = ProprioObs::kDim;
};

// Cuts the sub-trajectory anchored at record t0_index: n history records
// backward at dt_h spacing (repeat-padding before the start), n future
// poses/risks forward at dt_p spacing, and the n commands that head each
// future dt_p window. Throws std::out_of_range when the future would run
// past the trajectory or t0 carries no scan.
FdmSample extract_sample(const ReplayBuffer& buffer, std::size_t traj_id,
                         std::size_t t0_index, int n, double dt_h, double dt_p);

// Indices within a trajectory that can serve as t0: scan-bearing, not yet
// failed, with a full future horizon.
std::vector<std::size_t> valid_t0_indices(const Trajectory& traj, int n, double dt_h,
                                          double dt_p);

struct NormStats {
    std::vector<double> mean;  // per proprio channel
    std::vector<double> std;   // floored at 1e-6

    static NormStats identity(int dim);
};

// Channel-wise mean and population std over all history_proprio entries.
NormStats compute_norm_stats(const std::vector<FdmSample>& samples);

struct AugmentConfig {
    double gravity_noise = 0.05;
    double lin_vel_noise = 0.1;
    double ang_vel_noise = 0.2;
    double scan_noise = 0.1;
    double patch_prob = 0.3;
    double patch_max_area = 0.25;  // fraction of the scan
};

// Observation-noise augmentation. Twist commands are left untouched; with
// patch_prob a random rectangle of the scan is overwritten with the shadow
// fill of its center-facing edge and flagged occluded.
FdmSample augment_sample(const FdmSample& sample, const AugmentConfig& cfg, Rng& rng);

struct Dataset {
    int n = 10;
    int u = 32, v = 32;
    float dt_h = 0.05f;
    float dt_p = 0.5f;
    int proprio_dim = FdmSample::kProprioDim;
    std::vector<FdmSample> samples;
};

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace fdm
