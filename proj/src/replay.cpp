#include "fdm/replay.hpp"

#include "fdm/io.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fdm {

void ReplayBuffer::push_trajectory(Trajectory traj) {
    for (std::size_t i = 1; i < traj.records.size(); ++i)
        if (traj.records[i].time <= traj.records[i - 1].time)
            throw std::invalid_argument("trajectory records must be strictly time-ordered");
    total_records_ += traj.records.size();
    trajectories_.push_back(std::move(traj));
    while (total_records_ > max_records_ && trajectories_.size() > 1) {
        total_records_ -= trajectories_.front().records.size();
        trajectories_.pop_front();
    }
}

void ReplayBuffer::clear() {
    trajectories_.clear();
    total_records_ = 0;
}

FdmSample extract_sample(const ReplayBuffer& buffer, std::size_t traj_id,
                         std::size_t t0_index, int n, double dt_h, double dt_p) {
    const Trajectory& traj = buffer.trajectory(traj_id);
    const int stride = static_cast<int>(std::lround(dt_p / dt_h));
    if (stride < 1) throw std::invalid_argument("dt_p must be a multiple of dt_h");
    if (t0_index >= traj.records.size())
        throw std::out_of_range("t0 outside trajectory");
    if (t0_index + static_cast<std::size_t>(n) * stride >= traj.records.size())
        throw std::out_of_range("trajectory too short for the future horizon");
    const TransitionRecord& r0 = traj.records[t0_index];
    if (r0.scan_ref < 0) throw std::out_of_range("t0 record carries no height scan");

    FdmSample s;
    s.n = n;
    const Se2Pose base = r0.sim_state.pose;
    s.history_states.reserve(static_cast<std::size_t>(n) * 3);
    s.history_proprio.reserve(static_cast<std::size_t>(n) * FdmSample::kProprioDim);
    for (int k = n - 1; k >= 0; --k) {
        const std::size_t idx =
            t0_index >= static_cast<std::size_t>(k) ? t0_index - k : 0;
        const TransitionRecord& r = traj.records[idx];
        const Se2Pose rel = se2_relative(base, r.sim_state.pose);
        s.history_states.push_back(static_cast<float>(rel.x));
        s.history_states.push_back(static_cast<float>(rel.y));
        s.history_states.push_back(static_cast<float>(rel.yaw));
        for (double v : r.proprio.vec()) s.history_proprio.push_back(static_cast<float>(v));
    }
    s.scan = traj.scans[r0.scan_ref];

    s.actions.reserve(static_cast<std::size_t>(n) * 3);
    s.label_poses.reserve(static_cast<std::size_t>(n) * 3);
    s.label_risks.reserve(n);
    for (int k = 0; k < n; ++k) {
        const TransitionRecord& cmd_rec = traj.records[t0_index + k * stride];
        s.actions.push_back(static_cast<float>(cmd_rec.cmd.vx));
        s.actions.push_back(static_cast<float>(cmd_rec.cmd.vy));
        s.actions.push_back(static_cast<float>(cmd_rec.cmd.omega));
        const TransitionRecord& fut = traj.records[t0_index + (k + 1) * stride];
        const Se2Pose rel = se2_relative(base, fut.sim_state.pose);
        s.label_poses.push_back(static_cast<float>(rel.x));
        s.label_poses.push_back(static_cast<float>(rel.y));
        s.label_poses.push_back(static_cast<float>(rel.yaw));
        s.label_risks.push_back(fut.sim_state.failed ? 1 : 0);
    }
    return s;
}

std::vector<std::size_t> valid_t0_indices(const Trajectory& traj, int n, double dt_h,
                                          double dt_p) {
    const int stride = static_cast<int>(std::lround(dt_p / dt_h));
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < traj.records.size(); ++i) {
        if (traj.records[i].scan_ref < 0) continue;
        if (traj.records[i].sim_state.failed) continue;
        if (i + static_cast<std::size_t>(n) * stride >= traj.records.size()) continue;
        out.push_back(i);
    }
    return out;
}

NormStats NormStats::identity(int dim) {
    NormStats s;
    s.mean.assign(dim, 0.0);
    s.std.assign(dim, 1.0);
    return s;
}

NormStats compute_norm_stats(const std::vector<FdmSample>& samples) {
    if (samples.size() < 2) throw std::invalid_argument("norm stats need at least 2 samples");
    const int dim = FdmSample::kProprioDim;
    NormStats out;
    out.mean.assign(dim, 0.0);
    out.std.assign(dim, 0.0);
    std::size_t count = 0;
    for (const FdmSample& s : samples) {
        const std::size_t entries = s.history_proprio.size() / dim;
        for (std::size_t e = 0; e < entries; ++e)
            for (int c = 0; c < dim; ++c) out.mean[c] += s.history_proprio[e * dim + c];
        count += entries;
    }
    for (int c = 0; c < dim; ++c) out.mean[c] /= static_cast<double>(count);
    for (const FdmSample& s : samples) {
        const std::size_t entries = s.history_proprio.size() / dim;
        for (std::size_t e = 0; e < entries; ++e)
            for (int c = 0; c < dim; ++c) {
                const double d = s.history_proprio[e * dim + c] - out.mean[c];
                out.std[c] += d * d;
            }
    }
    for (int c = 0; c < dim; ++c)
        out.std[c] = std::max(std::sqrt(out.std[c] / static_cast<double>(count)), 1e-6);
    return out;
}

FdmSample augment_sample(const FdmSample& sample, const AugmentConfig& cfg, Rng& rng) {
    FdmSample s = sample;
    const int dim = FdmSample::kProprioDim;
    const std::size_t entries = s.history_proprio.size() / dim;
    auto jitter = [&](std::size_t e, int c, double width) {
        if (width <= 0.0) return;
        s.history_proprio[e * dim + c] =
            static_cast<float>(s.history_proprio[e * dim + c] + uniform(rng, -width, width));
    };
    for (std::size_t e = 0; e < entries; ++e) {
        for (int c = 3; c < 6; ++c) jitter(e, c, cfg.gravity_noise);
        for (int c = 6; c < 9; ++c) jitter(e, c, cfg.lin_vel_noise);
        for (int c = 9; c < 12; ++c) jitter(e, c, cfg.ang_vel_noise);
    }
    if (cfg.scan_noise > 0.0)
        for (float& v : s.scan.values)
            v = static_cast<float>(v + uniform(rng, -cfg.scan_noise, cfg.scan_noise));

    if (cfg.patch_prob > 0.0 && uniform(rng, 0.0, 1.0) < cfg.patch_prob) {
        const int u = s.scan.u, v = s.scan.v;
        const double area = uniform(rng, 0.01, cfg.patch_max_area) * u * v;
        const double aspect = uniform(rng, 0.5, 2.0);
        int pw = std::clamp(static_cast<int>(std::sqrt(area * aspect)), 1, u);
        int ph = std::clamp(static_cast<int>(std::sqrt(area / aspect)), 1, v);
        const int i0 = static_cast<int>(uniform(rng, 0.0, static_cast<double>(u - pw)));
        const int j0 = static_cast<int>(uniform(rng, 0.0, static_cast<double>(v - ph)));
        // Shadow fill: the surface just outside the patch edge facing the
        // robot (scan center) persists across the hidden cells.
        const int ci = u / 2, cj = v / 2;
        int ei = std::clamp(ci < i0 ? i0 - 1 : (ci > i0 + pw - 1 ? i0 + pw : ci), 0, u - 1);
        int ej = std::clamp(cj < j0 ? j0 - 1 : (cj > j0 + ph - 1 ? j0 + ph : cj), 0, v - 1);
        const float fill = s.scan.value(ei, ej);
        for (int i = i0; i < i0 + pw; ++i)
            for (int j = j0; j < j0 + ph; ++j) {
                s.scan.values[static_cast<std::size_t>(i) * v + j] = fill;
                s.scan.occluded[static_cast<std::size_t>(i) * v + j] = 1;
            }
    }
    return s;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    BinWriter w;
    w.put_magic("FDMRB001");
    w.put_u32(static_cast<std::uint32_t>(ds.samples.size()));
    w.put_u32(static_cast<std::uint32_t>(ds.n));
    w.put_u32(static_cast<std::uint32_t>(ds.u));
    w.put_u32(static_cast<std::uint32_t>(ds.v));
    w.put_f32(ds.dt_h);
    w.put_f32(ds.dt_p);
    w.put_u32(static_cast<std::uint32_t>(ds.proprio_dim));
    for (const FdmSample& s : ds.samples) {
        for (float v : s.history_states) w.put_f32(v);
        for (float v : s.history_proprio) w.put_f32(v);
        for (float v : s.scan.values) w.put_f32(v);
        for (std::uint8_t o : s.scan.occluded) w.put_f32(o ? 1.0f : 0.0f);
        for (float v : s.actions) w.put_f32(v);
        for (float v : s.label_poses) w.put_f32(v);
        for (std::uint8_t r : s.label_risks) w.put_u8(r);
    }
    atomic_write_file(path, w.bytes());
}

Dataset load_dataset(const std::string& path) {
    BinReader r(read_file(path));
    r.expect_magic("FDMRB001");
    Dataset ds;
    const std::uint32_t count = r.get_u32();
    ds.n = static_cast<int>(r.get_u32());
    ds.u = static_cast<int>(r.get_u32());
    ds.v = static_cast<int>(r.get_u32());
    ds.dt_h = r.get_f32();
    ds.dt_p = r.get_f32();
    ds.proprio_dim = static_cast<int>(r.get_u32());
    ds.samples.resize(count);
    const std::size_t cells = static_cast<std::size_t>(ds.u) * ds.v;
    for (FdmSample& s : ds.samples) {
        s.n = ds.n;
        s.history_states.resize(static_cast<std::size_t>(ds.n) * 3);
        for (float& v : s.history_states) v = r.get_f32();
        s.history_proprio.resize(static_cast<std::size_t>(ds.n) * ds.proprio_dim);
        for (float& v : s.history_proprio) v = r.get_f32();
        s.scan.u = ds.u;
        s.scan.v = ds.v;
        s.scan.values.resize(cells);
        for (float& v : s.scan.values) v = r.get_f32();
        s.scan.occluded.resize(cells);
        for (std::uint8_t& o : s.scan.occluded) o = r.get_f32() != 0.0f ? 1 : 0;
        s.actions.resize(static_cast<std::size_t>(ds.n) * 3);
        for (float& v : s.actions) v = r.get_f32();
        s.label_poses.resize(static_cast<std::size_t>(ds.n) * 3);
        for (float& v : s.label_poses) v = r.get_f32();
        s.label_risks.resize(ds.n);
        for (std::uint8_t& x : s.label_risks) x = r.get_u8();
    }
    if (!r.at_end()) throw std::runtime_error("dataset file has trailing bytes");
    return ds;
}

}  // namespace fdm
