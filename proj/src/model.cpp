#include "fdm/model.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "fdm/io.hpp"

namespace fdm {

namespace {

// s = sin(th)/th, c = (1 - cos(th))/th and their derivatives, with the same
// series switch as se2_exp so model rollouts match integrate_twist bitwise.
void sinc_pair(double th, double& s, double& c) {
    if (std::abs(th) < 1e-4) {
        const double th2 = th * th;
        s = 1.0 - th2 / 6.0;
        c = th * (0.5 - th2 / 24.0);
    } else {
        s = std::sin(th) / th;
        c = (1.0 - std::cos(th)) / th;
    }
}

void sinc_pair_grad(double th, double& ds, double& dc) {
    if (std::abs(th) < 1e-4) {
        const double th2 = th * th;
        ds = th * (-1.0 / 3.0 + th2 / 30.0);
        dc = 0.5 - th2 / 8.0;
    } else {
        const double th2 = th * th;
        ds = (th * std::cos(th) - std::sin(th)) / th2;
        dc = (th * std::sin(th) - 1.0 + std::cos(th)) / th2;
    }
}

double softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

Tensor slice_step(const Tensor& t, int B, int n, int cols, int k) {
    Tensor out({B, cols});
    for (int b = 0; b < B; ++b)
        std::memcpy(out.ptr() + static_cast<std::size_t>(b) * cols,
                    t.ptr() + (static_cast<std::size_t>(b) * n + k) * cols,
                    sizeof(double) * cols);
    return out;
}

constexpr char kCheckpointMagic[8] = {'F', 'D', 'M', 'C', 'K', '0', '0', '1'};
constexpr std::uint8_t kRecParam = 0;
constexpr std::uint8_t kRecNormMean = 1;
constexpr std::uint8_t kRecNormStd = 2;
constexpr std::uint8_t kRecConfig = 3;

std::vector<double> pack_config(const FdmConfig& c) {
    return {static_cast<double>(c.n),
            c.dt_h,
            c.dt_p,
            static_cast<double>(c.proprio_dim),
            static_cast<double>(c.scan_u),
            static_cast<double>(c.scan_v),
            static_cast<double>(c.history_hidden),
            static_cast<double>(c.history_layers),
            static_cast<double>(c.pred_hidden),
            static_cast<double>(c.pred_layers),
            static_cast<double>(c.action_enc),
            static_cast<double>(c.state_head_hidden),
            static_cast<double>(c.risk_head_hidden),
            c.dropout,
            c.eps_pose,
            c.eps_risk,
            c.eps_stop,
            c.delta_risk,
            c.use_scan ? 1.0 : 0.0,
            c.use_proprio ? 1.0 : 0.0,
            c.bounds.min[0],
            c.bounds.min[1],
            c.bounds.min[2],
            c.bounds.max[0],
            c.bounds.max[1],
            c.bounds.max[2]};
}

FdmConfig unpack_config(const std::vector<double>& v) {
    if (v.size() != 26) throw std::runtime_error("checkpoint config record has wrong size");
    FdmConfig c;
    int i = 0;
    c.n = static_cast<int>(v[i++]);
    c.dt_h = v[i++];
    c.dt_p = v[i++];
    c.proprio_dim = static_cast<int>(v[i++]);
    c.scan_u = static_cast<int>(v[i++]);
    c.scan_v = static_cast<int>(v[i++]);
    c.history_hidden = static_cast<int>(v[i++]);
    c.history_layers = static_cast<int>(v[i++]);
    c.pred_hidden = static_cast<int>(v[i++]);
    c.pred_layers = static_cast<int>(v[i++]);
    c.action_enc = static_cast<int>(v[i++]);
    c.state_head_hidden = static_cast<int>(v[i++]);
    c.risk_head_hidden = static_cast<int>(v[i++]);
    c.dropout = v[i++];
    c.eps_pose = v[i++];
    c.eps_risk = v[i++];
    c.eps_stop = v[i++];
    c.delta_risk = v[i++];
    c.use_scan = v[i++] != 0.0;
    c.use_proprio = v[i++] != 0.0;
    c.bounds.min[0] = v[i++];
    c.bounds.min[1] = v[i++];
    c.bounds.min[2] = v[i++];
    c.bounds.max[0] = v[i++];
    c.bounds.max[1] = v[i++];
    c.bounds.max[2] = v[i++];
    return c;
}

}  // namespace

FdmNet::FdmNet(const FdmConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    Rng rng(seed ^ 0x6d0de1ULL);
    hist_gru_.reserve(cfg.history_layers);
    for (int li = 0; li < cfg.history_layers; ++li) {
        const int in = li == 0 ? cfg.gru_in() : cfg.history_hidden;
        hist_gru_.emplace_back("hist_gru" + std::to_string(li), in, cfg.history_hidden, rng);
    }
    hist_drop_.p = cfg.dropout;

    conv1_ = Conv2d("conv1", 1, 8, 7, 2, rng);
    conv2_ = Conv2d("conv2", 8, 16, 3, 1, rng);
    conv3_ = Conv2d("conv3", 16, 32, 3, 1, rng);

    const int h1 = Conv2d::out_extent(cfg.scan_u, 7, 2);
    const int w1 = Conv2d::out_extent(cfg.scan_v, 7, 2);
    const int h1p = (h1 + 2 - 3) / 2 + 1;
    const int w1p = (w1 + 2 - 3) / 2 + 1;
    const int h2 = Conv2d::out_extent(h1p, 3, 1);
    const int w2 = Conv2d::out_extent(w1p, 3, 1);
    const int h3 = Conv2d::out_extent(h2, 3, 1);
    const int w3 = Conv2d::out_extent(w2, 3, 1);
    cnn_flat_ = 32 * h3 * w3;

    bridge_ = Dense("bridge", cfg.history_hidden + cnn_flat_, cfg.pred_layers * cfg.pred_hidden,
                    rng);
    act_enc_ = Dense("act_enc", 3, cfg.action_enc, rng);
    act_enc_drop_.p = cfg.dropout;

    pred_gru_.reserve(cfg.pred_layers);
    for (int li = 0; li < cfg.pred_layers; ++li) {
        const int in = li == 0 ? cfg.action_enc : cfg.pred_hidden;
        pred_gru_.emplace_back("pred_gru" + std::to_string(li), in, cfg.pred_hidden, rng);
    }
    pred_drop_.p = cfg.dropout;

    const int flat = cfg.n * cfg.pred_hidden;
    state1_ = Dense("state1", flat, cfg.state_head_hidden, rng);
    state2_ = Dense("state2", cfg.state_head_hidden, cfg.state_head_hidden, rng);
    state3_ = Dense("state3", cfg.state_head_hidden, cfg.n * 3, rng);
    state_drop_.p = cfg.dropout;
    risk1_ = Dense("risk1", flat, cfg.risk_head_hidden, rng);
    risk2_ = Dense("risk2", cfg.risk_head_hidden, cfg.n, rng);
}

std::vector<Param*> FdmNet::params() {
    std::vector<Param*> ps;
    for (auto& g : hist_gru_) g.collect(ps);
    conv1_.collect(ps);
    conv2_.collect(ps);
    conv3_.collect(ps);
    bridge_.collect(ps);
    act_enc_.collect(ps);
    for (auto& g : pred_gru_) g.collect(ps);
    state1_.collect(ps);
    state2_.collect(ps);
    state3_.collect(ps);
    risk1_.collect(ps);
    risk2_.collect(ps);
    return ps;
}

std::size_t FdmNet::param_count() {
    std::size_t total = 0;
    for (const Param* p : params()) total += p->v.data.size();
    return total;
}

void FdmNet::zero_grad() {
    for (Param* p : params()) p->zero_grad();
}

void FdmNet::clear_caches() {
    for (auto& g : hist_gru_) g.clear_caches();
    hist_drop_.clear_caches();
    conv1_.clear_caches();
    conv2_.clear_caches();
    conv3_.clear_caches();
    cnn_act1_.clear_caches();
    cnn_act2_.clear_caches();
    cnn_act3_.clear_caches();
    pool_.clear_caches();
    bridge_.clear_caches();
    bridge_act_.clear_caches();
    act_enc_.clear_caches();
    act_enc_act_.clear_caches();
    act_enc_drop_.clear_caches();
    for (auto& g : pred_gru_) g.clear_caches();
    pred_drop_.clear_caches();
    state1_.clear_caches();
    state2_.clear_caches();
    state3_.clear_caches();
    state_act1_.clear_caches();
    state_act2_.clear_caches();
    state_drop_.clear_caches();
    risk1_.clear_caches();
    risk2_.clear_caches();
    risk_act1_.clear_caches();
    fwd_caches_.clear();
}

Tensor FdmNet::normalize_inputs(const Tensor& hist, int B) const {
    const int n = cfg_.n, G = cfg_.gru_in(), P = cfg_.proprio_dim;
    if (static_cast<int>(norm_.mean.size()) != P)
        throw std::logic_error("normalization stats not set on model");
    Tensor out = hist;
    for (int b = 0; b < B; ++b)
        for (int t = 0; t < n; ++t) {
            double* row = out.ptr() + (static_cast<std::size_t>(b) * n + t) * G;
            for (int c = 0; c < P; ++c) {
                double v = (row[4 + c] - norm_.mean[c]) / norm_.std[c];
                row[4 + c] = cfg_.use_proprio ? v : 0.0;
            }
        }
    return out;
}

Tensor FdmNet::cnn_forward(const Tensor& scan, bool cache) {
    Tensor x = scan;
    if (!cfg_.use_scan) x.fill(0.0);
    x = cnn_act1_.forward(conv1_.forward(x, cache), cache);
    x = pool_.forward(x, cache);
    x = cnn_act2_.forward(conv2_.forward(x, cache), cache);
    x = cnn_act3_.forward(conv3_.forward(x, cache), cache);
    x.reshape({x.dim(0), cnn_flat_});
    return x;
}

Tensor FdmNet::history_forward(const Tensor& norm_hist, int B, bool train, Rng& rng, bool cache) {
    const int L = cfg_.history_layers, H = cfg_.history_hidden, G = cfg_.gru_in();
    std::vector<Tensor> h(L, Tensor({B, H}));
    for (int t = 0; t < cfg_.n; ++t) {
        Tensor input = slice_step(norm_hist, B, cfg_.n, G, t);
        for (int li = 0; li < L; ++li) {
            h[li] = hist_gru_[li].forward(input, h[li], cache);
            if (li < L - 1)
                input = hist_drop_.forward(h[li], train, rng, cache);
        }
    }
    return h[L - 1];
}

void FdmNet::integrate(const Tensor& actions, const Tensor& residuals, FdmPrediction& out,
                       Tensor* clip_mask) const {
    const int B = out.B, n = cfg_.n;
    const double dt = cfg_.dt_p;
    out.applied = Tensor({B, n, 3});
    out.poses = Tensor({B, n, 3});
    if (clip_mask) *clip_mask = Tensor({B, n, 3});
    for (int b = 0; b < B; ++b) {
        double px = 0.0, py = 0.0, psi = 0.0;
        for (int k = 0; k < n; ++k) {
            const std::size_t o = (static_cast<std::size_t>(b) * n + k) * 3;
            for (int c = 0; c < 3; ++c) {
                const double raw = actions[o + c] + residuals[o + c];
                const double lo = cfg_.bounds.min[c], hi = cfg_.bounds.max[c];
                const double v = raw < lo ? lo : (raw > hi ? hi : raw);
                out.applied[o + c] = v;
                if (clip_mask) (*clip_mask)[o + c] = (raw > lo && raw < hi) ? 1.0 : 0.0;
            }
            const double vx = out.applied[o], vy = out.applied[o + 1], w = out.applied[o + 2];
            const double th = w * dt;
            double s, c;
            sinc_pair(th, s, c);
            const double dx = dt * (s * vx - c * vy);
            const double dy = dt * (c * vx + s * vy);
            const double cp = std::cos(psi), sp = std::sin(psi);
            px = px + cp * dx - sp * dy;
            py = py + sp * dx + cp * dy;
            psi = wrap_angle(psi + th);
            out.poses[o] = px;
            out.poses[o + 1] = py;
            out.poses[o + 2] = psi;
        }
    }
}

FdmPrediction FdmNet::forward(const FdmBatch& batch, bool train, Rng& rng) {
    const int B = batch.B, n = cfg_.n, Hp = cfg_.pred_hidden, L = cfg_.pred_layers;
    const bool cache = train;

    Tensor norm_hist = normalize_inputs(batch.hist, B);
    Tensor cnn_feat = cnn_forward(batch.scan, cache);
    Tensor hist_emb = history_forward(norm_hist, B, train, rng, cache);

    Tensor cat({B, cfg_.history_hidden + cnn_flat_});
    for (int b = 0; b < B; ++b) {
        double* row = cat.ptr() + static_cast<std::size_t>(b) * cat.dim(1);
        std::memcpy(row, hist_emb.ptr() + static_cast<std::size_t>(b) * cfg_.history_hidden,
                    sizeof(double) * cfg_.history_hidden);
        std::memcpy(row + cfg_.history_hidden,
                    cnn_feat.ptr() + static_cast<std::size_t>(b) * cnn_flat_,
                    sizeof(double) * cnn_flat_);
    }
    Tensor ctx = bridge_act_.forward(bridge_.forward(cat, cache), cache);

    std::vector<Tensor> h(L, Tensor({B, Hp}));
    for (int li = 0; li < L; ++li)
        for (int b = 0; b < B; ++b)
            std::memcpy(h[li].ptr() + static_cast<std::size_t>(b) * Hp,
                        ctx.ptr() + static_cast<std::size_t>(b) * L * Hp + li * Hp,
                        sizeof(double) * Hp);

    Tensor flat({B, n * Hp});
    for (int k = 0; k < n; ++k) {
        Tensor ak = slice_step(batch.actions, B, n, 3, k);
        Tensor input = act_enc_drop_.forward(
            act_enc_act_.forward(act_enc_.forward(ak, cache), cache), train, rng, cache);
        for (int li = 0; li < L; ++li) {
            h[li] = pred_gru_[li].forward(input, h[li], cache);
            if (li < L - 1)
                input = pred_drop_.forward(h[li], train, rng, cache);
        }
        for (int b = 0; b < B; ++b)
            std::memcpy(flat.ptr() + static_cast<std::size_t>(b) * n * Hp + k * Hp,
                        h[L - 1].ptr() + static_cast<std::size_t>(b) * Hp, sizeof(double) * Hp);
    }

    Tensor s = state_act1_.forward(state1_.forward(flat, cache), cache);
    s = state_drop_.forward(s, train, rng, cache);
    s = state_act2_.forward(state2_.forward(s, cache), cache);
    Tensor residuals = state3_.forward(s, cache);
    residuals.reshape({B, n, 3});

    Tensor logits = risk2_.forward(risk_act1_.forward(risk1_.forward(flat, cache), cache), cache);

    FdmPrediction out;
    out.B = B;
    out.n = n;
    out.residuals = std::move(residuals);
    out.risk_logits = std::move(logits);
    out.risks = out.risk_logits;
    sigmoid_inplace(out.risks);

    Tensor mask;
    integrate(batch.actions, out.residuals, out, cache ? &mask : nullptr);
    if (cache) {
        FwdCache fc;
        fc.clip_mask = std::move(mask);
        fc.B = B;
        fwd_caches_.push_back(std::move(fc));
    }
    return out;
}

FdmPrediction FdmNet::infer(const FdmBatch& batch) {
    Rng dummy(0);
    return forward(batch, false, dummy);
}

Tensor FdmNet::encode_context(const FdmBatch& single) {
    Rng dummy(0);
    const int B = single.B;
    Tensor norm_hist = normalize_inputs(single.hist, B);
    Tensor cnn_feat = cnn_forward(single.scan, false);
    Tensor hist_emb = history_forward(norm_hist, B, false, dummy, false);
    Tensor cat({B, cfg_.history_hidden + cnn_flat_});
    for (int b = 0; b < B; ++b) {
        double* row = cat.ptr() + static_cast<std::size_t>(b) * cat.dim(1);
        std::memcpy(row, hist_emb.ptr() + static_cast<std::size_t>(b) * cfg_.history_hidden,
                    sizeof(double) * cfg_.history_hidden);
        std::memcpy(row + cfg_.history_hidden,
                    cnn_feat.ptr() + static_cast<std::size_t>(b) * cnn_flat_,
                    sizeof(double) * cnn_flat_);
    }
    return bridge_act_.forward(bridge_.forward(cat, false), false);
}

FdmPrediction FdmNet::rollout(const Tensor& context, const Tensor& actions) {
    Rng dummy(0);
    const int C = actions.dim(0), n = cfg_.n, Hp = cfg_.pred_hidden, L = cfg_.pred_layers;
    if (actions.rank() != 3 || actions.dim(1) != n || actions.dim(2) != 3)
        throw std::invalid_argument("rollout: actions must be [C, n, 3]");
    if (context.dim(1) != L * Hp) throw std::invalid_argument("rollout: bad context width");

    std::vector<Tensor> h(L, Tensor({C, Hp}));
    for (int li = 0; li < L; ++li)
        for (int b = 0; b < C; ++b) {
            const int src = context.dim(0) == 1 ? 0 : b;
            std::memcpy(h[li].ptr() + static_cast<std::size_t>(b) * Hp,
                        context.ptr() + static_cast<std::size_t>(src) * L * Hp + li * Hp,
                        sizeof(double) * Hp);
        }

    Tensor flat({C, n * Hp});
    for (int k = 0; k < n; ++k) {
        Tensor ak = slice_step(actions, C, n, 3, k);
        Tensor input = act_enc_act_.forward(act_enc_.forward(ak, false), false);
        for (int li = 0; li < L; ++li) {
            h[li] = pred_gru_[li].forward(input, h[li], false);
            if (li < L - 1) input = h[li];
        }
        for (int b = 0; b < C; ++b)
            std::memcpy(flat.ptr() + static_cast<std::size_t>(b) * n * Hp + k * Hp,
                        h[L - 1].ptr() + static_cast<std::size_t>(b) * Hp, sizeof(double) * Hp);
    }

    Tensor s = state_act1_.forward(state1_.forward(flat, false), false);
    s = state_act2_.forward(state2_.forward(s, false), false);
    Tensor residuals = state3_.forward(s, false);
    residuals.reshape({C, n, 3});
    Tensor logits = risk2_.forward(risk_act1_.forward(risk1_.forward(flat, false), false), false);

    FdmPrediction out;
    out.B = C;
    out.n = n;
    out.residuals = std::move(residuals);
    out.risk_logits = std::move(logits);
    out.risks = out.risk_logits;
    sigmoid_inplace(out.risks);
    integrate(actions, out.residuals, out, nullptr);
    return out;
}

void FdmNet::backward(const FdmPrediction& pred, const FdmBatch& batch) {
    if (fwd_caches_.empty()) throw std::logic_error("model backward before forward");
    FwdCache fc = std::move(fwd_caches_.back());
    fwd_caches_.pop_back();
    const int B = pred.B, n = cfg_.n, Hp = cfg_.pred_hidden, L = cfg_.pred_layers;
    const double dt = cfg_.dt_p;

    auto [dposes, dlogits] = loss_gradients(pred, batch, cfg_);

    Tensor dres({B, n, 3});
    for (int b = 0; b < B; ++b) {
        double gx = 0.0, gy = 0.0, gpsi = 0.0;
        for (int k = n - 1; k >= 0; --k) {
            const std::size_t o = (static_cast<std::size_t>(b) * n + k) * 3;
            gx += dposes[o];
            gy += dposes[o + 1];
            gpsi += dposes[o + 2];
            const double psi_prev = k > 0 ? pred.poses[o - 3 + 2] : 0.0;
            const double vx = pred.applied[o], vy = pred.applied[o + 1],
                         w = pred.applied[o + 2];
            const double th = w * dt;
            double s, c, ds, dc;
            sinc_pair(th, s, c);
            sinc_pair_grad(th, ds, dc);
            const double dx = dt * (s * vx - c * vy);
            const double dy = dt * (c * vx + s * vy);
            const double cp = std::cos(psi_prev), sp = std::sin(psi_prev);
            const double ddx = gx * cp + gy * sp;
            const double ddy = -gx * sp + gy * cp;
            const double dpsi_prev =
                gx * (-sp * dx - cp * dy) + gy * (cp * dx - sp * dy) + gpsi;
            const double dvx = dt * (ddx * s + ddy * c);
            const double dvy = dt * (-ddx * c + ddy * s);
            const double dth =
                dt * (ddx * (ds * vx - dc * vy) + ddy * (dc * vx + ds * vy)) + gpsi;
            dres[o] = dvx * fc.clip_mask[o];
            dres[o + 1] = dvy * fc.clip_mask[o + 1];
            dres[o + 2] = dth * dt * fc.clip_mask[o + 2];
            gpsi = dpsi_prev;
        }
    }

    dres.reshape({B, n * 3});
    Tensor ds_flat = state3_.backward(dres);
    ds_flat = state_act2_.backward(ds_flat);
    ds_flat = state2_.backward(ds_flat);
    ds_flat = state_drop_.backward(ds_flat);
    ds_flat = state_act1_.backward(ds_flat);
    ds_flat = state1_.backward(ds_flat);

    Tensor dr_flat = risk2_.backward(dlogits);
    dr_flat = risk_act1_.backward(dr_flat);
    dr_flat = risk1_.backward(dr_flat);

    Tensor dflat = ds_flat;
    for (std::size_t i = 0; i < dflat.data.size(); ++i) dflat[i] += dr_flat[i];

    std::vector<Tensor> carry(L, Tensor({B, Hp}));
    for (int k = n - 1; k >= 0; --k) {
        Tensor g({B, Hp});
        for (int b = 0; b < B; ++b)
            std::memcpy(g.ptr() + static_cast<std::size_t>(b) * Hp,
                        dflat.ptr() + static_cast<std::size_t>(b) * n * Hp + k * Hp,
                        sizeof(double) * Hp);
        for (int li = L - 1; li >= 0; --li) {
            Tensor total = g;
            for (std::size_t i = 0; i < total.data.size(); ++i) total[i] += carry[li][i];
            auto [dx, dhprev] = pred_gru_[li].backward(total);
            carry[li] = std::move(dhprev);
            if (li > 0) {
                g = pred_drop_.backward(dx);
            } else {
                Tensor da = act_enc_drop_.backward(dx);
                da = act_enc_act_.backward(da);
                act_enc_.backward(da);
            }
        }
    }

    Tensor dctx({B, L * Hp});
    for (int li = 0; li < L; ++li)
        for (int b = 0; b < B; ++b)
            std::memcpy(dctx.ptr() + static_cast<std::size_t>(b) * L * Hp + li * Hp,
                        carry[li].ptr() + static_cast<std::size_t>(b) * Hp,
                        sizeof(double) * Hp);

    Tensor dcat = bridge_.backward(bridge_act_.backward(dctx));

    const int Hh = cfg_.history_hidden;
    Tensor dhemb({B, Hh});
    Tensor dcnn({B, cnn_flat_});
    for (int b = 0; b < B; ++b) {
        const double* row = dcat.ptr() + static_cast<std::size_t>(b) * (Hh + cnn_flat_);
        std::memcpy(dhemb.ptr() + static_cast<std::size_t>(b) * Hh, row, sizeof(double) * Hh);
        std::memcpy(dcnn.ptr() + static_cast<std::size_t>(b) * cnn_flat_, row + Hh,
                    sizeof(double) * cnn_flat_);
    }

    const int Lh = cfg_.history_layers;
    std::vector<Tensor> hcarry(Lh, Tensor({B, Hh}));
    for (int t = cfg_.n - 1; t >= 0; --t) {
        Tensor g = t == cfg_.n - 1 ? dhemb : Tensor({B, Hh});
        for (int li = Lh - 1; li >= 0; --li) {
            Tensor total = g;
            for (std::size_t i = 0; i < total.data.size(); ++i) total[i] += hcarry[li][i];
            auto [dx, dhprev] = hist_gru_[li].backward(total);
            hcarry[li] = std::move(dhprev);
            if (li > 0) g = hist_drop_.backward(dx);
        }
    }

    const int h3 = static_cast<int>(std::lround(std::sqrt(cnn_flat_ / 32.0)));
    dcnn.reshape({B, 32, h3, h3});
    Tensor dc = cnn_act3_.backward(dcnn);
    dc = conv3_.backward(dc);
    dc = cnn_act2_.backward(dc);
    dc = conv2_.backward(dc);
    dc = pool_.backward(dc);
    dc = cnn_act1_.backward(dc);
    conv1_.backward(dc);
}

FdmLosses compute_losses(const FdmPrediction& pred, const FdmBatch& batch,
                         const FdmConfig& cfg) {
    const int B = pred.B, n = pred.n;
    FdmLosses out;
    double pose_sum = 0.0, risk_sum = 0.0, stop_sum = 0.0;
    std::int64_t stop_count = 0;
    for (int b = 0; b < B; ++b)
        for (int k = 0; k < n; ++k) {
            const std::size_t o = (static_cast<std::size_t>(b) * n + k) * 3;
            const std::size_t ro = static_cast<std::size_t>(b) * n + k;
            const double ex = pred.poses[o] - batch.label_poses[o];
            const double ey = pred.poses[o + 1] - batch.label_poses[o + 1];
            const double es = std::sin(pred.poses[o + 2]) - std::sin(batch.label_poses[o + 2]);
            const double ec = std::cos(pred.poses[o + 2]) - std::cos(batch.label_poses[o + 2]);
            const double sq = ex * ex + ey * ey + es * es + ec * ec;
            pose_sum += sq;
            risk_sum += softplus(pred.risk_logits[ro]) -
                        batch.label_risks[ro] * pred.risk_logits[ro];
            if (pred.risks[ro] > cfg.delta_risk) {
                stop_sum += sq;
                ++stop_count;
            }
        }
    out.pose = pose_sum / (static_cast<double>(B) * n * 4);
    out.risk = risk_sum / (static_cast<double>(B) * n);
    out.stop = stop_count > 0 ? stop_sum / (static_cast<double>(stop_count) * 4) : 0.0;
    out.total = cfg.eps_pose * out.pose + cfg.eps_risk * out.risk + cfg.eps_stop * out.stop;
    return out;
}

std::pair<Tensor, Tensor> loss_gradients(const FdmPrediction& pred, const FdmBatch& batch,
                                         const FdmConfig& cfg) {
    const int B = pred.B, n = pred.n;
    Tensor dposes({B, n, 3});
    Tensor dlogits({B, n});
    std::int64_t stop_count = 0;
    for (int b = 0; b < B; ++b)
        for (int k = 0; k < n; ++k)
            if (pred.risks[static_cast<std::size_t>(b) * n + k] > cfg.delta_risk) ++stop_count;

    const double pose_w = cfg.eps_pose / (static_cast<double>(B) * n * 4);
    const double stop_w =
        stop_count > 0 ? cfg.eps_stop / (static_cast<double>(stop_count) * 4) : 0.0;
    const double risk_w = cfg.eps_risk / (static_cast<double>(B) * n);

    for (int b = 0; b < B; ++b)
        for (int k = 0; k < n; ++k) {
            const std::size_t o = (static_cast<std::size_t>(b) * n + k) * 3;
            const std::size_t ro = static_cast<std::size_t>(b) * n + k;
            const bool gated = pred.risks[ro] > cfg.delta_risk;
            const double w = 2.0 * (pose_w + (gated ? stop_w : 0.0));
            const double ex = pred.poses[o] - batch.label_poses[o];
            const double ey = pred.poses[o + 1] - batch.label_poses[o + 1];
            const double sy = std::sin(pred.poses[o + 2]), cy = std::cos(pred.poses[o + 2]);
            const double es = sy - std::sin(batch.label_poses[o + 2]);
            const double ec = cy - std::cos(batch.label_poses[o + 2]);
            dposes[o] = w * ex;
            dposes[o + 1] = w * ey;
            dposes[o + 2] = w * (es * cy - ec * sy);
            dlogits[ro] = risk_w * (pred.risks[ro] - batch.label_risks[ro]);
        }
    return {std::move(dposes), std::move(dlogits)};
}

FdmBatch make_batch(const std::vector<const FdmSample*>& samples, const FdmConfig& cfg) {
    const int B = static_cast<int>(samples.size());
    if (B == 0) throw std::invalid_argument("make_batch: empty batch");
    const int n = cfg.n, G = cfg.gru_in(), P = cfg.proprio_dim;
    FdmBatch out;
    out.B = B;
    out.hist = Tensor({B, n, G});
    out.scan = Tensor({B, 1, cfg.scan_u, cfg.scan_v});
    out.actions = Tensor({B, n, 3});
    out.label_poses = Tensor({B, n, 3});
    out.label_risks = Tensor({B, n});
    for (int b = 0; b < B; ++b) {
        const FdmSample& s = *samples[b];
        if (s.n != n || static_cast<int>(s.history_proprio.size()) != n * P ||
            s.scan.u != cfg.scan_u || s.scan.v != cfg.scan_v)
            throw std::invalid_argument("make_batch: sample shape mismatch");
        for (int t = 0; t < n; ++t) {
            double* row = out.hist.ptr() + (static_cast<std::size_t>(b) * n + t) * G;
            const std::size_t hs = static_cast<std::size_t>(t) * 3;
            row[0] = s.history_states[hs];
            row[1] = s.history_states[hs + 1];
            row[2] = std::sin(static_cast<double>(s.history_states[hs + 2]));
            row[3] = std::cos(static_cast<double>(s.history_states[hs + 2]));
            for (int c = 0; c < P; ++c)
                row[4 + c] = s.history_proprio[static_cast<std::size_t>(t) * P + c];
        }
        double* sc = out.scan.ptr() + static_cast<std::size_t>(b) * cfg.scan_u * cfg.scan_v;
        for (int i = 0; i < cfg.scan_u * cfg.scan_v; ++i) sc[i] = s.scan.values[i];
        for (int i = 0; i < n * 3; ++i) {
            out.actions[static_cast<std::size_t>(b) * n * 3 + i] = s.actions[i];
            if (!s.label_poses.empty())
                out.label_poses[static_cast<std::size_t>(b) * n * 3 + i] = s.label_poses[i];
        }
        if (!s.label_risks.empty())
            for (int k = 0; k < n; ++k)
                out.label_risks[static_cast<std::size_t>(b) * n + k] = s.label_risks[k];
    }
    return out;
}

FdmBatch make_batch(const std::vector<FdmSample>& samples, const FdmConfig& cfg) {
    std::vector<const FdmSample*> ptrs;
    ptrs.reserve(samples.size());
    for (const auto& s : samples) ptrs.push_back(&s);
    return make_batch(ptrs, cfg);
}

FdmBatch make_observation(const std::vector<double>& hist_states,
                          const std::vector<double>& hist_proprio,
                          const std::vector<float>& scan_values, const FdmConfig& cfg) {
    const int n = cfg.n, G = cfg.gru_in(), P = cfg.proprio_dim;
    if (static_cast<int>(hist_states.size()) != n * 3 ||
        static_cast<int>(hist_proprio.size()) != n * P ||
        static_cast<int>(scan_values.size()) != cfg.scan_u * cfg.scan_v)
        throw std::invalid_argument("make_observation: shape mismatch");
    FdmBatch out;
    out.B = 1;
    out.hist = Tensor({1, n, G});
    out.scan = Tensor({1, 1, cfg.scan_u, cfg.scan_v});
    out.actions = Tensor({1, n, 3});
    out.label_poses = Tensor({1, n, 3});
    out.label_risks = Tensor({1, n});
    for (int t = 0; t < n; ++t) {
        double* row = out.hist.ptr() + static_cast<std::size_t>(t) * G;
        row[0] = hist_states[static_cast<std::size_t>(t) * 3];
        row[1] = hist_states[static_cast<std::size_t>(t) * 3 + 1];
        row[2] = std::sin(hist_states[static_cast<std::size_t>(t) * 3 + 2]);
        row[3] = std::cos(hist_states[static_cast<std::size_t>(t) * 3 + 2]);
        for (int c = 0; c < P; ++c)
            row[4 + c] = hist_proprio[static_cast<std::size_t>(t) * P + c];
    }
    for (int i = 0; i < cfg.scan_u * cfg.scan_v; ++i) out.scan[i] = scan_values[i];
    return out;
}

void FdmNet::save(const std::string& path) const {
    BinWriter w;
    w.put_magic(kCheckpointMagic);
    auto& self = const_cast<FdmNet&>(*this);
    const std::vector<Param*> ps = self.params();
    w.put_u32(static_cast<std::uint32_t>(ps.size() + 3));

    auto put_record = [&w](std::uint8_t kind, const std::vector<int>& shape,
                           const double* data, std::size_t count) {
        w.put_u8(kind);
        w.put_u32(static_cast<std::uint32_t>(shape.size()));
        for (int e : shape) w.put_u32(static_cast<std::uint32_t>(e));
        for (std::size_t i = 0; i < count; ++i) w.put_f64(data[i]);
    };

    const std::vector<double> cfg_vec = pack_config(cfg_);
    put_record(kRecConfig, {static_cast<int>(cfg_vec.size())}, cfg_vec.data(), cfg_vec.size());
    if (static_cast<int>(norm_.mean.size()) != cfg_.proprio_dim)
        throw std::logic_error("cannot save a model without normalization stats");
    put_record(kRecNormMean, {cfg_.proprio_dim}, norm_.mean.data(), norm_.mean.size());
    put_record(kRecNormStd, {cfg_.proprio_dim}, norm_.std.data(), norm_.std.size());
    for (const Param* p : ps)
        put_record(kRecParam, p->v.shape, p->v.ptr(), p->v.data.size());
    atomic_write_file(path, w.bytes());
}

FdmNet FdmNet::load(const std::string& path) {
    BinReader r(read_file(path));
    r.expect_magic(kCheckpointMagic);
    const std::uint32_t count = r.get_u32();

    auto get_record = [&r](std::uint8_t expect_kind, std::vector<int>& shape) {
        const std::uint8_t kind = r.get_u8();
        if (kind != expect_kind) throw std::runtime_error("checkpoint record out of order");
        const std::uint32_t rank = r.get_u32();
        if (rank > 4) throw std::runtime_error("checkpoint record rank too large");
        shape.clear();
        std::int64_t numel = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            shape.push_back(static_cast<int>(r.get_u32()));
            numel *= shape.back();
        }
        std::vector<double> data(static_cast<std::size_t>(numel));
        for (double& v : data) v = r.get_f64();
        return data;
    };

    std::vector<int> shape;
    const std::vector<double> cfg_vec = get_record(kRecConfig, shape);
    FdmNet net(unpack_config(cfg_vec), 0);

    NormStats ns;
    ns.mean = get_record(kRecNormMean, shape);
    ns.std = get_record(kRecNormStd, shape);
    net.set_norm(ns);

    const std::vector<Param*> ps = net.params();
    if (count != ps.size() + 3) throw std::runtime_error("checkpoint parameter count mismatch");
    for (Param* p : ps) {
        std::vector<double> data = get_record(kRecParam, shape);
        if (shape != p->v.shape) throw std::runtime_error("checkpoint shape mismatch: " + p->name);
        p->v.data = std::move(data);
    }
    if (!r.at_end()) throw std::runtime_error("trailing bytes in checkpoint");
    return net;
}

}  // namespace fdm
