#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fdm/nn.hpp"
#include "fdm/replay.hpp"
#include "fdm/rng.hpp"
#include "fdm/se2.hpp"
#include "fdm/tensor.hpp"

namespace fdm {

// Network and objective hyperparameters. Hidden sizes are serialized into
// checkpoints so a saved model can be restored without external context.
struct FdmConfig {
    int n = 10;           // prediction steps == history length
    double dt_h = 0.05;   // recording period [s]
    double dt_p = 0.5;    // prediction period [s]
    int proprio_dim = 12;
    int scan_u = 32;
    int scan_v = 32;

    int history_hidden = 32;
    int history_layers = 2;
    int pred_hidden = 64;
    int pred_layers = 2;
    int action_enc = 16;
    int state_head_hidden = 64;
    int risk_head_hidden = 32;
    double dropout = 0.2;

    double eps_pose = 1.0;
    double eps_risk = 1.0;
    double eps_stop = 0.5;
    double delta_risk = 0.5;  // risk threshold gating the stop loss

    bool use_scan = true;     // ablation: zero the height scan input
    bool use_proprio = true;  // ablation: zero the proprioceptive input

    ActionBounds bounds{};

    int state_dim() const { return 4; }  // x, y, sin yaw, cos yaw
    int gru_in() const { return state_dim() + proprio_dim; }
};

// Batched inputs, already laid out as tensors but not yet normalized.
struct FdmBatch {
    int B = 0;
    Tensor hist;         // [B, n, 4 + proprio_dim] raw (proprio unnormalized)
    Tensor scan;         // [B, 1, u, v]
    Tensor actions;      // [B, n, 3]
    Tensor label_poses;  // [B, n, 3] (x, y, yaw), zero if unlabeled
    Tensor label_risks;  // [B, n] in {0, 1}, zero if unlabeled
};

struct FdmPrediction {
    int B = 0, n = 0;
    Tensor residuals;    // [B, n, 3] velocity corrections from the state head
    Tensor applied;      // [B, n, 3] clip(action + residual)
    Tensor poses;        // [B, n, 3] integrated (x, y, yaw), yaw unwrapped
    Tensor risks;        // [B, n] failure probabilities in [0, 1]
    Tensor risk_logits;  // [B, n] pre-sigmoid risk activations
};

struct FdmLosses {
    double pose = 0.0;
    double risk = 0.0;
    double stop = 0.0;
    double total = 0.0;
};

class FdmNet {
  public:
    FdmNet(const FdmConfig& cfg, std::uint64_t seed);

    const FdmConfig& config() const { return cfg_; }
    NormStats& norm() { return norm_; }
    const NormStats& norm() const { return norm_; }
    void set_norm(const NormStats& ns) { norm_ = ns; }

    std::vector<Param*> params();
    std::size_t param_count();

    // Forward pass over a batch. With train=true dropout is active and every
    // layer caches activations for a subsequent backward() call.
    FdmPrediction forward(const FdmBatch& batch, bool train, Rng& rng);

    // Inference-only forward: no dropout, no activation caching.
    FdmPrediction infer(const FdmBatch& batch);

    // Shared-context inference for planners: encode one observation, then
    // roll out C candidate action sequences against the replicated context.
    Tensor encode_context(const FdmBatch& single);          // [1, 2 * pred_hidden]
    FdmPrediction rollout(const Tensor& context, const Tensor& actions);

    // Backprop through the losses already evaluated on `pred`. Gradients
    // accumulate into the parameters; returns nothing to the caller because
    // inputs are leaves. Requires the immediately preceding forward(train).
    void backward(const FdmPrediction& pred, const FdmBatch& batch);

    void zero_grad();
    void clear_caches();

    void save(const std::string& path) const;
    static FdmNet load(const std::string& path);

  private:
    struct StepCache;

    FdmConfig cfg_;
    NormStats norm_;

    std::vector<GruCell> hist_gru_;
    Dropout hist_drop_;
    Conv2d conv1_, conv2_, conv3_;
    LeakyRelu cnn_act1_, cnn_act2_, cnn_act3_;
    MaxPool pool_;
    Dense bridge_;
    Tanh bridge_act_;
    Dense act_enc_;
    LeakyRelu act_enc_act_;
    Dropout act_enc_drop_;
    std::vector<GruCell> pred_gru_;
    Dropout pred_drop_;
    Dense state1_, state2_, state3_;
    LeakyRelu state_act1_, state_act2_;
    Dropout state_drop_;
    Dense risk1_, risk2_;
    LeakyRelu risk_act1_;

    int cnn_flat_ = 0;

    struct FwdCache {
        Tensor norm_hist;   // [B, n, gru_in] after normalization/ablation
        Tensor actions;     // [B, n, 3]
        Tensor clip_mask;   // [B, n, 3]
        Tensor applied;     // [B, n, 3]
        Tensor poses;       // [B, n, 3]
        int B = 0;
    };
    std::vector<FwdCache> fwd_caches_;

    Tensor normalize_inputs(const Tensor& hist, int B) const;
    Tensor cnn_forward(const Tensor& scan, bool cache);
    Tensor history_forward(const Tensor& norm_hist, int B, bool train, Rng& rng, bool cache);
    void integrate(const Tensor& actions, const Tensor& residuals, FdmPrediction& out,
                   Tensor* clip_mask) const;
};

// Convert samples into a batch; labels are copied when present.
FdmBatch make_batch(const std::vector<const FdmSample*>& samples, const FdmConfig& cfg);
FdmBatch make_batch(const std::vector<FdmSample>& samples, const FdmConfig& cfg);

// Single-observation batch used by the planner (no labels).
FdmBatch make_observation(const std::vector<double>& hist_states,
                          const std::vector<double>& hist_proprio,
                          const std::vector<float>& scan_values, const FdmConfig& cfg);

FdmLosses compute_losses(const FdmPrediction& pred, const FdmBatch& batch, const FdmConfig& cfg);

// d(total)/d(poses) as [B, n, 3] (yaw component via the sin/cos encoding) and
// d(total)/d(risk_logits) as [B, n].
std::pair<Tensor, Tensor> loss_gradients(const FdmPrediction& pred, const FdmBatch& batch,
                                         const FdmConfig& cfg);

}  // namespace fdm
