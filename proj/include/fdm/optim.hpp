#pragma once

#include "fdm/tensor.hpp"

#include <vector>

namespace fdm {

// AdamW with decoupled weight decay: theta <- theta * (1 - lr*wd) applied
// separately from the bias-corrected adaptive step.
class AdamW {
public:
    explicit AdamW(std::vector<Param*> params, double beta1 = 0.9, double beta2 = 0.999,
                   double eps = 1e-8);

    void step(double lr, double weight_decay);
    void zero_grad();
    std::int64_t step_count() const { return t_; }
    const std::vector<Param*>& params() const { return params_; }

private:
    std::vector<Param*> params_;
    std::vector<Tensor> m_, v_;
    double beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
};

// Cosine decay from lr_max to lr_min over total_steps; clamps past the end.
double cosine_lr(std::int64_t step, std::int64_t total_steps, double lr_max, double lr_min);

}  // namespace fdm
