#include "fdm/optim.hpp"

#include <cmath>

namespace fdm {

AdamW::AdamW(std::vector<Param*> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (Param* p : params_) {
        m_.emplace_back(p->v.shape);
        v_.emplace_back(p->v.shape);
    }
}

void AdamW::step(double lr, double weight_decay) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& th = params_[i]->v;
        const Tensor& g = params_[i]->g;
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        for (std::size_t j = 0; j < th.data.size(); ++j) {
            th[j] *= 1.0 - lr * weight_decay;
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
            th[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps_);
        }
    }
}

void AdamW::zero_grad() {
    for (Param* p : params_) p->zero_grad();
}

double cosine_lr(std::int64_t step, std::int64_t total_steps, double lr_max, double lr_min) {
    if (total_steps <= 0 || step >= total_steps) return lr_min;
    if (step < 0) return lr_max;
    const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(M_PI * frac));
}

}  // namespace fdm
