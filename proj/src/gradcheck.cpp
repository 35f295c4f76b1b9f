#include "fdm/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace fdm {

double finite_diff_check(const std::function<double()>& loss_and_grad,
                         const std::vector<Param*>& params, double eps,
                         int probes_per_tensor, Rng& rng) {
    loss_and_grad();
    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (Param* p : params) analytic.push_back(p->g);

    double worst = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& th = params[pi]->v;
        const std::size_t count = th.data.size();
        std::vector<std::size_t> idx;
        if (static_cast<int>(count) <= probes_per_tensor) {
            idx.resize(count);
            for (std::size_t i = 0; i < count; ++i) idx[i] = i;
        } else {
            for (int i = 0; i < probes_per_tensor; ++i)
                idx.push_back(static_cast<std::size_t>(
                    uniform(rng, 0.0, static_cast<double>(count)) ) % count);
        }
        for (std::size_t j : idx) {
            const double orig = th[j];
            th[j] = orig + eps;
            const double lp = loss_and_grad();
            th[j] = orig - eps;
            const double lm = loss_and_grad();
            th[j] = orig;
            const double fd = (lp - lm) / (2.0 * eps);
            const double an = analytic[pi][j];
            const double denom = std::max({1e-6, std::abs(fd), std::abs(an)});
            worst = std::max(worst, std::abs(fd - an) / denom);
        }
    }
    // Restore the analytic gradients of the unperturbed point.
    loss_and_grad();
    return worst;
}

}  // namespace fdm
