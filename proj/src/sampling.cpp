#include "fdm/sampling.hpp"

#include <cmath>

namespace fdm {

ActionSeq linear_recursion(const Twist& a0, const Twist& a_rand, double beta, int n,
                           const ActionBounds& bounds, double dt_p) {
    ActionSeq seq;
    seq.dt_p = dt_p;
    seq.twists.reserve(n);
    Twist a = bounds.clip(a0);
    seq.twists.push_back(a);
    for (int t = 1; t < n; ++t) {
        a = bounds.clip({beta * a.vx + (1.0 - beta) * a_rand.vx,
                         beta * a.vy + (1.0 - beta) * a_rand.vy,
                         beta * a.omega + (1.0 - beta) * a_rand.omega});
        seq.twists.push_back(a);
    }
    return seq;
}

ActionSeq normal_recursion(const Twist& a0, double sigma, int n, const ActionBounds& bounds,
                           double dt_p, Rng& rng) {
    ActionSeq seq;
    seq.dt_p = dt_p;
    seq.twists.reserve(n);
    Twist a = bounds.clip(a0);
    seq.twists.push_back(a);
    for (int t = 1; t < n; ++t) {
        a = bounds.clip({a.vx + gaussian(rng, 0.0, sigma), a.vy + gaussian(rng, 0.0, sigma),
                         a.omega + gaussian(rng, 0.0, sigma)});
        seq.twists.push_back(a);
    }
    return seq;
}

namespace {

Twist uniform_twist(const ActionBounds& b, Rng& rng) {
    return {uniform(rng, b.min[0], b.max[0]), uniform(rng, b.min[1], b.max[1]),
            uniform(rng, b.min[2], b.max[2])};
}

}  // namespace

ActionSeq sample_linear_correlated(const SamplerConfig& cfg, int n, Rng& rng) {
    const double beta = uniform(rng, cfg.beta_min, 1.0);
    const Twist a0 = uniform_twist(cfg.bounds, rng);
    const Twist a_rand = uniform_twist(cfg.bounds, rng);
    return linear_recursion(a0, a_rand, beta, n, cfg.bounds, cfg.dt_p);
}

ActionSeq sample_normal_correlated(const SamplerConfig& cfg, int n, Rng& rng) {
    const double sigma = uniform(rng, 0.0, cfg.sigma_max);
    const Twist a0 = uniform_twist(cfg.bounds, rng);
    return normal_recursion(a0, sigma, n, cfg.bounds, cfg.dt_p, rng);
}

bool use_planner_for_episode(std::int64_t episode_index, double rho) {
    if (rho <= 0.0) return false;
    const double before = std::floor(episode_index * rho);
    const double after = std::floor((episode_index + 1) * rho);
    return after > before;
}

}  // namespace fdm
