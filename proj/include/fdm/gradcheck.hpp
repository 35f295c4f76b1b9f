#pragma once

#include "fdm/rng.hpp"
#include "fdm/tensor.hpp"

#include <functional>
#include <vector>

namespace fdm {

// Compares analytic gradients against central finite differences.
// `loss_and_grad` must zero the parameter grads, run forward + backward, and
// return the scalar loss; it must be deterministic across calls.
// Probes `probes_per_tensor` randomly chosen entries of each parameter (all
// entries when the tensor is smaller). Returns the worst relative error,
// with a 1e-6 absolute floor in the denominator.
double finite_diff_check(const std::function<double()>& loss_and_grad,
                         const std::vector<Param*>& params, double eps,
                         int probes_per_tensor, Rng& rng);

}  // namespace fdm
