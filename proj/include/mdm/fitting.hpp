#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace mdm {

using Objective = std::function<double(const std::vector<double>&)>;

struct MinimizeResult {
    std::vector<double> x;
    double value = 0.0;
    int evals = 0;
    bool converged = false;
};

// L-BFGS (memory 8) with central-difference gradients and Armijo
// backtracking. Unconstrained; callers reparameterize (e.g. log space) when
// positivity matters.
MinimizeResult minimize_lbfgs(const Objective& f, std::vector<double> x0, int max_iters = 200,
                              double grad_tol = 1e-9);

// Basin-hopping flavoured multistart: random starts inside `bounds`
// interleaved with perturbations of the incumbent, each polished by L-BFGS.
MinimizeResult minimize_multistart(const Objective& f,
                                   const std::vector<std::pair<double, double>>& bounds,
                                   int restarts, uint64_t seed, int max_iters = 200);

// 1-D minimizer on [lo, hi].
double golden_section_min(const std::function<double(double)>& f, double lo, double hi,
                          double tol = 1e-10, int max_iters = 300);

}  // namespace mdm
