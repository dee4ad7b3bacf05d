#pragma once

#include <vector>

#include "mdm/param_groups.hpp"
#include "mdm/tensor.hpp"
#include "mdm/transformer.hpp"

namespace mdm {

// Base AdamW tuple. Per-module behaviour comes from a MultiplierTable, not
// from editing these fields.
struct AdamWHyper {
    double lr = 9e-4;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double eps = 1e-8;
    double weight_decay = 0.1;
};

// Momentum multipliers act on the forgetting rate: beta_eff = 1 - a*(1-beta),
// clipped into [0, 1-1e-6). a>1 therefore shortens the averaging half-life.
double effective_beta(double beta, double multiplier);

// Linear warmup to peak, then cosine decay to min_lr.
struct LrSchedule {
    double peak_lr;
    double min_lr = 1e-6;
    int total_steps = 1;
    int warmup_steps = 0;

    // warmup = min(1000, 0.25 * total)
    static LrSchedule standard(double peak, int total_steps, double min_lr = 1e-6);
    double lr_at(int step) const;  // step counts from 0
};

class AdamW {
public:
    AdamW(const ToyTransformer& model, AdamWHyper hyper,
          MultiplierTable mults = MultiplierTable::identity());

    // lr is the current scheduled base rate (pre-multiplier). Throws on
    // non-finite gradients, naming the offending parameter.
    void step(ToyTransformer& model, const std::vector<Matrix>& grads, double lr);

    const AdamWHyper& hyper() const { return hyper_; }
    AdamWHyper& hyper() { return hyper_; }
    const MultiplierTable& multipliers() const { return mults_; }
    int steps_taken() const { return t_; }

private:
    AdamWHyper hyper_;
    MultiplierTable mults_;
    std::vector<Matrix> m_, v_;
    int t_ = 0;
};

}  // namespace mdm
