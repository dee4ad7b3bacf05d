#include "mdm/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mdm {

double effective_beta(double beta, double multiplier) {
    const double b = 1.0 - multiplier * (1.0 - beta);
    return std::clamp(b, 0.0, 1.0 - 1e-6);
}

LrSchedule LrSchedule::standard(double peak, int total_steps, double min_lr) {
    LrSchedule s;
    s.peak_lr = peak;
    s.min_lr = min_lr;
    s.total_steps = total_steps;
    s.warmup_steps = std::min(1000, static_cast<int>(0.25 * total_steps));
    return s;
}

double LrSchedule::lr_at(int step) const {
    if (step < warmup_steps) {
        return peak_lr * (step + 1) / static_cast<double>(warmup_steps);
    }
    const int span = std::max(1, total_steps - warmup_steps);
    const double frac = std::min(1.0, (step - warmup_steps) / static_cast<double>(span));
    const double pi = 3.14159265358979323846;
    return min_lr + 0.5 * (peak_lr - min_lr) * (1.0 + std::cos(pi * frac));
}

AdamW::AdamW(const ToyTransformer& model, AdamWHyper hyper, MultiplierTable mults)
    : hyper_(hyper), mults_(std::move(mults)) {
    for (const auto& p : model.params()) {
        m_.emplace_back(p.value.rows, p.value.cols);
        v_.emplace_back(p.value.rows, p.value.cols);
    }
}

void AdamW::step(ToyTransformer& model, const std::vector<Matrix>& grads, double lr) {
    auto& params = model.params();
    if (grads.size() != params.size()) {
        throw std::invalid_argument("AdamW::step: gradient count mismatch");
    }
    ++t_;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = params[pi];
        const Multipliers mu = mults_.effective(p.group);
        const double lr_g = lr * mu.lr;
        const double wd_g = hyper_.weight_decay * mu.wd;
        const double b1 = effective_beta(hyper_.beta1, mu.a1);
        const double b2 = effective_beta(hyper_.beta2, mu.a2);
        const double eps_g = hyper_.eps * mu.eps;
        const double bc1 = 1.0 - std::pow(b1, t_);
        const double bc2 = 1.0 - std::pow(b2, t_);

        double* w = p.value.data.data();
        const double* g = grads[pi].data.data();
        double* m = m_[pi].data.data();
        double* v = v_[pi].data.data();
        const size_t n = p.value.size();
        for (size_t j = 0; j < n; ++j) {
            if (!std::isfinite(g[j])) {
                throw std::runtime_error("non-finite gradient in parameter " + p.name);
            }
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            w[j] -= lr_g * (mhat / (std::sqrt(vhat) + eps_g) + wd_g * w[j]);
        }
    }
}

}  // namespace mdm
