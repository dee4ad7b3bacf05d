#include "mdm/forward_process.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mdm {

bool CorruptedSequence::is_masked(int i) const {
    return std::binary_search(masked.begin(), masked.end(), i);
}

std::vector<double> draw_position_uniforms(const Sequence& seq, Rng& rng) {
    std::vector<double> u(seq.tokens.size());
    for (auto& v : u) v = rng.uniform();
    return u;
}

CorruptedSequence corrupt_with_uniforms(const UnifiedVocab& vocab, const Sequence& seq, double t,
                                        const MaskSchedule& schedule,
                                        const std::vector<double>& uniforms) {
    if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("corrupt: t must lie in (0, 1]");
    if (uniforms.size() != seq.tokens.size()) {
        throw std::invalid_argument("corrupt: one uniform per position required");
    }
    const double m = schedule.mask_fraction(t);
    CorruptedSequence out;
    out.base = seq;
    out.t = t;
    out.tokens_t = seq.tokens;
    for (int i = 0; i < seq.length(); ++i) {
        if (seq.maskable[i] && uniforms[i] < m) {
            out.masked.push_back(i);
            out.tokens_t[i] = vocab.mask(seq.modality[i]);
        }
    }
    return out;
}

CorruptedSequence corrupt(const UnifiedVocab& vocab, const Sequence& seq, double t,
                          const MaskSchedule& schedule, Rng& rng) {
    return corrupt_with_uniforms(vocab, seq, t, schedule, draw_position_uniforms(seq, rng));
}

std::pair<CorruptedSequence, CorruptedSequence> anti_mask_pair(const UnifiedVocab& vocab,
                                                               const Sequence& seq, double t,
                                                               const MaskSchedule& schedule,
                                                               Rng& rng) {
    CorruptedSequence first = corrupt(vocab, seq, t, schedule, rng);
    CorruptedSequence second;
    second.base = seq;
    second.t = t;
    second.tokens_t = seq.tokens;
    for (int i = 0; i < seq.length(); ++i) {
        if (seq.maskable[i] && !first.is_masked(i)) {
            second.masked.push_back(i);
            second.tokens_t[i] = vocab.mask(seq.modality[i]);
        }
    }
    return {std::move(first), std::move(second)};
}

double posterior_pi(double t, double dt, const MaskSchedule& schedule) {
    if (!(dt > 0.0) || !(t - dt >= 0.0) || !(t <= 1.0)) {
        throw std::invalid_argument("posterior_pi: need 0 <= t-dt < t <= 1");
    }
    const double a_prev = schedule.alpha_bar(t - dt);
    const double a_now = schedule.alpha_bar(t);
    const double denom = 1.0 - a_now;
    if (denom <= 0.0) throw std::invalid_argument("posterior_pi: no mass masked at time t");
    return (a_prev - a_now) / denom;
}

double posterior_pi_continuous(double t, const MaskSchedule& schedule) {
    const double denom = 1.0 - schedule.alpha_bar(t);
    if (denom <= 0.0) throw std::invalid_argument("posterior_pi: no mass masked at time t");
    return -schedule.alpha_bar_prime(t) / denom;
}

double elbo_weight(double t, const MaskSchedule& schedule, double eps) {
    if (!(t > eps && t <= 1.0)) {
        throw std::invalid_argument("elbo_weight: t must lie in (eps, 1]");
    }
    return std::abs(schedule.alpha_bar_prime(t)) / (1.0 - schedule.alpha_bar(t));
}

}  // namespace mdm
