#pragma once

#include <utility>
#include <vector>

#include "mdm/rng.hpp"
#include "mdm/schedule.hpp"
#include "mdm/vocab.hpp"

namespace mdm {

// Partially masked view of a sequence at diffusion time t.
struct CorruptedSequence {
    Sequence base;
    double t = 0.0;
    std::vector<int> masked;    // sorted position indices, subset of maskable
    std::vector<int> tokens_t;  // base tokens with MASK_{m(i)} substituted

    bool is_masked(int i) const;
};

constexpr double kTimeFloor = 1e-3;  // epsilon of t ~ U(eps, 1)

// One uniform per position; comparing against the mask fraction gives the
// monotone coupling across times for free.
std::vector<double> draw_position_uniforms(const Sequence& seq, Rng& rng);

CorruptedSequence corrupt_with_uniforms(const UnifiedVocab& vocab, const Sequence& seq, double t,
                                        const MaskSchedule& schedule,
                                        const std::vector<double>& uniforms);

CorruptedSequence corrupt(const UnifiedVocab& vocab, const Sequence& seq, double t,
                          const MaskSchedule& schedule, Rng& rng);

// Complementary pair: second view masks exactly the maskable complement of
// the first draw's mask set.
std::pair<CorruptedSequence, CorruptedSequence> anti_mask_pair(const UnifiedVocab& vocab,
                                                               const Sequence& seq, double t,
                                                               const MaskSchedule& schedule,
                                                               Rng& rng);

// Reversal posterior: probability that a token observed masked at time t was
// masked within the last step of width dt.
double posterior_pi(double t, double dt, const MaskSchedule& schedule);
// dt -> 0 limit: -alpha_bar'(t) / (1 - alpha_bar(t)), per-unit-time rate.
double posterior_pi_continuous(double t, const MaskSchedule& schedule);

// ELBO weight |alpha_bar'(t)| / (1 - alpha_bar(t)); equals 1/t for the
// linear schedule.
double elbo_weight(double t, const MaskSchedule& schedule, double eps = kTimeFloor);

}  // namespace mdm
