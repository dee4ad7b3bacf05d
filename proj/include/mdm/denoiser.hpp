#pragma once

#include <stdexcept>
#include <vector>

#include "mdm/forward_process.hpp"
#include "mdm/tensor.hpp"
#include "mdm/vocab.hpp"

namespace mdm {

// Per-position scores over the unified vocabulary, L x |V|.
using Logits = Matrix;

struct NoSupportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct WeightedSequence {
    std::vector<int> tokens;
    double weight = 1.0;
};

// Exact Bayes denoiser over a small enumerable corpus. Returns log of the
// conditional P(s_0^i = v | unmasked tokens of s_t), -inf where the posterior
// has no mass. Positions observed unmasked get a point mass on their token.
Logits exact_posterior(const UnifiedVocab& vocab, const std::vector<WeightedSequence>& corpus,
                       const std::vector<int>& tokens_t);

// Consistency predicate used by the oracle: every non-MASK position agrees.
bool consistent_with(const UnifiedVocab& vocab, const std::vector<int>& corpus_tokens,
                     const std::vector<int>& tokens_t);

struct LossBreakdown {
    double diffusion = 0.0;  // w(t) * mean cross-entropy over masked positions
    double z = 0.0;          // lambda_z * mean (logsumexp h)^2 over masked positions
    double total = 0.0;
    std::vector<double> per_position;  // cross-entropy of each masked position, in I_t order
};

// Objective terms for one sequence. Softmax runs over the full unified
// vocabulary; modality restriction only happens at sampling time.
LossBreakdown masked_loss(const Logits& logits, const std::vector<int>& s0,
                          const std::vector<int>& masked_positions, double weight,
                          double lambda_z);

double log_sum_exp(const double* scores, int n);

}  // namespace mdm
