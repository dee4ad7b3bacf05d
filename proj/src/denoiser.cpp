#include "mdm/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mdm {

bool consistent_with(const UnifiedVocab& vocab, const std::vector<int>& corpus_tokens,
                     const std::vector<int>& tokens_t) {
    if (corpus_tokens.size() != tokens_t.size()) return false;
    for (size_t i = 0; i < tokens_t.size(); ++i) {
        if (!vocab.is_mask(tokens_t[i]) && tokens_t[i] != corpus_tokens[i]) return false;
    }
    return true;
}

Logits exact_posterior(const UnifiedVocab& vocab, const std::vector<WeightedSequence>& corpus,
                       const std::vector<int>& tokens_t) {
    const int L = static_cast<int>(tokens_t.size());
    const int V = vocab.size();
    const double ninf = -std::numeric_limits<double>::infinity();

    Matrix counts(L, V);
    double total = 0.0;
    for (const auto& member : corpus) {
        if (member.weight <= 0.0) continue;
        if (!consistent_with(vocab, member.tokens, tokens_t)) continue;
        total += member.weight;
        for (int i = 0; i < L; ++i) counts(i, member.tokens[i]) += member.weight;
    }
    if (total <= 0.0) throw NoSupportError("exact_posterior: no corpus member consistent with s_t");

    Logits out(L, V);
    for (int i = 0; i < L; ++i) {
        for (int v = 0; v < V; ++v) {
            const double p = counts(i, v) / total;
            out(i, v) = p > 0.0 ? std::log(p) : ninf;
        }
        if (!vocab.is_mask(tokens_t[i])) {
            // observed position: point mass on the observed token
            for (int v = 0; v < V; ++v) out(i, v) = ninf;
            out(i, tokens_t[i]) = 0.0;
        }
    }
    return out;
}

double log_sum_exp(const double* scores, int n) {
    double m = -std::numeric_limits<double>::infinity();
    for (int v = 0; v < n; ++v) m = std::max(m, scores[v]);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (int v = 0; v < n; ++v) s += std::exp(scores[v] - m);
    return m + std::log(s);
}

LossBreakdown masked_loss(const Logits& logits, const std::vector<int>& s0,
                          const std::vector<int>& masked_positions, double weight,
                          double lambda_z) {
    LossBreakdown out;
    if (masked_positions.empty()) return out;

    double ce_sum = 0.0;
    double z_sum = 0.0;
    for (int i : masked_positions) {
        const double lse = log_sum_exp(logits.row(i), logits.cols);
        const double ce = lse - logits(i, s0[i]);
        out.per_position.push_back(ce);
        ce_sum += ce;
        z_sum += lse * lse;
    }
    const double n = static_cast<double>(masked_positions.size());
    out.diffusion = weight * ce_sum / n;
    out.z = lambda_z * z_sum / n;
    out.total = out.diffusion + out.z;
    return out;
}

}  // namespace mdm
