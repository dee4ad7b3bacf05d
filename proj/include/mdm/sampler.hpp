#pragma once

#include <functional>
#include <vector>

#include "mdm/denoiser.hpp"
#include "mdm/rng.hpp"
#include "mdm/schedule.hpp"
#include "mdm/vocab.hpp"

namespace mdm {

enum class RevealRule { confidence, random };

struct SamplerConfig {
    int steps = 16;            // K
    double cfg_scale = 1.0;    // g; 1 short-circuits to the conditional path
    double temperature = 1.0;
    double top_p = 1.0;
    MaskSchedule schedule = MaskSchedule::linear();
    RevealRule reveal = RevealRule::confidence;

    static SamplerConfig image_preset();
    static SamplerConfig audio_preset();
    static SamplerConfig text_preset();
};

struct GenerationState {
    Sequence seq;
    std::vector<int> masked;             // remaining masked positions, ascending
    std::vector<int> prompt_positions;   // text-prompt payload (CFG masks these)
    int step = 0;
};

// Masked initialization. Modality tasks lay out
//   TASK, BOS_m, MASK_m x target_len, EOS_m, BOS_text, prompt, EOS_text;
// the text task lays out TASK_text, prompt, MASK_text x target_len, EOS_text.
GenerationState init_masked(const UnifiedVocab& vocab, TaskKind task,
                            const std::vector<int>& prompt, int target_len, int max_len);

// l_u + g*(l_c - l_u)
Logits guided_logits(const Logits& l_cond, const Logits& l_uncond, double g);

// Softmax restricted to V_m at temperature tau, nucleus-truncated at top_p
// (ties broken by lower id). Throws NoSupportError when every in-range score
// is -inf.
int sample_token(const double* logits, const UnifiedVocab& vocab, Modality m, double temperature,
                 double top_p, Rng& rng);

struct StepTrace {
    int step;
    std::vector<int> revealed;     // positions
    std::vector<int> tokens;       // committed ids, aligned with revealed
    std::vector<double> confidence;
};

using LogitsFn = std::function<Logits(const std::vector<int>&)>;

struct GenerationResult {
    Sequence seq;
    std::vector<StepTrace> trace;
};

// Reverse process: at step k the cumulative reveal count follows
// ceil(M0 * (1 - m(t_k))), t_k = (K-k)/K. One RNG draw per masked position
// per step keeps seeded runs comparable across configs.
GenerationResult generate(const UnifiedVocab& vocab, const LogitsFn& model, GenerationState state,
                          const SamplerConfig& config, Rng& rng);

}  // namespace mdm
