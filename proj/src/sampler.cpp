#include "mdm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mdm {

SamplerConfig SamplerConfig::image_preset() {
    SamplerConfig c;
    c.cfg_scale = 6.0;
    c.temperature = 1.0;
    c.top_p = 1.0;
    return c;
}

SamplerConfig SamplerConfig::audio_preset() {
    SamplerConfig c;
    c.cfg_scale = 3.0;
    c.temperature = 1.2;
    c.top_p = 0.9;
    return c;
}

SamplerConfig SamplerConfig::text_preset() { return SamplerConfig{}; }

GenerationState init_masked(const UnifiedVocab& vocab, TaskKind task,
                            const std::vector<int>& prompt, int target_len, int max_len) {
    if (target_len < 0) throw std::invalid_argument("init_masked: negative target_len");
    GenerationState st;
    auto& s = st.seq;
    const Modality m = payload_modality(task);

    if (task == TaskKind::text) {
        const int need = 2 + static_cast<int>(prompt.size()) + target_len;
        if (need > max_len) {
            throw std::length_error("init_masked: layout needs " + std::to_string(need) +
                                    " > max " + std::to_string(max_len));
        }
        s.tokens.push_back(vocab.task(TaskKind::text));
        for (int id : prompt) s.tokens.push_back(id);
        for (int i = 0; i < target_len; ++i) {
            st.masked.push_back(static_cast<int>(s.tokens.size()));
            s.tokens.push_back(vocab.mask(Modality::text));
        }
        s.tokens.push_back(vocab.eos(Modality::text));
        s.modality.assign(s.tokens.size(), Modality::text);
    } else {
        const int need = 5 + target_len + static_cast<int>(prompt.size());
        if (need > max_len) {
            throw std::length_error("init_masked: layout needs " + std::to_string(need) +
                                    " > max " + std::to_string(max_len));
        }
        s.tokens.push_back(vocab.task(task));
        s.tokens.push_back(vocab.bos(m));
        for (int i = 0; i < target_len; ++i) {
            st.masked.push_back(static_cast<int>(s.tokens.size()));
            s.tokens.push_back(vocab.mask(m));
        }
        s.tokens.push_back(vocab.eos(m));
        s.tokens.push_back(vocab.bos(Modality::text));
        for (int id : prompt) {
            if (vocab.is_payload(id)) {
                st.prompt_positions.push_back(static_cast<int>(s.tokens.size()));
            }
            s.tokens.push_back(id);
        }
        s.tokens.push_back(vocab.eos(Modality::text));
        s.modality.assign(s.tokens.size(), Modality::text);
        for (int i = 1; i <= target_len + 2; ++i) s.modality[i] = m;  // BOS_m .. EOS_m
    }
    s.maskable.assign(s.tokens.size(), false);
    for (int i : st.masked) s.maskable[i] = true;
    return st;
}

Logits guided_logits(const Logits& l_cond, const Logits& l_uncond, double g) {
    if (l_cond.rows != l_uncond.rows || l_cond.cols != l_uncond.cols) {
        throw std::invalid_argument("guided_logits: shape mismatch");
    }
    Logits out(l_cond.rows, l_cond.cols);
    for (size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = l_uncond.data[i] + g * (l_cond.data[i] - l_uncond.data[i]);
    }
    return out;
}

namespace {

// Tempered softmax over the modality's payload range; probabilities aligned
// with ids [payload_begin, payload_end).
std::vector<double> restricted_probs(const double* logits, const UnifiedVocab& vocab, Modality m,
                                     double temperature) {
    const int begin = vocab.payload_begin(m), end = vocab.payload_end(m);
    double mx = -std::numeric_limits<double>::infinity();
    for (int v = begin; v < end; ++v) mx = std::max(mx, logits[v]);
    if (!std::isfinite(mx)) {
        throw NoSupportError("sample_token: no finite logit in modality range");
    }
    std::vector<double> p(end - begin);
    double z = 0.0;
    for (int v = begin; v < end; ++v) {
        p[v - begin] = std::exp((logits[v] - mx) / temperature);
        z += p[v - begin];
    }
    for (double& x : p) x /= z;
    return p;
}

int draw_nucleus(const std::vector<double>& probs, int id_offset, double top_p, Rng& rng) {
    const int n = static_cast<int>(probs.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (probs[a] != probs[b]) return probs[a] > probs[b];
        return a < b;  // ties broken toward the lower id
    });
    double mass = 0.0;
    int keep = n;
    for (int i = 0; i < n; ++i) {
        mass += probs[order[i]];
        if (mass >= top_p - 1e-15) {
            keep = i + 1;
            break;
        }
    }
    const double u = rng.uniform() * mass;
    double acc = 0.0;
    for (int i = 0; i < keep; ++i) {
        acc += probs[order[i]];
        if (u < acc) return id_offset + order[i];
    }
    return id_offset + order[keep - 1];
}

}  // namespace

int sample_token(const double* logits, const UnifiedVocab& vocab, Modality m, double temperature,
                 double top_p, Rng& rng) {
    if (temperature <= 0.0) throw std::invalid_argument("sample_token: temperature must be > 0");
    if (top_p <= 0.0 || top_p > 1.0) throw std::invalid_argument("sample_token: top_p in (0,1]");
    const std::vector<double> probs = restricted_probs(logits, vocab, m, temperature);
    return draw_nucleus(probs, vocab.payload_begin(m), top_p, rng);
}

GenerationResult generate(const UnifiedVocab& vocab, const LogitsFn& model, GenerationState state,
                          const SamplerConfig& config, Rng& rng) {
    if (config.steps < 1) throw std::invalid_argument("generate: steps must be >= 1");
    GenerationResult res;
    const int m0 = static_cast<int>(state.masked.size());
    const int K = config.steps;
    const bool use_cfg = config.cfg_scale != 1.0;

    int revealed_total = 0;
    for (int k = 1; k <= K && !state.masked.empty(); ++k) {
        const double t_k = static_cast<double>(K - k) / K;
        const int cum_target =
            static_cast<int>(std::ceil(m0 * (1.0 - config.schedule.mask_fraction(t_k))));
        const int n_reveal = std::min<int>(std::max(0, cum_target - revealed_total),
                                           static_cast<int>(state.masked.size()));

        Logits logits = model(state.seq.tokens);
        if (use_cfg) {
            std::vector<int> uncond_tokens = state.seq.tokens;
            for (int i : state.prompt_positions) uncond_tokens[i] = vocab.mask(Modality::text);
            logits = guided_logits(logits, model(uncond_tokens), config.cfg_scale);
        }

        // One candidate draw per masked position, in ascending position order.
        const size_t n_masked = state.masked.size();
        std::vector<int> cand(n_masked);
        std::vector<double> conf(n_masked);
        for (size_t j = 0; j < n_masked; ++j) {
            const int i = state.masked[j];
            const Modality m = state.seq.modality[i];
            const std::vector<double> probs =
                restricted_probs(logits.row(i), vocab, m, config.temperature);
            cand[j] = draw_nucleus(probs, vocab.payload_begin(m), config.top_p, rng);
            conf[j] = *std::max_element(probs.begin(), probs.end());
        }

        std::vector<size_t> order(n_masked);
        std::iota(order.begin(), order.end(), 0);
        if (config.reveal == RevealRule::confidence) {
            std::stable_sort(order.begin(), order.end(),
                             [&](size_t a, size_t b) { return conf[a] > conf[b]; });
        } else {
            std::shuffle(order.begin(), order.end(), rng.engine());
        }

        StepTrace trace;
        trace.step = k;
        std::vector<bool> taken(n_masked, false);
        for (int r = 0; r < n_reveal; ++r) {
            const size_t j = order[r];
            taken[j] = true;
            const int i = state.masked[j];
            state.seq.tokens[i] = cand[j];
            trace.revealed.push_back(i);
            trace.tokens.push_back(cand[j]);
            trace.confidence.push_back(conf[j]);
        }
        std::vector<int> remaining;
        for (size_t j = 0; j < n_masked; ++j) {
            if (!taken[j]) remaining.push_back(state.masked[j]);
        }
        state.masked = std::move(remaining);
        revealed_total += n_reveal;
        state.step = k;
        res.trace.push_back(std::move(trace));
    }
    res.seq = std::move(state.seq);
    return res;
}

}  // namespace mdm
