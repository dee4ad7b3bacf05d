#pragma once

#include <string>
#include <vector>

#include "mdm/denoiser.hpp"
#include "mdm/param_groups.hpp"
#include "mdm/rng.hpp"
#include "mdm/tensor.hpp"
#include "mdm/vocab.hpp"

namespace mdm {

struct ToyTransformerConfig {
    int n_layers = 2;
    int d_emb = 32;
    int n_heads = 4;
    double swiglu_factor = 2.75;
    double rope_base = 10000.0;
    bool qk_norm = true;
    bool use_rope = true;
    double init_std = 0.02;

    int head_dim() const { return d_emb / n_heads; }
    int hidden_dim() const { return static_cast<int>(swiglu_factor * d_emb + 0.5); }
    // recorded for provenance; the reference recipe scales at rho = 128
    double width_depth_ratio() const { return static_cast<double>(d_emb) / n_layers; }
};

struct Param {
    std::string name;
    ParamGroup group;
    Matrix value;
};

// One training example for loss/grad evaluation.
struct LossItem {
    const std::vector<int>* tokens_t;  // corrupted tokens
    const std::vector<int>* s0;        // clean tokens
    const std::vector<int>* masked;    // masked positions (I_t)
    double weight = 1.0;               // w(t)
};

// Bidirectional denoising transformer: pre-norm RMSNorm, SwiGLU MLP, RoPE,
// optional QK-norm, per-modality embedding/unembedding tables. Pads are
// excluded from attention and never carry loss.
class ToyTransformer {
public:
    ToyTransformer(UnifiedVocab vocab, ToyTransformerConfig config);

    void init_weights(uint64_t seed, const MultiplierTable& mults = MultiplierTable::identity());

    Logits forward(const std::vector<int>& tokens) const;

    // Mean loss over items; adds d(mean loss)/d(param) into grads (same
    // layout as params()).
    double loss_and_grad(const std::vector<LossItem>& items, double lambda_z,
                         std::vector<Matrix>& grads) const;

    double loss_only(const std::vector<LossItem>& items, double lambda_z) const;

    const std::vector<Param>& params() const { return params_; }
    std::vector<Param>& params() { return params_; }
    std::vector<Matrix> zero_grads() const;

    long long num_params() const;
    long long num_nonembed_params() const;

    const UnifiedVocab& vocab() const { return vocab_; }
    const ToyTransformerConfig& config() const { return config_; }

    void save(const std::string& path) const;
    static ToyTransformer load(const std::string& path);

private:
    struct Cache;
    Logits forward_impl(const std::vector<int>& tokens, Cache* cache) const;
    void backward_impl(const std::vector<int>& tokens, const Cache& cache, const Matrix& dlogits,
                       std::vector<Matrix>& grads) const;

    int pidx(const std::string& name) const;
    const Matrix& P(int idx) const { return params_[idx].value; }

    UnifiedVocab vocab_;
    ToyTransformerConfig config_;
    std::vector<Param> params_;

    // cached parameter indices
    int emb_[3], unemb_[3], unemb_norm_;
    struct LayerIdx {
        int norm1, qkv, q_norm, k_norm, proj, norm2, gate, fc1, fc2;
    };
    std::vector<LayerIdx> layers_;
};

}  // namespace mdm
