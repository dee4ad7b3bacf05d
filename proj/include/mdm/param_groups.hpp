#pragma once

#include <array>
#include <map>
#include <string>

namespace mdm {

// Every parameter tensor belongs to exactly one module class; block-level
// classes additionally carry a depth bucket.
enum class ModuleClass : int {
    emb_text,
    emb_image,
    emb_audio,
    unemb_text,
    unemb_image,
    unemb_audio,
    unemb_norm,
    attn_qkv,
    attn_proj,
    attn_q_norm,
    attn_k_norm,
    mlp_gate,
    mlp_fc1,
    mlp_fc2,
    norm1,
    norm2,
};

const char* to_string(ModuleClass c);
ModuleClass module_class_from_string(const std::string& s);
bool is_block_module(ModuleClass c);
bool is_embedding_module(ModuleClass c);  // embedding/unembedding tables

struct ParamGroup {
    ModuleClass cls;
    int depth_bucket = -1;  // -1 standalone, 0 first half of blocks, 1 second half
};

// Per-group hyperparameter multipliers for AdamW and initialization.
struct Multipliers {
    double lr = 1.0;
    double wd = 1.0;
    double a1 = 1.0;   // beta1 half-life multiplier
    double a2 = 1.0;   // beta2 half-life multiplier
    double eps = 1.0;
    double init = 1.0;
};

struct MultiplierTable {
    std::map<ModuleClass, Multipliers> module;
    std::array<Multipliers, 2> depth{};  // applied to block modules only

    // module factor times depth factor, field-wise
    Multipliers effective(const ParamGroup& g) const;

    static MultiplierTable identity();
    // Reference per-module tuning for this model family.
    static MultiplierTable tuned_reference();
};

}  // namespace mdm
