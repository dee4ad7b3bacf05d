#include "mdm/param_groups.hpp"

#include <stdexcept>

namespace mdm {

namespace {
constexpr const char* kNames[] = {
    "emb_text",   "emb_image",  "emb_audio",  "unemb_text", "unemb_image", "unemb_audio",
    "unemb_norm", "attn_qkv",   "attn_proj",  "attn_q_norm", "attn_k_norm", "mlp_gate",
    "mlp_fc1",    "mlp_fc2",    "norm1",      "norm2",
};
}  // namespace

const char* to_string(ModuleClass c) { return kNames[static_cast<int>(c)]; }

ModuleClass module_class_from_string(const std::string& s) {
    for (int i = 0; i < 16; ++i) {
        if (s == kNames[i]) return static_cast<ModuleClass>(i);
    }
    throw std::invalid_argument("unknown module class: " + s);
}

bool is_block_module(ModuleClass c) {
    switch (c) {
        case ModuleClass::attn_qkv:
        case ModuleClass::attn_proj:
        case ModuleClass::attn_q_norm:
        case ModuleClass::attn_k_norm:
        case ModuleClass::mlp_gate:
        case ModuleClass::mlp_fc1:
        case ModuleClass::mlp_fc2:
        case ModuleClass::norm1:
        case ModuleClass::norm2:
            return true;
        default:
            return false;
    }
}

bool is_embedding_module(ModuleClass c) {
    switch (c) {
        case ModuleClass::emb_text:
        case ModuleClass::emb_image:
        case ModuleClass::emb_audio:
        case ModuleClass::unemb_text:
        case ModuleClass::unemb_image:
        case ModuleClass::unemb_audio:
            return true;
        default:
            return false;
    }
}

Multipliers MultiplierTable::effective(const ParamGroup& g) const {
    Multipliers m;
    auto it = module.find(g.cls);
    if (it != module.end()) m = it->second;
    if (g.depth_bucket >= 0 && is_block_module(g.cls)) {
        const Multipliers& d = depth[g.depth_bucket];
        m.lr *= d.lr;
        m.wd *= d.wd;
        m.a1 *= d.a1;
        m.a2 *= d.a2;
        m.eps *= d.eps;
        m.init *= d.init;
    }
    return m;
}

MultiplierTable MultiplierTable::identity() {
    MultiplierTable t;
    t.depth = {Multipliers{}, Multipliers{}};
    return t;
}

MultiplierTable MultiplierTable::tuned_reference() {
    MultiplierTable t;
    auto set = [&](ModuleClass c, double lr, double wd, double a1, double a2, double eps,
                   double init) { t.module[c] = {lr, wd, a1, a2, eps, init}; };
    set(ModuleClass::emb_audio, 2.192, 1.009, 0.962, 1.493, 1.494, 1.826);
    set(ModuleClass::emb_image, 1.013, 0.864, 2.108, 0.685, 0.734, 0.554);
    set(ModuleClass::emb_text, 3.937, 1.593, 1.421, 1.791, 0.317, 0.379);
    set(ModuleClass::unemb_audio, 1.633, 1.510, 3.442, 0.594, 0.742, 3.422);
    set(ModuleClass::unemb_image, 1.655, 1.213, 1.929, 1.042, 0.635, 1.524);
    set(ModuleClass::unemb_text, 3.008, 0.737, 1.346, 0.955, 1.206, 0.341);
    set(ModuleClass::unemb_norm, 2.305, 0.817, 4.508, 2.740, 1.938, 2.175);
    set(ModuleClass::attn_qkv, 1.714, 0.821, 0.173, 0.557, 0.391, 2.498);
    set(ModuleClass::attn_proj, 0.630, 0.354, 0.256, 0.339, 1.627, 4.732);
    set(ModuleClass::attn_q_norm, 0.535, 0.731, 1.530, 0.902, 0.848, 1.344);
    set(ModuleClass::attn_k_norm, 0.754, 0.497, 1.074, 0.822, 0.368, 0.436);
    set(ModuleClass::mlp_gate, 0.489, 0.634, 1.171, 1.870, 4.913, 0.643);
    set(ModuleClass::mlp_fc1, 1.271, 1.295, 1.590, 3.309, 1.415, 1.944);
    set(ModuleClass::mlp_fc2, 1.405, 1.308, 2.684, 0.655, 1.790, 0.878);
    set(ModuleClass::norm1, 1.311, 1.105, 0.282, 1.161, 1.477, 2.171);
    set(ModuleClass::norm2, 0.899, 0.525, 1.533, 1.789, 0.712, 1.189);
    t.depth[0] = {1.102, 0.725, 1.030, 3.053, 0.663, 0.997};
    t.depth[1] = {0.877, 1.018, 0.911, 1.149, 2.645, 0.485};
    return t;
}

}  // namespace mdm
