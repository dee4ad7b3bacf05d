#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mdm/vocab.hpp"

namespace mdm {

// Batch-level category mixture. The reference recipe uses an equal three-way
// split with a 20% per-modality floor.
struct MixtureWeights {
    double text = 1.0 / 3;
    double image = 1.0 / 3;
    double audio = 1.0 / 3;
    bool enforce_floor = true;  // minimum 20% per category

    void validate() const;
    double weight(TaskKind k) const;
};

// Desk-scale corpus description. Payloads follow a noisy successor process so
// a small model has structure to learn.
struct SyntheticSpec {
    std::array<int, 3> payload_sizes = {16, 12, 10};
    int seq_len = 24;  // L*
    int n_sequences = 64;
    MixtureWeights mix;
    double successor_prob = 0.8;
    uint64_t seed = 1;
};

struct Dataset {
    UnifiedVocab vocab;
    std::vector<Sequence> sequences;
    std::vector<TaskKind> category;
};

Dataset make_synthetic(const SyntheticSpec& spec);

}  // namespace mdm
