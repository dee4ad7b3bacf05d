#include "mdm/synthetic.hpp"

#include <cmath>
#include <stdexcept>

#include "mdm/rng.hpp"

namespace mdm {

void MixtureWeights::validate() const {
    if (text < 0 || image < 0 || audio < 0) {
        throw std::invalid_argument("mixture weights must be non-negative");
    }
    if (std::abs(text + image + audio - 1.0) > 1e-9) {
        throw std::invalid_argument("mixture weights must sum to 1");
    }
    if (enforce_floor && (text < 0.2 || image < 0.2 || audio < 0.2)) {
        throw std::invalid_argument("mixture weights below the 20% per-modality floor");
    }
}

double MixtureWeights::weight(TaskKind k) const {
    switch (k) {
        case TaskKind::text: return text;
        case TaskKind::image_text: return image;
        default: return audio;
    }
}

namespace {

std::vector<int> noisy_walk(Rng& rng, int len, int vocab_size, double successor_prob) {
    std::vector<int> out(len);
    int cur = static_cast<int>(rng.index(vocab_size));
    for (int i = 0; i < len; ++i) {
        out[i] = cur;
        cur = rng.uniform() < successor_prob ? (cur + 1) % vocab_size
                                             : static_cast<int>(rng.index(vocab_size));
    }
    return out;
}

}  // namespace

Dataset make_synthetic(const SyntheticSpec& spec) {
    spec.mix.validate();
    if (spec.seq_len < 8) throw std::invalid_argument("make_synthetic: seq_len too small");

    Dataset ds;
    ds.vocab = UnifiedVocab::build(spec.payload_sizes);
    Rng rng(spec.seed);

    for (int s = 0; s < spec.n_sequences; ++s) {
        const double u = rng.uniform();
        TaskKind task;
        if (u < spec.mix.text) task = TaskKind::text;
        else if (u < spec.mix.text + spec.mix.image) task = TaskKind::image_text;
        else task = TaskKind::audio_text;

        if (task == TaskKind::text) {
            // TASK_text + L*-1 payload stream
            std::vector<int> stream = noisy_walk(rng, spec.seq_len - 1,
                                                 spec.payload_sizes[0], spec.successor_prob);
            for (int& id : stream) id += ds.vocab.payload_begin(Modality::text);
            ds.sequences.push_back(pack_text(ds.vocab, stream, spec.seq_len));
        } else {
            const Modality m = payload_modality(task);
            // leave room for TASK + 2x BOS/EOS pairs; split the rest
            const int room = spec.seq_len - 5;
            const int len_m = 2 + static_cast<int>(rng.index(room / 2));
            const int len_t = 1 + static_cast<int>(rng.index(room - len_m));
            std::vector<int> pm = noisy_walk(rng, len_m, ds.vocab.payload_size(m),
                                             spec.successor_prob);
            for (int& id : pm) id += ds.vocab.payload_begin(m);
            std::vector<int> pt = noisy_walk(rng, len_t, spec.payload_sizes[0],
                                             spec.successor_prob);
            for (int& id : pt) id += ds.vocab.payload_begin(Modality::text);
            ds.sequences.push_back(assemble_pair(ds.vocab, task, pm, pt, spec.seq_len));
        }
        ds.category.push_back(task);
    }
    return ds;
}

}  // namespace mdm
