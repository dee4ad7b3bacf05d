#include "mdm/vocab.hpp"

#include <stdexcept>

namespace mdm {

const char* to_string(Modality m) {
    switch (m) {
        case Modality::text: return "text";
        case Modality::image: return "image";
        case Modality::audio: return "audio";
    }
    return "?";
}

const char* to_string(TaskKind k) {
    switch (k) {
        case TaskKind::text: return "text";
        case TaskKind::image_text: return "image-text";
        case TaskKind::audio_text: return "audio-text";
    }
    return "?";
}

Modality payload_modality(TaskKind k) {
    switch (k) {
        case TaskKind::image_text: return Modality::image;
        case TaskKind::audio_text: return Modality::audio;
        case TaskKind::text: return Modality::text;
    }
    return Modality::text;
}

UnifiedVocab UnifiedVocab::build(const std::array<int, 3>& payload_sizes) {
    UnifiedVocab v;
    int cursor = 0;
    for (int m = 0; m < 3; ++m) {
        if (payload_sizes[m] < 1) {
            throw std::invalid_argument("modality vocabulary must be non-empty: " +
                                        std::string(to_string(static_cast<Modality>(m))));
        }
        v.payload_sizes_[m] = payload_sizes[m];
        v.payload_begin_[m] = cursor;
        cursor += payload_sizes[m];
    }
    v.special_base_ = cursor;
    v.task_base_ = v.special_base_ + 9;
    v.pad_ = v.task_base_ + 3;
    v.total_ = v.pad_ + 1;
    // text table additionally hosts the 3 task ids and the pad id
    v.table_rows_ = {payload_sizes[0] + 3 + 3 + 1, payload_sizes[1] + 3, payload_sizes[2] + 3};
    return v;
}

bool UnifiedVocab::is_mask(int id) const {
    for (Modality m : kModalities) {
        if (id == mask(m)) return true;
    }
    return false;
}

std::optional<Modality> UnifiedVocab::modality_of(int id) const {
    if (!valid(id)) return std::nullopt;
    if (is_payload(id)) {
        for (Modality m : kModalities) {
            if (id < payload_end(m)) return m;
        }
    }
    if (id < task_base_) {  // BOS/EOS/MASK block, 3 per modality
        return static_cast<Modality>((id - special_base_) / 3);
    }
    if (is_task(id)) return std::nullopt;
    return Modality::text;  // pad
}

UnifiedVocab::Slot UnifiedVocab::embed_slot(int id) const {
    if (!valid(id)) throw std::invalid_argument("token id out of range: " + std::to_string(id));
    if (is_payload(id)) {
        for (Modality m : kModalities) {
            if (id < payload_end(m)) return {m, id - payload_begin(m)};
        }
    }
    if (id < task_base_) {
        auto m = static_cast<Modality>((id - special_base_) / 3);
        return {m, payload_size(m) + (id - special_base_) % 3};
    }
    // task and pad ids live at the end of the text table
    return {Modality::text, payload_size(Modality::text) + 3 + (id - task_base_)};
}

nlohmann::json UnifiedVocab::to_json() const {
    nlohmann::json ranges;
    for (Modality m : kModalities) {
        ranges[to_string(m)] = {{"begin", payload_begin(m)}, {"end", payload_end(m)}};
    }
    nlohmann::json special;
    for (Modality m : kModalities) {
        special[to_string(m)] = {{"bos", bos(m)}, {"eos", eos(m)}, {"mask", mask(m)}};
    }
    return {
        {"version", 1},
        {"sizes", payload_sizes_},
        {"total", total_},
        {"payload_ranges", ranges},
        {"special", special},
        {"task", {task(TaskKind::text), task(TaskKind::image_text), task(TaskKind::audio_text)}},
        {"pad", pad()},
    };
}

UnifiedVocab UnifiedVocab::from_json(const nlohmann::json& j) {
    if (j.at("version").get<int>() != 1) {
        throw std::runtime_error("unsupported vocab document version");
    }
    auto sizes = j.at("sizes").get<std::array<int, 3>>();
    UnifiedVocab v = build(sizes);
    if (j.at("total").get<int>() != v.size()) {
        throw std::runtime_error("vocab document total inconsistent with sizes");
    }
    return v;
}

Sequence assemble_pair(const UnifiedVocab& vocab, TaskKind task,
                       const std::vector<int>& payload_m,
                       const std::vector<int>& payload_text, int target_len) {
    if (task == TaskKind::text) {
        throw std::invalid_argument("assemble_pair expects a mixed-modality task");
    }
    const Modality m = payload_modality(task);
    const int needed = 1 + 2 + static_cast<int>(payload_m.size()) + 2 +
                       static_cast<int>(payload_text.size());
    if (needed > target_len) {
        throw std::length_error("sequence too long: requires length " + std::to_string(needed) +
                                " > L*=" + std::to_string(target_len));
    }
    for (int id : payload_m) {
        if (id < vocab.payload_begin(m) || id >= vocab.payload_end(m)) {
            throw std::invalid_argument("payload token outside its modality range");
        }
    }
    for (int id : payload_text) {
        if (id < vocab.payload_begin(Modality::text) || id >= vocab.payload_end(Modality::text)) {
            throw std::invalid_argument("text token outside the text range");
        }
    }

    Sequence s;
    s.tokens.reserve(target_len);
    auto push = [&](int id, bool can_mask, Modality mod) {
        s.tokens.push_back(id);
        s.maskable.push_back(can_mask);
        s.modality.push_back(mod);
    };
    push(vocab.task(task), false, Modality::text);
    push(vocab.bos(m), false, m);
    for (int id : payload_m) push(id, true, m);
    push(vocab.eos(m), false, m);
    push(vocab.bos(Modality::text), false, Modality::text);
    for (int id : payload_text) push(id, true, Modality::text);
    push(vocab.eos(Modality::text), false, Modality::text);
    while (s.length() < target_len) push(vocab.pad(), false, Modality::text);
    return s;
}

TextPacker::TextPacker(const UnifiedVocab& vocab, std::vector<std::vector<int>> documents)
    : vocab_(vocab) {
    for (size_t d = 0; d < documents.size(); ++d) {
        if (d > 0) stream_.push_back(vocab.eos(Modality::text));
        stream_.insert(stream_.end(), documents[d].begin(), documents[d].end());
    }
}

std::optional<Sequence> TextPacker::next(int target_len) {
    const size_t payload = static_cast<size_t>(target_len) - 1;
    if (pos_ + payload > stream_.size()) {
        pos_ = stream_.size();  // drop the short tail
        return std::nullopt;
    }
    Sequence s;
    s.tokens.push_back(vocab_.task(TaskKind::text));
    s.maskable.push_back(false);
    s.modality.push_back(Modality::text);
    for (size_t i = 0; i < payload; ++i) {
        s.tokens.push_back(stream_[pos_ + i]);
        s.maskable.push_back(true);
        s.modality.push_back(Modality::text);
    }
    pos_ += payload;
    return s;
}

Sequence pack_text(const UnifiedVocab& vocab, const std::vector<int>& stream, int target_len) {
    if (stream.empty()) throw std::invalid_argument("pack_text: empty stream");
    std::vector<int> padded = stream;
    // truncation semantics: a short tail still yields one sequence by pulling
    // from nothing; require enough tokens for a single full sequence.
    if (static_cast<int>(padded.size()) < target_len - 1) {
        throw std::invalid_argument("pack_text: stream shorter than one sequence");
    }
    TextPacker packer(vocab, {padded});
    auto s = packer.next(target_len);
    return *s;
}

nlohmann::json sequence_to_json(const Sequence& s) {
    return nlohmann::json(s.tokens);
}

Sequence annotate_tokens(const UnifiedVocab& vocab, const std::vector<int>& tokens) {
    Sequence s;
    s.tokens = tokens;
    s.maskable.resize(tokens.size());
    s.modality.resize(tokens.size());
    for (size_t i = 0; i < tokens.size(); ++i) {
        const int id = tokens[i];
        if (!vocab.valid(id)) {
            throw std::invalid_argument("token id out of range at position " + std::to_string(i));
        }
        const bool structural = vocab.is_task(id) || vocab.is_pad(id) ||
                                (!vocab.is_payload(id) && !vocab.is_mask(id));
        s.maskable[i] = !structural;
        auto m = vocab.modality_of(id);
        s.modality[i] = m.value_or(Modality::text);
    }
    return s;
}

Sequence sequence_from_json(const UnifiedVocab& vocab, const nlohmann::json& j) {
    return annotate_tokens(vocab, j.get<std::vector<int>>());
}

}  // namespace mdm
