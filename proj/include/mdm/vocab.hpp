#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mdm {

// Fixed order; id ranges depend on it.
enum class Modality : int { text = 0, image = 1, audio = 2 };
constexpr std::array<Modality, 3> kModalities = {Modality::text, Modality::image, Modality::audio};

enum class TaskKind : int { text = 0, image_text = 1, audio_text = 2 };

const char* to_string(Modality m);
const char* to_string(TaskKind k);
Modality payload_modality(TaskKind k);  // the non-text payload (text for TaskKind::text)

// Shared tri-modal token space.
//
// Id layout (contiguous from 0):
//   [text payload) [image payload) [audio payload)
//   BOS/EOS/MASK for text, image, audio (9 ids)
//   TASK_text, TASK_image_text, TASK_audio_text (3 ids)
//   PAD_text (1 id)
class UnifiedVocab {
public:
    // sizes indexed by Modality; each must be >= 1.
    static UnifiedVocab build(const std::array<int, 3>& payload_sizes);

    int size() const { return total_; }
    int payload_size(Modality m) const { return payload_sizes_[static_cast<int>(m)]; }
    int payload_begin(Modality m) const { return payload_begin_[static_cast<int>(m)]; }
    int payload_end(Modality m) const { return payload_begin(m) + payload_size(m); }

    int bos(Modality m) const { return special_base_ + 3 * static_cast<int>(m); }
    int eos(Modality m) const { return special_base_ + 3 * static_cast<int>(m) + 1; }
    int mask(Modality m) const { return special_base_ + 3 * static_cast<int>(m) + 2; }
    int task(TaskKind k) const { return task_base_ + static_cast<int>(k); }
    int pad() const { return pad_; }

    bool is_payload(int id) const { return id >= 0 && id < special_base_; }
    bool is_task(int id) const { return id >= task_base_ && id < task_base_ + 3; }
    bool is_pad(int id) const { return id == pad_; }
    bool is_mask(int id) const;
    bool valid(int id) const { return id >= 0 && id < total_; }

    // Total on payload ids; BOS/EOS/MASK map to their subscript, PAD to text.
    // Task tokens carry no single modality and yield nullopt.
    std::optional<Modality> modality_of(int id) const;

    // Row assignment for per-modality embedding/unembedding tables. Each id
    // belongs to exactly one table: payload ids and that modality's
    // BOS/EOS/MASK go to their modality; task and pad ids go to text.
    struct Slot {
        Modality table;
        int row;
    };
    Slot embed_slot(int id) const;
    int table_rows(Modality m) const { return table_rows_[static_cast<int>(m)]; }

    nlohmann::json to_json() const;
    static UnifiedVocab from_json(const nlohmann::json& j);

private:
    std::array<int, 3> payload_sizes_{};
    std::array<int, 3> payload_begin_{};
    std::array<int, 3> table_rows_{};
    int special_base_ = 0;
    int task_base_ = 0;
    int pad_ = 0;
    int total_ = 0;
};

// A fully assembled length-L* training/inference sequence.
struct Sequence {
    std::vector<int> tokens;
    std::vector<bool> maskable;       // false on task, pad and boundary tokens
    std::vector<Modality> modality;   // per-position modality map

    int length() const { return static_cast<int>(tokens.size()); }
    bool is_pad_position(const UnifiedVocab& v, int i) const { return v.is_pad(tokens[i]); }
};

// Mixed-modality pair layout:
//   TASK, BOS_m, payload_m, EOS_m, BOS_text, payload_text, EOS_text, PAD...
// task must be image_text or audio_text.
Sequence assemble_pair(const UnifiedVocab& vocab, TaskKind task,
                       const std::vector<int>& payload_m,
                       const std::vector<int>& payload_text, int target_len);

// Greedy packer over a concatenated text stream. Each emitted sequence is
//   TASK_text, s_1, ..., s_{L*-1}
// so a sequence consumes L*-1 stream tokens and carries no pads.
class TextPacker {
public:
    // documents are joined with EOS_text separators.
    TextPacker(const UnifiedVocab& vocab, std::vector<std::vector<int>> documents);

    bool exhausted() const { return pos_ >= stream_.size(); }
    // Emits the next packed sequence; truncates the stream at L*-1 payload
    // tokens. Remaining tail shorter than L*-1 is dropped.
    std::optional<Sequence> next(int target_len);

private:
    const UnifiedVocab& vocab_;
    std::vector<int> stream_;
    size_t pos_ = 0;
};

// Convenience: first packed sequence of a stream.
Sequence pack_text(const UnifiedVocab& vocab, const std::vector<int>& stream, int target_len);

nlohmann::json sequence_to_json(const Sequence& s);
Sequence sequence_from_json(const UnifiedVocab& vocab, const nlohmann::json& j);

// Reconstructs maskable/modality annotations from a raw token vector that
// follows one of the two canonical layouts.
Sequence annotate_tokens(const UnifiedVocab& vocab, const std::vector<int>& tokens);

}  // namespace mdm
