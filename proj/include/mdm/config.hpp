#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace mdm {

// Diff-friendly key = value configuration with [section] headers and #
// comments. Every recognized key has a desk-scale default; unknown keys are
// rejected at parse time.
class Config {
public:
    Config();  // defaults only
    static Config load(const std::string& path);
    static Config from_string(const std::string& text);

    // "section.key=value"
    void apply_override(const std::string& kv);

    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    int get_int(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    uint64_t get_u64(const std::string& key) const;

    // Sorted key = value dump; stable across runs.
    std::string canonical() const;
    uint64_t hash() const;  // FNV-1a over canonical()

private:
    void set_checked(const std::string& key, const std::string& value);
    std::map<std::string, std::string> values_;
};

}  // namespace mdm
