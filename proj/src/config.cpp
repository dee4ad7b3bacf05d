#include "mdm/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mdm {

namespace {

// Desk-scale defaults mirroring the training-details table.
const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> d = {
        {"model.n_layers", "2"},
        {"model.d_emb", "32"},
        {"model.n_heads", "4"},
        {"model.swiglu_factor", "2.75"},
        {"model.rope_base", "10000"},
        {"model.qk_norm", "true"},
        {"model.use_rope", "true"},
        {"model.init_std", "0.02"},
        {"data.vocab_text", "16"},
        {"data.vocab_image", "12"},
        {"data.vocab_audio", "10"},
        {"data.seq_len", "24"},
        {"data.n_sequences", "64"},
        {"data.w_text", "0.34"},
        {"data.w_image", "0.33"},
        {"data.w_audio", "0.33"},
        {"data.mixture_floor", "true"},
        {"data.successor_prob", "0.8"},
        {"data.seed", "1"},
        {"optimizer.lr", "9e-4"},
        {"optimizer.beta1", "0.9"},
        {"optimizer.beta2", "0.95"},
        {"optimizer.eps", "1e-8"},
        {"optimizer.weight_decay", "0.1"},
        {"optimizer.min_lr", "1e-6"},
        {"optimizer.tuned_multipliers", "false"},
        {"train.schedule", "linear"},
        {"train.batch", "8"},
        {"train.budget_tokens", "38400"},
        {"train.anti_mask", "false"},
        {"train.epochs", "2"},
        {"train.lambda_z", "1e-5"},
        {"train.seed", "1"},
        {"sample.steps", "16"},
        {"sample.cfg_scale", "1.0"},
        {"sample.temperature", "1.0"},
        {"sample.top_p", "1.0"},
        {"sample.reveal", "confidence"},
        {"sample.preset", "none"},
        {"sample.target_len", "6"},
        {"sample.task", "image_text"},
        {"sample.seed", "1"},
        {"sde.d_base", "38400"},
        {"sde.b_base", "8"},
        {"sde.gamma", "0.439"},
        {"scaling.restarts", "64"},
        {"scaling.bootstrap", "20"},
        {"scaling.form", "kaplan"},
        {"scaling.seed", "7"},
        {"flops.mode", "six_n"},
        {"flops.rho", "128"},
    };
    return d;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config::Config() : values_(defaults()) {}

Config Config::from_string(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": key outside any [section]");
        }
        c.set_checked(section + "." + key, value);
    }
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_string(ss.str());
}

void Config::apply_override(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || kv.find('.') == std::string::npos || kv.find('.') > eq) {
        throw std::invalid_argument("override must be section.key=value: " + kv);
    }
    set_checked(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
}

void Config::set_checked(const std::string& key, const std::string& value) {
    if (defaults().find(key) == defaults().end()) {
        throw std::invalid_argument("unknown config key: " + key);
    }
    values_[key] = value;
}

const std::string& Config::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw std::invalid_argument("unknown config key: " + key);
    return it->second;
}

double Config::get_double(const std::string& key) const { return std::stod(get(key)); }
int Config::get_int(const std::string& key) const { return std::stoi(get(key)); }
uint64_t Config::get_u64(const std::string& key) const { return std::stoull(get(key)); }

bool Config::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config key " + key + ": expected boolean, got '" + v + "'");
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) {
        out += k;
        out += " = ";
        out += v;
        out += "\n";
    }
    return out;
}

uint64_t Config::hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (char c : canonical()) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace mdm
