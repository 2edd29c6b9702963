#include "iici/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>

namespace iici {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos;
        const int out = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected integer, got '" + v + "'");
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected number, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos;
        const unsigned long long out = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected unsigned integer, got '" + v + "'");
    }
}

}  // namespace

void apply_config_line(RunConfig& c, const std::string& key, const std::string& value) {
    using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;
    static const std::map<std::string, Setter> setters = {
        {"num_ids", [](RunConfig& c, const std::string& k, const std::string& v) { c.num_ids = to_int(k, v); }},
        {"num_cameras", [](RunConfig& c, const std::string& k, const std::string& v) { c.num_cameras = to_int(k, v); }},
        {"images_per_id", [](RunConfig& c, const std::string& k, const std::string& v) { c.images_per_id = to_int(k, v); }},
        {"d_raw", [](RunConfig& c, const std::string& k, const std::string& v) { c.d_raw = to_int(k, v); }},
        {"id_signal_scale", [](RunConfig& c, const std::string& k, const std::string& v) { c.id_signal_scale = to_double(k, v); }},
        {"camera_bias_scale", [](RunConfig& c, const std::string& k, const std::string& v) { c.camera_bias_scale = to_double(k, v); }},
        {"camera_gain_jitter", [](RunConfig& c, const std::string& k, const std::string& v) { c.camera_gain_jitter = to_double(k, v); }},
        {"styles_per_camera", [](RunConfig& c, const std::string& k, const std::string& v) { c.styles_per_camera = to_int(k, v); }},
        {"noise_scale", [](RunConfig& c, const std::string& k, const std::string& v) { c.noise_scale = to_double(k, v); }},
        {"num_test_ids", [](RunConfig& c, const std::string& k, const std::string& v) { c.num_test_ids = to_int(k, v); }},
        {"overlap_ratio", [](RunConfig& c, const std::string& k, const std::string& v) { c.overlap_ratio = to_double(k, v); }},
        {"p", [](RunConfig& c, const std::string& k, const std::string& v) { c.p = to_int(k, v); }},
        {"k", [](RunConfig& c, const std::string& k, const std::string& v) { c.k = to_int(k, v); }},
        {"epochs", [](RunConfig& c, const std::string& k, const std::string& v) { c.epochs = to_int(k, v); }},
        {"lr", [](RunConfig& c, const std::string& k, const std::string& v) { c.lr = to_double(k, v); }},
        {"lr_decay_every", [](RunConfig& c, const std::string& k, const std::string& v) { c.lr_decay_every = to_int(k, v); }},
        {"lr_decay_factor", [](RunConfig& c, const std::string& k, const std::string& v) { c.lr_decay_factor = to_double(k, v); }},
        {"optimizer", [](RunConfig& c, const std::string&, const std::string& v) { c.optimizer = v; }},
        {"beta1", [](RunConfig& c, const std::string& k, const std::string& v) { c.beta1 = to_double(k, v); }},
        {"beta2", [](RunConfig& c, const std::string& k, const std::string& v) { c.beta2 = to_double(k, v); }},
        {"adam_eps", [](RunConfig& c, const std::string& k, const std::string& v) { c.adam_eps = to_double(k, v); }},
        {"mu", [](RunConfig& c, const std::string& k, const std::string& v) { c.mu = to_double(k, v); }},
        {"tau", [](RunConfig& c, const std::string& k, const std::string& v) { c.tau = to_double(k, v); }},
        {"m1", [](RunConfig& c, const std::string& k, const std::string& v) { c.m1 = to_double(k, v); }},
        {"m2", [](RunConfig& c, const std::string& k, const std::string& v) { c.m2 = to_double(k, v); }},
        {"k1", [](RunConfig& c, const std::string& k, const std::string& v) { c.k1 = to_int(k, v); }},
        {"k2", [](RunConfig& c, const std::string& k, const std::string& v) { c.k2 = to_int(k, v); }},
        {"hidden", [](RunConfig& c, const std::string& k, const std::string& v) { c.hidden = to_int(k, v); }},
        {"embed_dim", [](RunConfig& c, const std::string& k, const std::string& v) { c.embed_dim = to_int(k, v); }},
        {"env_split", [](RunConfig& c, const std::string& k, const std::string& v) { c.env_split = to_bool(k, v); }},
        {"ids_per_env", [](RunConfig& c, const std::string& k, const std::string& v) { c.ids_per_env = to_int(k, v); }},
        {"max_splits", [](RunConfig& c, const std::string& k, const std::string& v) { c.max_splits = to_int(k, v); }},
        {"forced_splits", [](RunConfig& c, const std::string& k, const std::string& v) { c.forced_splits = to_int(k, v); }},
        {"style_pooling", [](RunConfig& c, const std::string&, const std::string& v) { c.style_pooling = v; }},
        {"weak_jitter", [](RunConfig& c, const std::string& k, const std::string& v) { c.weak_jitter = to_double(k, v); }},
        {"weak_mask_frac", [](RunConfig& c, const std::string& k, const std::string& v) { c.weak_mask_frac = to_double(k, v); }},
        {"strong_jitter", [](RunConfig& c, const std::string& k, const std::string& v) { c.strong_jitter = to_double(k, v); }},
        {"strong_mask_frac", [](RunConfig& c, const std::string& k, const std::string& v) { c.strong_mask_frac = to_double(k, v); }},
        {"strong_gain", [](RunConfig& c, const std::string& k, const std::string& v) { c.strong_gain = to_double(k, v); }},
        {"strong_offset", [](RunConfig& c, const std::string& k, const std::string& v) { c.strong_offset = to_double(k, v); }},
        {"probe", [](RunConfig& c, const std::string&, const std::string& v) { c.probe = v; }},
        {"probe_iters", [](RunConfig& c, const std::string& k, const std::string& v) { c.probe_iters = to_int(k, v); }},
        {"order_trials", [](RunConfig& c, const std::string& k, const std::string& v) { c.order_trials = to_int(k, v); }},
        {"variant", [](RunConfig& c, const std::string&, const std::string& v) { c.variant = v; }},
        {"seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); }},
        {"run_id", [](RunConfig& c, const std::string&, const std::string& v) { c.run_id = v; }},
    };

    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(c, key, value);
}

void apply_env_seed(RunConfig& cfg) {
    if (const char* env = std::getenv("IICI_SEED"))
        cfg.seed = to_u64("IICI_SEED", env);
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);

    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key or value");
        try {
            apply_config_line(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    apply_env_seed(cfg);
    return cfg;
}

}  // namespace iici
