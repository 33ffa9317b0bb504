#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "canopy/io.hpp"
#include "canopy/pipeline.hpp"

namespace canopy::pipeline {

namespace {

std::string strip(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    return (a == std::string::npos) ? std::string() : s.substr(a, b - a + 1);
}

// Removes a trailing comment that starts outside of any quoted string.
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

std::string unquote(const std::string& v, const std::string& key) {
    if (v.size() < 2 || v.front() != '"' || v.back() != '"')
        throw ConfigError(key + ": expected a quoted string, got " + v);
    return v.substr(1, v.size() - 2);
}

std::vector<std::string> parse_string_array(const std::string& v, const std::string& key) {
    if (v.size() < 2 || v.front() != '[' || v.back() != ']')
        throw ConfigError(key + ": expected an array of quoted strings, got " + v);
    std::vector<std::string> out;
    std::string inner = strip(v.substr(1, v.size() - 2));
    while (!inner.empty()) {
        if (inner.front() != '"')
            throw ConfigError(key + ": array elements must be quoted strings");
        const size_t close = inner.find('"', 1);
        if (close == std::string::npos)
            throw ConfigError(key + ": unterminated string in array");
        out.push_back(inner.substr(1, close - 1));
        inner = strip(inner.substr(close + 1));
        if (!inner.empty()) {
            if (inner.front() != ',')
                throw ConfigError(key + ": expected ',' between array elements");
            inner = strip(inner.substr(1));
        }
    }
    return out;
}

double parse_number(const std::string& v, const std::string& key) {
    try {
        return parse_double(v, key);
    } catch (const ParseError& e) {
        throw ConfigError(e.what());
    }
}

uint64_t parse_u64(const std::string& v, const std::string& key) {
    uint64_t out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw ConfigError(key + ": expected an unsigned integer, got " + v);
    return out;
}

int parse_int(const std::string& v, const std::string& key) {
    int out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw ConfigError(key + ": expected an integer, got " + v);
    return out;
}

} // namespace

PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    PipelineConfig cfg;
    cfg.raw_text = text;

    auto resolve = [&](const std::string& rel) {
        std::filesystem::path p(rel);
        return p.is_absolute() ? p : base_dir / p;
    };

    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip(strip_comment(line));
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value, got \"" + line + "\"");
        const std::string key = strip(line.substr(0, eq));
        const std::string value = strip(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");

        if (key == "paths.predictions") {
            for (const auto& s : parse_string_array(value, key)) cfg.predictions.push_back(resolve(s));
        } else if (key == "paths.parcels") {
            cfg.parcels = resolve(unquote(value, key));
        } else if (key == "paths.imagery") {
            cfg.imagery = resolve(unquote(value, key));
        } else if (key == "paths.embeddings") {
            cfg.embeddings = resolve(unquote(value, key));
        } else if (key == "paths.output") {
            cfg.output = resolve(unquote(value, key));
        } else if (key == "peak.kernel_m") {
            cfg.peak.kernel_m = parse_number(value, key);
        } else if (key == "peak.threshold") {
            cfg.peak.threshold = parse_number(value, key);
        } else if (key == "match.gate_m") {
            cfg.gate_m = parse_number(value, key);
        } else if (key == "heatmap.sigma_m") {
            cfg.heatmap.sigma_m = parse_number(value, key);
        } else if (key == "heatmap.truncation") {
            cfg.heatmap.truncation = parse_number(value, key);
        } else if (key == "losses.w_tversky") {
            cfg.loss_weights.w_tversky = parse_number(value, key);
        } else if (key == "losses.w_focal") {
            cfg.loss_weights.w_focal = parse_number(value, key);
        } else if (key == "losses.tversky_alpha") {
            cfg.loss_weights.tversky_alpha = parse_number(value, key);
        } else if (key == "losses.tversky_beta") {
            cfg.loss_weights.tversky_beta = parse_number(value, key);
        } else if (key == "losses.focal_gamma") {
            cfg.loss_weights.focal_gamma = parse_number(value, key);
        } else if (key == "losses.epsilon") {
            cfg.loss_weights.epsilon = parse_number(value, key);
        } else if (key == "propagation.k") {
            cfg.propagation.k = parse_int(value, key);
        } else if (key == "propagation.alpha") {
            cfg.propagation.alpha = parse_number(value, key);
        } else if (key == "propagation.gamma") {
            cfg.propagation.affinity_gamma = parse_number(value, key);
        } else if (key == "propagation.tol") {
            cfg.propagation.cg_tol = parse_number(value, key);
        } else if (key == "propagation.max_iter") {
            cfg.propagation.cg_max_iter = parse_int(value, key);
        } else if (key == "dataset.patch_px") {
            cfg.patch.size_px = parse_int(value, key);
        } else if (key == "dataset.bands") {
            cfg.patch.bands = parse_int(value, key);
        } else if (key == "dataset.pad_value") {
            cfg.patch.pad_value = static_cast<float>(parse_number(value, key));
        } else if (key == "dataset.train_fraction") {
            cfg.train_fraction = parse_number(value, key);
        } else if (key == "dataset.seed") {
            cfg.seed = parse_u64(value, key);
        } else if (key == "threads") {
            cfg.threads = parse_int(value, key);
        } else {
            throw ConfigError("unknown config key \"" + key + "\" (line " +
                              std::to_string(line_no) + ")");
        }
    }
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text, path.parent_path());
}

void PipelineConfig::validate() const {
    if (predictions.empty())
        throw ConfigError("paths.predictions: need at least one prediction raster");
    for (const auto& p : predictions)
        if (!std::filesystem::exists(p))
            throw ConfigError("paths.predictions: file does not exist: " + p.string());
    if (parcels.empty() || !std::filesystem::exists(parcels))
        throw ConfigError("paths.parcels: file does not exist: " + parcels.string());
    if (imagery.empty() || !std::filesystem::exists(imagery))
        throw ConfigError("paths.imagery: file does not exist: " + imagery.string());
    if (!embeddings.empty() && !std::filesystem::exists(embeddings))
        throw ConfigError("paths.embeddings: file does not exist: " + embeddings.string());
    if (output.empty())
        throw ConfigError("paths.output: output directory must be set");

    auto named = [](const char* key, auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            throw ConfigError(std::string(key) + ": " + e.what());
        }
    };
    named("peak.kernel_m/peak.threshold", [&] { peak.validate(); });
    named("heatmap.sigma_m", [&] { heatmap.validate(); });
    named("losses.*", [&] { loss_weights.validate(); });
    named("propagation.*", [&] { propagation.validate(); });
    named("dataset.patch_px", [&] { patch.validate(); });
    if (!(gate_m > 0.0))
        throw ConfigError("match.gate_m: must be positive, got " + std::to_string(gate_m));
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("dataset.train_fraction: must lie in (0,1), got " +
                          std::to_string(train_fraction));
    if (threads < 1)
        throw ConfigError("threads: must be >= 1, got " + std::to_string(threads));
}

std::string fnv1a_hex(const std::string& data) {
    uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

} // namespace canopy::pipeline
