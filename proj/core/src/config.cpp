// SPDX-License-Identifier: Apache-2.0
#include "cipherpix/config.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cipherpix/common.hpp"

namespace fs = std::filesystem;

namespace cipherpix {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0;
    size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) {
        ++a;
    }
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) {
        --b;
    }
    return s.substr(a, b - a);
}

// Strips a # comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) {
            in_string = !in_string;
        } else if (line[i] == '#' && !in_string) {
            return line.substr(0, i);
        }
    }
    return line;
}

nlohmann::json parse_toml_scalar(const std::string& raw, const std::string& where);

nlohmann::json parse_toml_array(const std::string& raw, const std::string& where) {
    require(raw.size() >= 2 && raw.front() == '[' && raw.back() == ']',
            "toml: malformed array at " + where);
    nlohmann::json arr = nlohmann::json::array();
    std::string inner = raw.substr(1, raw.size() - 2);
    std::string cur;
    bool in_string = false;
    int depth = 0;
    for (char c : inner) {
        if (c == '"') {
            in_string = !in_string;
        }
        if (!in_string) {
            if (c == '[') {
                ++depth;
            } else if (c == ']') {
                --depth;
            } else if (c == ',' && depth == 0) {
                const std::string item = trim(cur);
                if (!item.empty()) {
                    arr.push_back(parse_toml_scalar(item, where));
                }
                cur.clear();
                continue;
            }
        }
        cur.push_back(c);
    }
    const std::string last = trim(cur);
    if (!last.empty()) {
        arr.push_back(parse_toml_scalar(last, where));
    }
    return arr;
}

nlohmann::json parse_toml_scalar(const std::string& raw, const std::string& where) {
    if (!raw.empty() && raw.front() == '[') {
        return parse_toml_array(raw, where);
    }
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
        std::string out;
        for (size_t i = 1; i + 1 < raw.size(); ++i) {
            if (raw[i] == '\\' && i + 2 < raw.size()) {
                const char n = raw[i + 1];
                if (n == '"' || n == '\\') {
                    out.push_back(n);
                    ++i;
                    continue;
                }
                if (n == 'n') {
                    out.push_back('\n');
                    ++i;
                    continue;
                }
                if (n == 't') {
                    out.push_back('\t');
                    ++i;
                    continue;
                }
            }
            out.push_back(raw[i]);
        }
        return out;
    }
    if (raw == "true") {
        return true;
    }
    if (raw == "false") {
        return false;
    }
    try {
        size_t pos = 0;
        if (raw.find_first_of(".eE") == std::string::npos) {
            const long long v = std::stoll(raw, &pos);
            if (pos == raw.size()) {
                return v;
            }
        } else {
            const double v = std::stod(raw, &pos);
            if (pos == raw.size()) {
                return v;
            }
        }
    } catch (const std::exception&) {
        // fall through
    }
    throw InvalidArgument("toml: cannot parse value '" + raw + "' at " + where);
}

nlohmann::json* dig(nlohmann::json& root, const std::string& dotted, bool create) {
    nlohmann::json* node = &root;
    size_t start = 0;
    while (start <= dotted.size()) {
        const size_t dot = dotted.find('.', start);
        const std::string key = dotted.substr(start, dot == std::string::npos ? dot : dot - start);
        require(!key.empty(), "config: empty key segment in '" + dotted + "'");
        if (dot == std::string::npos) {
            return &(*node)[key];
        }
        if (!node->contains(key)) {
            require(create, "config: unknown key path '" + dotted + "'");
            (*node)[key] = nlohmann::json::object();
        }
        node = &(*node)[key];
        require(node->is_object(), "config: '" + key + "' in '" + dotted + "' is not a table");
        start = dot + 1;
    }
    return node;
}

}  // namespace

nlohmann::json parse_toml(const std::string& text, const std::string& origin) {
    nlohmann::json root = nlohmann::json::object();
    std::string section;
    size_t line_no = 0;
    std::string line;
    std::istringstream stream(text);
    while (std::getline(stream, line)) {
        ++line_no;
        const std::string where = origin + ":" + std::to_string(line_no);
        line = trim(strip_comment(line));
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            require(line.back() == ']', "toml: unterminated section header at " + where);
            section = trim(line.substr(1, line.size() - 2));
            require(!section.empty(), "toml: empty section name at " + where);
            (void)dig(root, section + ".__touch", true);
            dig(root, section, true);  // ensure the table exists
            nlohmann::json* table = dig(root, section, true);
            table->erase("__touch");
            continue;
        }
        const size_t eq = line.find('=');
        require(eq != std::string::npos, "toml: expected key = value at " + where);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        require(!key.empty() && !value.empty(), "toml: malformed assignment at " + where);
        const std::string path = section.empty() ? key : section + "." + key;
        *dig(root, path, true) = parse_toml_scalar(value, where);
    }
    return root;
}

nlohmann::json load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        throw IoError("config: cannot open " + path);
    }
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const std::string ext = fs::path(path).extension().string();
    if (ext == ".toml") {
        return parse_toml(text, path);
    }
    if (ext == ".json") {
        try {
            return nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw InvalidArgument("config: bad JSON in " + path + ": " + e.what());
        }
    }
    throw InvalidArgument("config: unsupported extension '" + ext + "' (expected .json or .toml)");
}

void apply_override(nlohmann::json& config, const std::string& key_value) {
    const size_t eq = key_value.find('=');
    require(eq != std::string::npos && eq > 0,
            "config: --set expects key=value, got '" + key_value + "'");
    const std::string key = key_value.substr(0, eq);
    const std::string raw = key_value.substr(eq + 1);
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception&) {
        value = raw;  // plain string
    }
    *dig(config, key, true) = value;
}

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& context) {
    if (!j.is_object()) {
        throw InvalidArgument("config: " + context + " must be a table/object");
    }
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (ok.find(key) == ok.end()) {
            throw InvalidArgument("config: unknown key '" + key + "' in " + context);
        }
    }
}

ModelConfig model_config_from_json(const nlohmann::json& partial) {
    reject_unknown_keys(partial,
                        {"image_height", "patch_width", "d_model", "n_heads", "n_encoder_layers",
                         "n_decoder_layers", "ffn_dim", "dropout", "max_source_patches",
                         "max_target_len", "vocab_size", "tie_output_embedding"},
                        "model config");
    ModelConfig c;
    c.image_height = partial.value("image_height", c.image_height);
    c.patch_width = partial.value("patch_width", c.patch_width);
    c.d_model = partial.value("d_model", c.d_model);
    c.n_heads = partial.value("n_heads", c.n_heads);
    c.n_encoder_layers = partial.value("n_encoder_layers", c.n_encoder_layers);
    c.n_decoder_layers = partial.value("n_decoder_layers", c.n_decoder_layers);
    c.ffn_dim = partial.value("ffn_dim", c.ffn_dim);
    c.dropout = partial.value("dropout", c.dropout);
    c.max_source_patches = partial.value("max_source_patches", c.max_source_patches);
    c.max_target_len = partial.value("max_target_len", c.max_target_len);
    c.vocab_size = partial.value("vocab_size", 0);
    c.tie_output_embedding = partial.value("tie_output_embedding", c.tie_output_embedding);
    return c;
}

CorpusSpec corpus_spec_from_json(const nlohmann::json& partial) {
    reject_unknown_keys(partial,
                        {"corpus_id", "stage", "n_lines", "seed", "line_height", "n_writers",
                         "split_ratios", "split_counts", "glyph_advance", "margin", "space_mode",
                         "noise_sigma", "alphabet", "homophones_min", "homophones_max",
                         "log_glyph_sequences", "max_chars", "max_words", "lexicon_path"},
                        "corpus spec");
    CorpusSpec c;
    c.corpus_id = partial.value("corpus_id", c.corpus_id);
    if (partial.contains("stage")) {
        c.stage = parse_stage(partial.at("stage").get<std::string>());
    }
    c.n_lines = partial.value("n_lines", c.n_lines);
    c.seed = partial.value("seed", c.seed);
    c.line_height = partial.value("line_height", c.line_height);
    c.n_writers = partial.value("n_writers", c.n_writers);
    c.split_ratios = partial.value("split_ratios", c.split_ratios);
    c.split_counts = partial.value("split_counts", c.split_counts);
    c.glyph_advance = partial.value("glyph_advance", c.glyph_advance);
    c.margin = partial.value("margin", c.margin);
    if (partial.contains("space_mode")) {
        const std::string mode = partial.at("space_mode").get<std::string>();
        require(mode == "separator_glyph" || mode == "omitted",
                "config: space_mode must be separator_glyph|omitted");
        c.space_mode = mode == "omitted" ? SpaceMode::kOmitted : SpaceMode::kSeparatorGlyph;
    }
    c.noise_sigma = partial.value("noise_sigma", c.noise_sigma);
    c.alphabet = partial.value("alphabet", c.alphabet);
    c.homophones_min = partial.value("homophones_min", c.homophones_min);
    c.homophones_max = partial.value("homophones_max", c.homophones_max);
    c.log_glyph_sequences = partial.value("log_glyph_sequences", c.log_glyph_sequences);
    c.max_chars = partial.value("max_chars", c.max_chars);
    c.max_words = partial.value("max_words", c.max_words);
    c.lexicon_path = partial.value("lexicon_path", c.lexicon_path);
    return c;
}

TrainConfig train_config_from_json(const nlohmann::json& partial) {
    reject_unknown_keys(partial,
                        {"stage", "learning_rate", "batch_size", "max_epochs",
                         "early_stop_patience", "weight_decay", "adam_beta1", "adam_beta2",
                         "adam_eps", "grad_clip_norm", "seed", "init_checkpoint",
                         "freeze_encoder", "bucket_by_width"},
                        "train config");
    nlohmann::json merged = TrainConfig{}.to_json();
    merged["learning_rate"] = 0.0;  // keep the stage-default resolution
    merged["max_epochs"] = 0;
    merged.update(partial);
    return TrainConfig::from_json(merged);
}

nlohmann::json corpus_spec_to_json(const CorpusSpec& c) {
    nlohmann::json j;
    j["corpus_id"] = c.corpus_id;
    j["stage"] = stage_name(c.stage);
    j["n_lines"] = c.n_lines;
    j["seed"] = c.seed;
    j["line_height"] = c.line_height;
    j["n_writers"] = c.n_writers;
    j["split_ratios"] = c.split_ratios;
    j["split_counts"] = c.split_counts;
    j["glyph_advance"] = c.glyph_advance;
    j["margin"] = c.margin;
    j["space_mode"] = c.space_mode == SpaceMode::kSeparatorGlyph ? "separator_glyph" : "omitted";
    j["noise_sigma"] = c.noise_sigma;
    j["alphabet"] = c.alphabet;
    j["homophones_min"] = c.homophones_min;
    j["homophones_max"] = c.homophones_max;
    j["log_glyph_sequences"] = c.log_glyph_sequences;
    j["max_chars"] = c.max_chars;
    j["max_words"] = c.max_words;
    j["lexicon_path"] = c.lexicon_path;
    return j;
}

void write_resolved_config(const std::string& out_dir, const nlohmann::json& resolved) {
    fs::create_directories(out_dir);
    const fs::path path = fs::path(out_dir) / "resolved_config.json";
    std::ofstream f(path, std::ios::trunc);
    if (!f) {
        throw IoError("config: cannot write " + path.string());
    }
    f << resolved.dump(2) << "\n";
}

}  // namespace cipherpix
