// SPDX-License-Identifier: Apache-2.0
#include "cipherpix/key.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>

#include "cipherpix/common.hpp"
#include "cipherpix/rng.hpp"
#include "cipherpix/text.hpp"

namespace cipherpix {

std::vector<char32_t> CipherKey::inverse() const {
    std::vector<char32_t> inv(static_cast<size_t>(glyph_inventory), U'\0');
    for (const auto& [ch, glyphs] : mapping) {
        for (int g : glyphs) {
            inv[static_cast<size_t>(g)] = ch;
        }
    }
    return inv;
}

void CipherKey::validate() const {
    require(!alphabet.empty(), "key: empty alphabet");
    std::set<char32_t> seen_chars;
    std::set<int> seen_glyphs;
    int total = 0;
    for (char32_t c : alphabet) {
        require(seen_chars.insert(c).second, "key: duplicate alphabet character");
        auto it = mapping.find(c);
        require(it != mapping.end() && !it->second.empty(),
                "key: character without homophones: '" + utf8_encode(c) + "'");
        for (int g : it->second) {
            require(g >= 0 && g < glyph_inventory, "key: glyph id out of range");
            require(seen_glyphs.insert(g).second, "key: glyph id shared by two characters");
            ++total;
        }
    }
    require(mapping.size() == alphabet.size(), "key: mapping covers characters outside alphabet");
    require(total == glyph_inventory, "key: glyph_inventory does not match mapping");
}

CipherKey build_key(uint64_t seed, const std::u32string& alphabet,
                    int homophones_min, int homophones_max) {
    require(!alphabet.empty(), "build_key: empty alphabet");
    require(homophones_min >= 1, "build_key: homophones_min must be >= 1");
    require(homophones_min <= homophones_max, "build_key: homophones_min > homophones_max");
    require(homophones_max <= 5, "build_key: homophones_max must be <= 5");

    CipherKey key;
    key.seed = seed;
    key.alphabet = alphabet;
    Rng rng(derive_seed(seed, 0x6b65795f67656eull));  // key stream
    int next_glyph = 0;
    for (char32_t c : alphabet) {
        const int count = static_cast<int>(rng.range(homophones_min, homophones_max));
        std::vector<int> glyphs(static_cast<size_t>(count));
        for (int& g : glyphs) {
            g = next_glyph++;
        }
        key.mapping[c] = std::move(glyphs);
    }
    key.glyph_inventory = next_glyph;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "key-%016llx", static_cast<unsigned long long>(seed));
    key.key_id = buf;
    key.validate();
    return key;
}

void save_key_json(const CipherKey& key, const std::string& path) {
    nlohmann::json j;
    j["key_id"] = key.key_id;
    j["seed"] = key.seed;
    j["alphabet"] = utf8_encode(key.alphabet);
    nlohmann::json mapping = nlohmann::json::object();
    for (const auto& [ch, glyphs] : key.mapping) {
        mapping[utf8_encode(ch)] = glyphs;
    }
    j["mapping"] = std::move(mapping);
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream f(path, std::ios::trunc);
    if (!f) {
        throw IoError("key: cannot write " + path);
    }
    f << j.dump(2) << "\n";
}

CipherKey load_key_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        throw IoError("key: cannot open " + path);
    }
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("key: bad JSON in " + path + ": " + e.what());
    }
    CipherKey key;
    key.key_id = j.at("key_id").get<std::string>();
    key.seed = j.at("seed").get<uint64_t>();
    key.alphabet = utf8_decode(j.at("alphabet").get<std::string>());
    int max_glyph = -1;
    for (const auto& [ch_utf8, glyphs] : j.at("mapping").items()) {
        const std::u32string ch = utf8_decode(ch_utf8);
        require(ch.size() == 1, "key: mapping key is not a single character");
        std::vector<int> ids = glyphs.get<std::vector<int>>();
        for (int g : ids) {
            max_glyph = std::max(max_glyph, g);
        }
        key.mapping[ch[0]] = std::move(ids);
    }
    key.glyph_inventory = max_glyph + 1;
    key.validate();
    return key;
}

}  // namespace cipherpix
