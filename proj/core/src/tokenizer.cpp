// SPDX-License-Identifier: Apache-2.0
#include "cipherpix/tokenizer.hpp"

#include <algorithm>
#include <set>

#include "cipherpix/common.hpp"
#include "cipherpix/text.hpp"

namespace cipherpix {

Tokenizer::Tokenizer(std::vector<char32_t> chars) : chars_(std::move(chars)) {
    std::sort(chars_.begin(), chars_.end());
    chars_.erase(std::unique(chars_.begin(), chars_.end()), chars_.end());
    for (size_t i = 0; i < chars_.size(); ++i) {
        char_to_id_[chars_[i]] = 4 + static_cast<int>(i);
    }
}

int Tokenizer::id_of(char32_t c) const {
    const auto it = char_to_id_.find(c);
    return it == char_to_id_.end() ? kUnk : it->second;
}

char32_t Tokenizer::char_of(int id) const {
    if (id < 4 || id >= vocab_size()) {
        return U'\0';
    }
    return chars_[static_cast<size_t>(id - 4)];
}

std::vector<int> Tokenizer::encode(const std::string& text) const {
    const std::u32string chars = utf8_decode(text);
    std::vector<int> ids;
    ids.reserve(chars.size() + 2);
    ids.push_back(kBos);
    for (char32_t c : chars) {
        ids.push_back(id_of(c));
    }
    ids.push_back(kEos);
    return ids;
}

std::string Tokenizer::decode(const std::vector<int>& ids) const {
    std::u32string out;
    for (int id : ids) {
        if (id == kEos) {
            break;
        }
        if (id < 4) {
            continue;  // PAD/BOS/UNK are dropped
        }
        const char32_t c = char_of(id);
        if (c != U'\0') {
            out.push_back(c);
        }
    }
    return utf8_encode(out);
}

nlohmann::json Tokenizer::to_json() const {
    std::vector<uint32_t> cps;
    cps.reserve(chars_.size());
    for (char32_t c : chars_) {
        cps.push_back(static_cast<uint32_t>(c));
    }
    return nlohmann::json{{"characters", cps}};
}

Tokenizer Tokenizer::from_json(const nlohmann::json& j) {
    std::vector<char32_t> chars;
    for (uint32_t cp : j.at("characters").get<std::vector<uint32_t>>()) {
        chars.push_back(static_cast<char32_t>(cp));
    }
    return Tokenizer(std::move(chars));
}

Tokenizer build_vocab(const Manifest& manifest, const std::string& train_split) {
    std::set<char32_t> seen;
    bool any = false;
    for (const auto& e : manifest.entries) {
        if (e.split != train_split) {
            continue;
        }
        any = true;
        for (char32_t c : utf8_decode(e.plaintext)) {
            seen.insert(c);
        }
    }
    require(any, "build_vocab: empty training split '" + train_split + "'");
    return Tokenizer(std::vector<char32_t>(seen.begin(), seen.end()));
}

}  // namespace cipherpix
