// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

#include "cipherpix/manifest.hpp"

namespace cipherpix {

// Character-level tokenizer over Unicode scalar values. Specials occupy
// fixed ids; the character inventory comes from training plaintext only.
class Tokenizer {
  public:
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr int kUnk = 3;

    Tokenizer() = default;
    explicit Tokenizer(std::vector<char32_t> chars);

    int vocab_size() const { return 4 + static_cast<int>(chars_.size()); }
    int id_of(char32_t c) const;
    // Inverse of id_of for non-special ids; U+0000 for specials.
    char32_t char_of(int id) const;

    // BOS + char ids + EOS. Unknown characters map to UNK.
    std::vector<int> encode(const std::string& text) const;

    // Strips specials and stops at the first EOS.
    std::string decode(const std::vector<int>& ids) const;

    nlohmann::json to_json() const;
    static Tokenizer from_json(const nlohmann::json& j);

    bool operator==(const Tokenizer& other) const { return chars_ == other.chars_; }

  private:
    std::vector<char32_t> chars_;          // sorted ascending
    std::map<char32_t, int> char_to_id_;
};

// Vocab = specials + sorted unique characters of the training split's
// plaintext. Characters seen only in val/test map to UNK.
Tokenizer build_vocab(const Manifest& manifest, const std::string& train_split = "train");

}  // namespace cipherpix
