// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cipherpix {

// Homophonic substitution key: every plaintext character owns a disjoint,
// non-empty set of glyph identifiers. Decipherable by construction.
struct CipherKey {
    std::string key_id;
    std::u32string alphabet;                         // ordered, unique
    std::map<char32_t, std::vector<int>> mapping;    // char -> glyph ids
    int glyph_inventory = 0;
    uint64_t seed = 0;

    const std::vector<int>* homophones(char32_t c) const {
        auto it = mapping.find(c);
        return it == mapping.end() ? nullptr : &it->second;
    }

    // glyph id -> plaintext character (total inverse; ids are dense from 0).
    std::vector<char32_t> inverse() const;

    void validate() const;
};

// Deterministically assigns each alphabet character a uniform homophone
// count in [homophones_min, homophones_max]; glyph ids are consecutive
// integers from 0, assigned in alphabet order.
CipherKey build_key(uint64_t seed, const std::u32string& alphabet,
                    int homophones_min, int homophones_max);

void save_key_json(const CipherKey& key, const std::string& path);
CipherKey load_key_json(const std::string& path);

}  // namespace cipherpix
