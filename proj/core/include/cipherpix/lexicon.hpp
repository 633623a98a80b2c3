// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "cipherpix/rng.hpp"

namespace cipherpix {

// Weighted word list for plaintext sampling.
struct Lexicon {
    std::vector<std::string> words;
    std::vector<double> weights;   // > 0, same length as words
    std::vector<double> cumulative;

    void finalize(int max_chars = 67);  // validates and builds the CDF
    const std::string& draw(Rng& rng) const;
};

// ~500 high-frequency German words (lowercase ASCII, umlauts transliterated)
// with Zipf-like weights. Keeps the generator self-contained.
const Lexicon& builtin_german_lexicon();

// Loads "word<TAB>weight" lines (weight optional, default 1). Words longer
// than max_chars are rejected at load time.
Lexicon load_lexicon_tsv(const std::string& path, int max_chars = 67);

// Samples one text line: >= 1 word, <= max_words words, <= max_chars
// characters, words drawn with replacement proportional to weight.
std::string sample_plaintext(const Lexicon& lexicon, Rng& rng, int max_chars = 67,
                             int max_words = 14);

}  // namespace cipherpix
