// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cipherpix/key.hpp"
#include "cipherpix/manifest.hpp"
#include "cipherpix/render.hpp"

namespace cipherpix {

struct CorpusSpec {
    std::string corpus_id = "corpus";
    Stage stage = Stage::kPretrain;
    int n_lines = 100;
    uint64_t seed = 0;
    int line_height = 32;
    int n_writers = 1;

    // Either ratios (sum 1) or explicit counts (sum n_lines).
    std::vector<double> split_ratios = {0.8, 0.1, 0.1};
    std::vector<int> split_counts;  // empty unless set

    // Rendering.
    int glyph_advance = 10;
    int margin = 6;
    SpaceMode space_mode = SpaceMode::kSeparatorGlyph;
    double noise_sigma = 0.02;

    // Cipher stage: key construction. One key per corpus.
    std::string alphabet = "abcdefghijklmnopqrstuvwxyz .,-";
    int homophones_min = 1;
    int homophones_max = 3;
    bool log_glyph_sequences = false;  // writes glyph_log.jsonl (test support)

    // Plaintext sampling.
    int max_chars = 67;
    int max_words = 14;
    std::string lexicon_path;  // empty = builtin German-like list

    void validate() const;
    std::vector<int> resolved_split_counts() const;
};

struct CorpusResult {
    Manifest manifest;
    std::optional<CipherKey> key;  // cipher stage only
};

// Emits one PNG per line under out_dir/<split>/<line_id>.png plus
// manifest.jsonl (and key.json for cipher corpora). Per-line RNG streams
// are derived from (seed, line index), so generation parallelizes without
// affecting output bytes.
CorpusResult generate_corpus(const CorpusSpec& spec, const std::string& out_dir);

}  // namespace cipherpix
