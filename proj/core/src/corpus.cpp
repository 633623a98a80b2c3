// SPDX-License-Identifier: Apache-2.0
#include "cipherpix/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "cipherpix/common.hpp"
#include "cipherpix/lexicon.hpp"
#include "cipherpix/parallel.hpp"
#include "cipherpix/png_io.hpp"
#include "cipherpix/text.hpp"

namespace fs = std::filesystem;

namespace cipherpix {

void CorpusSpec::validate() const {
    require(n_lines >= 3, "corpus: n_lines must be >= 3");
    require(line_height >= 8, "corpus: line_height must be >= 8");
    require(n_writers >= 1 && n_writers <= n_lines, "corpus: n_writers out of range");
    require(glyph_advance >= 3 && margin >= 0, "corpus: bad rendering geometry");
    require(max_chars >= 1 && max_words >= 1, "corpus: bad envelope");
    if (!split_counts.empty()) {
        require(split_counts.size() == 3, "corpus: split_counts must have 3 entries");
        int sum = 0;
        for (int c : split_counts) {
            require(c >= 0, "corpus: negative split count");
            sum += c;
        }
        require(sum == n_lines, "corpus: split_counts must sum to n_lines (" +
                                    std::to_string(sum) + " != " + std::to_string(n_lines) + ")");
    } else {
        require(split_ratios.size() == 3, "corpus: split_ratios must have 3 entries");
        double sum = 0.0;
        for (double r : split_ratios) {
            require(r >= 0.0, "corpus: negative split ratio");
            sum += r;
        }
        require(std::abs(sum - 1.0) <= 1e-9, "corpus: split ratios must sum to 1");
    }
    if (stage == Stage::kCipher) {
        require(!alphabet.empty(), "corpus: empty alphabet");
        require(homophones_min >= 1 && homophones_min <= homophones_max && homophones_max <= 5,
                "corpus: homophone bounds must satisfy 1 <= min <= max <= 5");
    }
}

std::vector<int> CorpusSpec::resolved_split_counts() const {
    if (!split_counts.empty()) {
        return split_counts;
    }
    // Largest-remainder rounding so counts always sum to n_lines.
    std::vector<int> counts(3);
    std::vector<double> exact(3);
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
        exact[i] = split_ratios[static_cast<size_t>(i)] * n_lines;
        counts[static_cast<size_t>(i)] = static_cast<int>(std::floor(exact[static_cast<size_t>(i)]));
        assigned += counts[static_cast<size_t>(i)];
    }
    std::vector<int> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double ra = exact[static_cast<size_t>(a)] - std::floor(exact[static_cast<size_t>(a)]);
        const double rb = exact[static_cast<size_t>(b)] - std::floor(exact[static_cast<size_t>(b)]);
        if (ra != rb) {
            return ra > rb;
        }
        return a < b;
    });
    for (int i = 0; assigned < n_lines; ++i) {
        counts[static_cast<size_t>(order[static_cast<size_t>(i % 3)])]++;
        ++assigned;
    }
    return counts;
}

CorpusResult generate_corpus(const CorpusSpec& spec, const std::string& out_dir) {
    spec.validate();

    const Lexicon lexicon = spec.lexicon_path.empty()
                                ? builtin_german_lexicon()
                                : load_lexicon_tsv(spec.lexicon_path, spec.max_chars);

    // Cipher key (one per corpus) and renderability checks.
    std::optional<CipherKey> key;
    if (spec.stage == Stage::kCipher) {
        key = build_key(derive_seed(spec.seed, 0x6b6579ull), utf8_decode(spec.alphabet),
                        spec.homophones_min, spec.homophones_max);
        for (const auto& w : lexicon.words) {
            for (char32_t c : utf8_decode(w)) {
                require(key->homophones(c) != nullptr,
                        "corpus: lexicon word '" + w + "' not renderable with alphabet");
            }
        }
        require(key->homophones(U' ') != nullptr || spec.space_mode == SpaceMode::kOmitted,
                "corpus: alphabet lacks space but space_mode renders separators");
    } else {
        StrokeProgram tmp;
        for (const auto& w : lexicon.words) {
            for (char32_t c : utf8_decode(w)) {
                require(latin_stroke_program(c, tmp),
                        "corpus: lexicon word '" + w + "' has no Latin letterform");
            }
        }
    }

    // Split assignment: seeded shuffle, then contiguous partition.
    const std::vector<int> counts = spec.resolved_split_counts();
    std::vector<int> order(static_cast<size_t>(spec.n_lines));
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng(derive_seed(spec.seed, 0x73706c6974ull));
    split_rng.shuffle(order);
    std::vector<std::string> split_of(static_cast<size_t>(spec.n_lines));
    for (int pos = 0; pos < spec.n_lines; ++pos) {
        const char* split = pos < counts[0] ? "train"
                            : pos < counts[0] + counts[1] ? "val"
                                                          : "test";
        split_of[static_cast<size_t>(order[static_cast<size_t>(pos)])] = split;
    }

    // Writer style clusters.
    std::vector<RenderStyle> styles;
    styles.reserve(static_cast<size_t>(spec.n_writers));
    for (int w = 0; w < spec.n_writers; ++w) {
        styles.push_back(writer_style(derive_seed(spec.seed, 0x777269746572ull), w));
    }

    LineRenderOptions opts;
    opts.line_height = spec.line_height;
    opts.glyph_advance = spec.glyph_advance;
    opts.margin = spec.margin;
    opts.space_mode = spec.space_mode;
    opts.noise_sigma = spec.noise_sigma;

    const fs::path out(out_dir);
    fs::create_directories(out / "train");
    fs::create_directories(out / "val");
    fs::create_directories(out / "test");

    std::vector<ManifestEntry> entries(static_cast<size_t>(spec.n_lines));
    std::vector<std::vector<int>> glyph_logs(
        spec.log_glyph_sequences ? static_cast<size_t>(spec.n_lines) : 0);

    parallel_for(spec.n_lines, [&](int64_t i) {
        const auto idx = static_cast<size_t>(i);
        Rng rng(derive_seed(spec.seed, 0x6c696e65ull, static_cast<uint64_t>(i)));
        const std::string plaintext =
            sample_plaintext(lexicon, rng, spec.max_chars, spec.max_words);
        const int writer = static_cast<int>(i) % spec.n_writers;

        LineRender render;
        if (spec.stage == Stage::kCipher) {
            render = render_cipher_line(plaintext, *key, styles[static_cast<size_t>(writer)], opts, rng);
        } else {
            render = render_identity_line(plaintext, styles[static_cast<size_t>(writer)], opts, rng);
        }

        char id[64];
        std::snprintf(id, sizeof(id), "%s-%06lld", spec.corpus_id.c_str(),
                      static_cast<long long>(i));
        ManifestEntry e;
        e.line_id = id;
        e.split = split_of[idx];
        e.image_path = e.split + "/" + e.line_id + ".png";
        e.plaintext = plaintext;
        e.writer_id = writer;
        write_png_gray8((out / e.image_path).string(), render.image);
        entries[idx] = std::move(e);
        if (spec.log_glyph_sequences) {
            glyph_logs[idx] = std::move(render.glyphs);
        }
    });

    CorpusResult result;
    result.key = key;
    result.manifest.corpus_id = spec.corpus_id;
    result.manifest.stage = spec.stage;
    result.manifest.line_height = spec.line_height;
    result.manifest.entries = std::move(entries);
    result.manifest.checksum = manifest_checksum(result.manifest.entries);
    result.manifest.base_dir = fs::absolute(out);
    write_manifest(result.manifest, (out / "manifest.jsonl").string());

    if (key) {
        save_key_json(*key, (out / "key.json").string());
    }
    if (spec.log_glyph_sequences) {
        std::ofstream log(out / "glyph_log.jsonl", std::ios::trunc);
        if (!log) {
            throw IoError("corpus: cannot write glyph log");
        }
        for (size_t i = 0; i < glyph_logs.size(); ++i) {
            nlohmann::json j;
            j["line_id"] = result.manifest.entries[i].line_id;
            j["glyphs"] = glyph_logs[i];
            log << j.dump() << "\n";
        }
    }
    return result;
}

}  // namespace cipherpix
