#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <map>
#include <set>

#include "cipherpix/common.hpp"
#include "cipherpix/corpus.hpp"
#include "cipherpix/manifest.hpp"
#include "cipherpix/png_io.hpp"
#include "cipherpix/text.hpp"
#include "test_support.hpp"

using namespace cipherpix;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

CorpusSpec small_cipher_spec() {
    CorpusSpec spec;
    spec.corpus_id = "tiny";
    spec.stage = Stage::kCipher;
    spec.n_lines = 12;
    spec.seed = 77;
    spec.noise_sigma = 0.01;
    spec.log_glyph_sequences = true;
    return spec;
}

}  // namespace

TEST_SUITE_BEGIN("corpus_manifest");

TEST_CASE("ratio split of 10 lines is 8/1/1") {
    CorpusSpec spec;
    spec.n_lines = 10;
    spec.split_ratios = {0.8, 0.1, 0.1};
    const auto counts = spec.resolved_split_counts();
    CHECK(counts == std::vector<int>{8, 1, 1});
}

TEST_CASE("explicit split counts are honored and validated") {
    CorpusSpec spec;
    spec.n_lines = 20;
    spec.split_counts = {14, 2, 4};
    spec.validate();
    CHECK(spec.resolved_split_counts() == std::vector<int>{14, 2, 4});

    spec.split_counts = {14, 2, 5};
    CHECK_THROWS_AS(spec.validate(), InvalidArgument);
}

TEST_CASE("bad specs rejected") {
    CorpusSpec spec;
    spec.n_lines = 2;
    CHECK_THROWS_AS(spec.validate(), InvalidArgument);
    spec.n_lines = 10;
    spec.split_ratios = {0.5, 0.2, 0.2};
    CHECK_THROWS_AS(spec.validate(), InvalidArgument);
    spec = CorpusSpec{};
    spec.stage = Stage::kCipher;
    spec.homophones_min = 2;
    spec.homophones_max = 1;
    CHECK_THROWS_AS(spec.validate(), InvalidArgument);
}

TEST_CASE("generated corpus partitions lines across splits and is decipherable") {
    testsupport::TempDir tmp("corpus");
    const CorpusSpec spec = small_cipher_spec();
    const CorpusResult result = generate_corpus(spec, tmp.str());

    REQUIRE(result.key.has_value());
    REQUIRE(result.manifest.entries.size() == 12);

    std::map<std::string, int> split_sizes;
    std::set<std::string> ids;
    for (const auto& e : result.manifest.entries) {
        split_sizes[e.split]++;
        CHECK(ids.insert(e.line_id).second);
        CHECK(std::filesystem::exists(result.manifest.resolve(e)));
        const auto n_chars = utf8_decode(e.plaintext).size();
        CHECK(n_chars >= 1);
        CHECK(n_chars <= 67);
        CHECK(split_words(e.plaintext).size() <= 14);
    }
    CHECK(split_sizes["train"] + split_sizes["val"] + split_sizes["test"] == 12);
    CHECK(split_sizes["train"] == 10);  // 0.8 * 12 rounded by largest remainder
    CHECK(split_sizes["val"] == 1);
    CHECK(split_sizes["test"] == 1);

    // Decipherability: inverting the key on the logged glyph sequence
    // reconstructs the plaintext.
    const auto inverse = result.key->inverse();
    std::ifstream log(tmp.str("glyph_log.jsonl"));
    REQUIRE(log);
    std::string line;
    size_t i = 0;
    while (std::getline(log, line)) {
        const auto j = nlohmann::json::parse(line);
        std::u32string decoded;
        for (int g : j.at("glyphs").get<std::vector<int>>()) {
            decoded.push_back(inverse[static_cast<size_t>(g)]);
        }
        CHECK(utf8_encode(decoded) == result.manifest.entries[i].plaintext);
        ++i;
    }
    CHECK(i == 12);
}

TEST_CASE("same spec twice gives byte-identical manifests and images") {
    testsupport::TempDir a("corpus_a");
    testsupport::TempDir b("corpus_b");
    const CorpusSpec spec = small_cipher_spec();
    const auto ra = generate_corpus(spec, a.str());
    const auto rb = generate_corpus(spec, b.str());
    CHECK(slurp(a.str("manifest.jsonl")) == slurp(b.str("manifest.jsonl")));
    CHECK(slurp(a.str("key.json")) == slurp(b.str("key.json")));
    for (const auto& e : ra.manifest.entries) {
        CHECK(slurp((a.path() / e.image_path).string()) ==
              slurp((b.path() / e.image_path).string()));
    }
    CHECK(ra.manifest.checksum == rb.manifest.checksum);
}

TEST_CASE("pretrain corpus uses exactly n_writers style clusters") {
    testsupport::TempDir tmp("corpus_w");
    CorpusSpec spec;
    spec.corpus_id = "hw";
    spec.stage = Stage::kPretrain;
    spec.n_lines = 16;
    spec.n_writers = 4;
    spec.seed = 5;
    const auto result = generate_corpus(spec, tmp.str());
    std::set<int> writers;
    for (const auto& e : result.manifest.entries) {
        writers.insert(e.writer_id);
    }
    CHECK(writers == std::set<int>{0, 1, 2, 3});
}

TEST_CASE("manifest round trip preserves everything") {
    testsupport::TempDir tmp("mani");
    const auto result = generate_corpus(small_cipher_spec(), tmp.str());
    const Manifest back = read_manifest(tmp.str("manifest.jsonl"));
    CHECK(back.corpus_id == result.manifest.corpus_id);
    CHECK(back.line_height == result.manifest.line_height);
    CHECK(back.checksum == result.manifest.checksum);
    REQUIRE(back.entries.size() == result.manifest.entries.size());
    for (size_t i = 0; i < back.entries.size(); ++i) {
        CHECK(back.entries[i].line_id == result.manifest.entries[i].line_id);
        CHECK(back.entries[i].plaintext == result.manifest.entries[i].plaintext);
        CHECK(back.entries[i].split == result.manifest.entries[i].split);
        CHECK(back.entries[i].writer_id == result.manifest.entries[i].writer_id);
    }
}

TEST_CASE("hand-edited plaintext fails the checksum") {
    testsupport::TempDir tmp("mani_edit");
    Manifest m;
    m.corpus_id = "t";
    m.stage = Stage::kCipher;
    m.entries = {{"l1", "train/l1.png", "abc", "train", 0},
                 {"l2", "train/l2.png", "def", "train", 0}};
    m.checksum = manifest_checksum(m.entries);
    write_manifest(m, tmp.str("m.jsonl"));

    std::string text = slurp(tmp.str("m.jsonl"));
    const auto pos = text.find("abc");
    REQUIRE(pos != std::string::npos);
    text[pos + 1] = 'x';
    std::ofstream f(tmp.str("m.jsonl"), std::ios::trunc | std::ios::binary);
    f << text;
    f.close();
    CHECK_THROWS_AS(read_manifest(tmp.str("m.jsonl"), false), CorruptManifest);
}

TEST_CASE("duplicate line ids rejected at read") {
    testsupport::TempDir tmp("mani_dup");
    Manifest m;
    m.corpus_id = "t";
    m.entries = {{"l1", "a.png", "abc", "train", 0}, {"l1", "b.png", "def", "train", 0}};
    m.checksum = manifest_checksum(m.entries);
    write_manifest(m, tmp.str("m.jsonl"));
    CHECK_THROWS_AS(read_manifest(tmp.str("m.jsonl"), false), CorruptManifest);
}

TEST_CASE("missing image files raise a dangling-path error") {
    testsupport::TempDir tmp("mani_dangle");
    Manifest m;
    m.corpus_id = "t";
    m.entries = {{"l1", "nowhere/l1.png", "abc", "train", 0}};
    m.checksum = manifest_checksum(m.entries);
    write_manifest(m, tmp.str("m.jsonl"));
    CHECK_THROWS_AS(read_manifest(tmp.str("m.jsonl"), true), DanglingPaths);
}

TEST_CASE("ingest builds a manifest from images plus transcript") {
    testsupport::TempDir tmp("ingest");
    std::filesystem::create_directories(tmp.str("imgs"));
    for (int i = 0; i < 3; ++i) {
        Image img(16, 24, 1.0f);
        img.at(8, 12) = 0.0f;
        write_png_gray8(tmp.str("imgs/line" + std::to_string(i) + ".png"), img);
    }
    std::ofstream t(tmp.str("gt.tsv"));
    t << "line0.png\tder alte mann\n";
    t << "line1.png\tkommt nach haus\n";
    t << "line2.png\t" << std::string(70, 'x') << "\n";  // envelope violation, kept
    t << "missing.png\tverloren\n";
    t.close();

    IngestOptions opts;
    opts.seed = 3;
    const IngestReport report =
        ingest_external(tmp.str("imgs"), tmp.str("gt.tsv"), tmp.str("out"), opts);
    CHECK(report.manifest.entries.size() == 3);
    CHECK(report.warnings.size() == 1);
    CHECK(report.envelope_violations == 1);

    const Manifest back = read_manifest(tmp.str("out/manifest.jsonl"));
    CHECK(back.entries.size() == 3);
}

TEST_CASE("empty transcript rejected") {
    testsupport::TempDir tmp("ingest_empty");
    std::filesystem::create_directories(tmp.str("imgs"));
    std::ofstream t(tmp.str("gt.tsv"));
    t.close();
    CHECK_THROWS_AS(ingest_external(tmp.str("imgs"), tmp.str("gt.tsv"), tmp.str("out"), {}),
                    InvalidArgument);
}

TEST_SUITE_END();
