#include <doctest.h>

#include <set>

#include "cipherpix/common.hpp"
#include "cipherpix/key.hpp"
#include "cipherpix/text.hpp"
#include "test_support.hpp"

using namespace cipherpix;

TEST_SUITE_BEGIN("key");

TEST_CASE("single letter forced mapping") {
    const CipherKey key = build_key(7, U"a", 1, 1);
    REQUIRE(key.mapping.size() == 1);
    CHECK(key.mapping.at(U'a') == std::vector<int>{0});
    CHECK(key.glyph_inventory == 1);
}

TEST_CASE("inventory bounds and determinism for a 30-char alphabet") {
    const std::u32string alphabet = utf8_decode("abcdefghijklmnopqrstuvwxyz .,-");
    REQUIRE(alphabet.size() == 30);
    const CipherKey a = build_key(7, alphabet, 1, 3);
    CHECK(a.glyph_inventory >= 30);
    CHECK(a.glyph_inventory <= 90);

    const CipherKey b = build_key(7, alphabet, 1, 3);
    CHECK(a.glyph_inventory == b.glyph_inventory);
    CHECK(a.mapping == b.mapping);
    CHECK(a.key_id == b.key_id);
}

TEST_CASE("different seeds give different keys") {
    const std::u32string alphabet = utf8_decode("abcdefghijklmnopqrstuvwxyz .,-");
    const CipherKey a = build_key(7, alphabet, 1, 3);
    const CipherKey b = build_key(8, alphabet, 1, 3);
    // Oracle for degenerate RNG: at least one homophone list must differ.
    CHECK(a.mapping != b.mapping);
}

TEST_CASE("glyph ids are dense, disjoint, and invertible") {
    const CipherKey key = build_key(99, utf8_decode("abc xyz"), 2, 5);
    std::set<int> seen;
    int total = 0;
    for (const auto& [ch, glyphs] : key.mapping) {
        CHECK(!glyphs.empty());
        for (int g : glyphs) {
            CHECK(seen.insert(g).second);
            ++total;
        }
    }
    CHECK(total == key.glyph_inventory);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == key.glyph_inventory - 1);

    const auto inv = key.inverse();
    for (const auto& [ch, glyphs] : key.mapping) {
        for (int g : glyphs) {
            CHECK(inv[static_cast<size_t>(g)] == ch);
        }
    }
}

TEST_CASE("invalid arguments rejected") {
    CHECK_THROWS_AS(build_key(1, U"", 1, 1), InvalidArgument);
    CHECK_THROWS_AS(build_key(1, U"ab", 3, 2), InvalidArgument);
    CHECK_THROWS_AS(build_key(1, U"ab", 0, 2), InvalidArgument);
    CHECK_THROWS_AS(build_key(1, U"ab", 1, 6), InvalidArgument);
}

TEST_CASE("key json round trip") {
    testsupport::TempDir tmp("key");
    const CipherKey key = build_key(123456789, utf8_decode("abcdef ."), 1, 4);
    save_key_json(key, tmp.str("key.json"));
    const CipherKey back = load_key_json(tmp.str("key.json"));
    CHECK(back.key_id == key.key_id);
    CHECK(back.seed == key.seed);
    CHECK(back.alphabet == key.alphabet);
    CHECK(back.mapping == key.mapping);
    CHECK(back.glyph_inventory == key.glyph_inventory);
}

TEST_SUITE_END();
