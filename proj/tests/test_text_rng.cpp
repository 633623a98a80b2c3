#include <doctest.h>

#include <set>

#include "cipherpix/rng.hpp"
#include "cipherpix/text.hpp"

using namespace cipherpix;

TEST_SUITE_BEGIN("text_rng");

TEST_CASE("utf8 round trip on mixed text") {
    const std::string s = "der alte mann \xc3\xa4\xc3\x9f\xe2\x82\xac";  // "äß€"
    CHECK(utf8_encode(utf8_decode(s)) == s);
    CHECK(utf8_decode(s).size() == 17);
}

TEST_CASE("utf8 invalid bytes become replacement chars") {
    const std::string bad = "a\xffz";
    const auto dec = utf8_decode(bad);
    REQUIRE(dec.size() == 3);
    CHECK(dec[1] == 0xFFFD);
}

TEST_CASE("split words") {
    CHECK(split_words("der alte  mann ").size() == 3);
    CHECK(split_words("").empty());
    CHECK(split_words("   ").empty());
}

TEST_CASE("normalize lowercases and collapses whitespace") {
    CHECK(normalize_text("  Der  ALTE\tmann ") == "der alte mann");
}

TEST_CASE("rng determinism and basic ranges") {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.u64() == b.u64());
    }
    Rng r(7);
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const auto k = r.range(3, 5);
        CHECK(k >= 3);
        CHECK(k <= 5);
    }
}

TEST_CASE("distinct seeds diverge") {
    Rng a(1);
    Rng b(2);
    int same = 0;
    for (int i = 0; i < 64; ++i) {
        same += a.u64() == b.u64() ? 1 : 0;
    }
    CHECK(same == 0);
}

TEST_CASE("truncated normal stays within two sigma") {
    Rng r(3);
    for (int i = 0; i < 2000; ++i) {
        CHECK(std::abs(r.truncated_normal(0.02)) <= 0.04 + 1e-12);
    }
}

TEST_CASE("derive_seed separates streams") {
    std::set<uint64_t> seen;
    for (uint64_t i = 0; i < 1000; ++i) {
        seen.insert(derive_seed(123, i));
    }
    CHECK(seen.size() == 1000);
}

TEST_SUITE_END();
