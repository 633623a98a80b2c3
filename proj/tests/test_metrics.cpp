#include <doctest.h>

#include <string>
#include <vector>

#include "cipherpix/common.hpp"
#include "cipherpix/metrics.hpp"
#include "cipherpix/rng.hpp"
#include "oracle_edit.hpp"

using namespace cipherpix;

TEST_SUITE_BEGIN("metrics");

TEST_CASE("kitten to sitting: classic counts under the documented tie-break") {
    const EditCounts c = edit_counts_chars("kitten", "sitting");
    CHECK(c.total() == 3);
    CHECK(c.ref_len == 6);
    CHECK(c.substitutions == 2);
    CHECK(c.insertions == 1);
    CHECK(c.deletions == 0);
    CHECK(cer("kitten", "sitting") == doctest::Approx(0.5));
}

TEST_CASE("identity and empty-hypothesis cases") {
    const EditCounts same = edit_counts_chars("ab", "ab");
    CHECK(same.total() == 0);
    CHECK(cer("ab", "ab") == 0.0);
    CHECK(wer("der alte", "der alte") == 0.0);

    const EditCounts gone = edit_counts_chars("ab", "");
    CHECK(gone.deletions == 2);
    CHECK(gone.substitutions == 0);
    CHECK(gone.insertions == 0);
}

TEST_CASE("word-level deletion") {
    CHECK(wer("der alte mann", "der mann") == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("rates above one are legal") {
    // S=1 (a->b), I=1 (c), ref has one word.
    const EditCounts c = edit_counts_words("a", "b c");
    CHECK(c.substitutions == 1);
    CHECK(c.insertions == 1);
    CHECK(wer("a", "b c") == doctest::Approx(2.0));
}

TEST_CASE("unicode scalars are the character unit") {
    const EditCounts c = edit_counts_chars("\xc3\xa4\xc3\x9f\x65", "a\xc3\x9f\x65");  // äße vs aße
    CHECK(c.ref_len == 3);
    CHECK(c.substitutions == 1);
    CHECK(c.total() == 1);
}

TEST_CASE("empty reference: per-line rate undefined, counts still aggregate") {
    CHECK_THROWS_AS((void)cer("", "abc"), InvalidArgument);
    CHECK_THROWS_AS((void)wer("", "abc"), InvalidArgument);

    const MetricsReport report = score_pairs(
        "test", {{"l0", "ab", "ab"}, {"l1", "", "xy"}});
    REQUIRE(report.lines.size() == 2);
    CHECK(!report.lines[1].cer.has_value());
    CHECK(report.lines[1].chars.insertions == 2);
    // Pooled: 2 insertions over 2 reference chars.
    CHECK(report.cer == doctest::Approx(1.0));
}

TEST_CASE("corpus pooling, not mean of per-line rates") {
    // Line CERs 0 and 1 with reference lengths 1 and 3.
    const MetricsReport report =
        score_pairs("test", {{"l0", "a", "a"}, {"l1", "abc", ""}});
    CHECK(report.cer == doctest::Approx(0.75));
    CHECK(report.mean_line_cer == doctest::Approx(0.5));

    // Order invariance.
    const MetricsReport flipped =
        score_pairs("test", {{"l1", "abc", ""}, {"l0", "a", "a"}});
    CHECK(flipped.cer == doctest::Approx(report.cer));
}

TEST_CASE("normalization flag lowercases and collapses whitespace") {
    const MetricsReport strict = score_pairs("t", {{"l", "Der Alte", "der  alte"}});
    CHECK(strict.cer > 0.0);
    const MetricsReport relaxed = score_pairs("t", {{"l", "Der Alte", "der  alte"}}, true);
    CHECK(relaxed.cer == 0.0);
}

TEST_CASE("DP equals the brute-force oracle on short strings") {
    // Exhaustive over {a,b,c} for lengths <= 4 here; the acceptance suite
    // extends this to lengths <= 6.
    std::vector<std::string> all = {""};
    std::vector<std::string> cur = {""};
    for (int len = 1; len <= 4; ++len) {
        std::vector<std::string> next;
        for (const auto& s : cur) {
            for (char c : {'a', 'b', 'c'}) {
                next.push_back(s + c);
            }
        }
        all.insert(all.end(), next.begin(), next.end());
        cur = std::move(next);
    }
    for (const auto& ref : all) {
        for (const auto& hyp : all) {
            const EditCounts c = edit_counts_chars(ref, hyp);
            const int expected = oracle::min_edit_cost(ref, hyp);
            REQUIRE_MESSAGE(c.total() == expected, "ref=", ref, " hyp=", hyp);
            // Edit-path feasibility invariant.
            REQUIRE(c.substitutions + c.deletions <= c.ref_len + c.insertions);
        }
    }
}

TEST_CASE("metric axioms on random triples") {
    Rng rng(31);
    auto random_string = [&](int max_len) {
        std::string s;
        const int len = static_cast<int>(rng.index(static_cast<uint64_t>(max_len + 1)));
        for (int i = 0; i < len; ++i) {
            s.push_back(static_cast<char>('a' + rng.index(3)));
        }
        return s;
    };
    for (int trial = 0; trial < 300; ++trial) {
        const std::string x = random_string(8);
        const std::string y = random_string(8);
        const std::string z = random_string(8);
        const auto dxy = edit_counts_chars(x, y).total();
        const auto dyx = edit_counts_chars(y, x).total();
        const auto dyz = edit_counts_chars(y, z).total();
        const auto dxz = edit_counts_chars(x, z).total();
        CHECK(edit_counts_chars(x, x).total() == 0);
        CHECK(dxy == dyx);             // distance symmetry (roles of S/D/I swap)
        CHECK(dxz <= dxy + dyz);       // triangle inequality
    }
}

TEST_CASE("compare_runs produces cells and guards zero baselines") {
    MetricsReport base;
    base.split = "test";
    base.cer = 0.4610;
    base.wer = 0.9848;
    MetricsReport ours;
    ours.split = "test";
    ours.cer = 0.1103;
    ours.wer = 0.3303;
    const ComparisonReport cmp = compare_runs({base}, {ours});
    REQUIRE(cmp.splits.size() == 1);
    const auto& cell = cmp.splits[0].second;
    CHECK(*cell.cer_reduction_pct == doctest::Approx(100.0 * (0.4610 - 0.1103) / 0.4610));
    CHECK(cell.baseline_wer == doctest::Approx(0.9848));

    // Identical reports: zero reduction.
    const ComparisonReport same = compare_runs({base}, {base});
    CHECK(*same.splits[0].second.cer_reduction_pct == doctest::Approx(0.0));

    // Zero baseline: n/a, not a division error.
    MetricsReport zero;
    zero.split = "test";
    zero.cer = 0.0;
    zero.wer = 0.0;
    const ComparisonReport guarded = compare_runs({zero}, {ours});
    CHECK(!guarded.splits[0].second.cer_reduction_pct.has_value());
    CHECK(guarded.to_json()["test"]["cer_reduction_pct"] == "n/a");

    MetricsReport other;
    other.split = "val";
    other.cer = 0.1;
    other.wer = 0.2;
    CHECK_THROWS_AS((void)compare_runs({base}, {other}), InvalidArgument);
}

TEST_CASE("dummy decoders give the analytic corpus rates") {
    // Perfect dummy model: hypothesis = reference.
    std::vector<ScoredPair> perfect;
    std::vector<ScoredPair> empty_hyp;
    for (int i = 0; i < 5; ++i) {
        const std::string text = "zeile nummer " + std::to_string(i);
        perfect.push_back({"l" + std::to_string(i), text, text});
        empty_hyp.push_back({"l" + std::to_string(i), text, ""});
    }
    const MetricsReport p = score_pairs("val", perfect);
    CHECK(p.cer == 0.0);
    CHECK(p.wer == 0.0);
    // Empty-hypothesis decoder: everything deleted, CER exactly 1.
    const MetricsReport e = score_pairs("val", empty_hyp);
    CHECK(e.cer == doctest::Approx(1.0));
    CHECK(e.char_totals.deletions == e.char_totals.ref_len);
}

TEST_SUITE_END();
