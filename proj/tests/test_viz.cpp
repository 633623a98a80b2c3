#include <doctest.h>

#include <fstream>

#include "cipherpix/common.hpp"
#include "cipherpix/png_io.hpp"
#include "cipherpix/viz.hpp"
#include "test_support.hpp"

using namespace cipherpix;

TEST_SUITE_BEGIN("viz");

TEST_CASE("uniform attention gives a uniform heat stripe") {
    Image line(8, 32, 0.8f);
    const int n_patches = 4;
    std::vector<float> attn(static_cast<size_t>(1) * n_patches, 0.25f);
    OverlaySpec spec;
    spec.mode = OverlayMode::kPerToken;
    const auto rgb = render_attention_overlay(line, attn, 1, n_patches, spec, "");
    REQUIRE(rgb.size() == static_cast<size_t>(8) * 32 * 3);
    // Every pixel identical: uniform stripe.
    for (size_t i = 3; i < rgb.size(); i += 3) {
        CHECK(rgb[i + 0] == rgb[0]);
        CHECK(rgb[i + 1] == rgb[1]);
        CHECK(rgb[i + 2] == rgb[2]);
    }
    // And visibly tinted towards the heat color (red bias).
    CHECK(rgb[0] > rgb[1]);
}

TEST_CASE("one-hot attention confines heat to the patch columns") {
    Image line(8, 32, 1.0f);
    const int n_patches = 4;
    std::vector<float> attn(n_patches, 0.0f);
    attn[2] = 1.0f;  // patch 2 covers columns [16, 24)
    OverlaySpec spec;
    spec.mode = OverlayMode::kPerToken;
    spec.patch_width = 8;
    const auto rgb = render_attention_overlay(line, attn, 1, n_patches, spec, "");
    for (int c = 0; c < 32; ++c) {
        const size_t idx = static_cast<size_t>(c) * 3;
        const bool hot = c >= 16 && c < 24;
        const bool tinted = rgb[idx + 0] != rgb[idx + 1];
        CHECK(tinted == hot);
    }
}

TEST_CASE("per-token mode stacks one band per token") {
    testsupport::TempDir tmp("viz");
    Image line(8, 24, 0.5f);
    std::vector<float> attn = {1.0f, 0.0f, 0.0f,   // token 0: patch 0
                               0.0f, 0.0f, 1.0f};  // token 1: patch 2
    OverlaySpec spec;
    const auto rgb =
        render_attention_overlay(line, attn, 2, 3, spec, tmp.str("overlay.png"));
    CHECK(rgb.size() == static_cast<size_t>(2) * 8 * 24 * 3);
    const Image back = read_png_gray(tmp.str("overlay.png"));
    CHECK(back.height == 16);  // height x tokens
    CHECK(back.width == 24);
}

TEST_CASE("combined mode keeps the line dimensions") {
    Image line(8, 24, 0.5f);
    std::vector<float> attn = {0.9f, 0.1f, 0.2f, 0.1f, 0.8f, 0.7f};
    OverlaySpec spec;
    spec.mode = OverlayMode::kCombined;
    const auto rgb = render_attention_overlay(line, attn, 2, 3, spec, "");
    CHECK(rgb.size() == static_cast<size_t>(8) * 24 * 3);
}

TEST_CASE("shape mismatches rejected") {
    Image line(8, 24, 0.5f);
    std::vector<float> attn(5, 0.2f);
    OverlaySpec spec;
    CHECK_THROWS_AS((void)render_attention_overlay(line, attn, 2, 3, spec, ""), InvalidArgument);
    std::vector<float> attn2(2 * 9, 0.1f);
    CHECK_THROWS_AS((void)render_attention_overlay(line, attn2, 2, 9, spec, ""), InvalidArgument);
}

TEST_CASE("diff of identical strings is all matches") {
    const std::string out = render_diff("der alte", "der alte", "");
    CHECK(out.find("OPS: ========") != std::string::npos);
    CHECK(out.find("CER: 0.0000") != std::string::npos);
}

TEST_CASE("kitten vs sitting diff marks two subs and one insertion") {
    testsupport::TempDir tmp("diff");
    const std::string out = render_diff("kitten", "sitting", tmp.str("d.txt"));
    CHECK(out.find("REF: kitten-") != std::string::npos);
    CHECK(out.find("HYP: sitting") != std::string::npos);
    CHECK(out.find("OPS: S===S=I") != std::string::npos);
    CHECK(out.find("S=2 D=0 I=1") != std::string::npos);
    std::ifstream f(tmp.str("d.txt"));
    REQUIRE(f);
    std::string file_text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CHECK(file_text == out);
}

TEST_CASE("empty hypothesis is all deletions") {
    const std::string out = render_diff("abc", "", "");
    CHECK(out.find("OPS: DDD") != std::string::npos);
    CHECK(out.find("HYP: ---") != std::string::npos);
    CHECK(out.find("CER: 1.0000") != std::string::npos);
}

TEST_SUITE_END();
