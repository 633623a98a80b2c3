#include <doctest.h>

#include <fstream>

#include "cipherpix/common.hpp"
#include "cipherpix/image.hpp"
#include "cipherpix/png_io.hpp"
#include "cipherpix/rng.hpp"
#include "test_support.hpp"

using namespace cipherpix;

TEST_SUITE_BEGIN("png_image");

TEST_CASE("gray png round trip is exact at 8-bit resolution") {
    testsupport::TempDir tmp("png");
    Image img(16, 40);
    Rng rng(5);
    for (auto& v : img.px) {
        v = static_cast<float>(rng.uniform());
    }
    const std::string path = tmp.str("a.png");
    write_png_gray8(path, img);
    const Image back = read_png_gray(path);
    REQUIRE(back.height == img.height);
    REQUIRE(back.width == img.width);
    // Quantized to 8 bits on write.
    CHECK(max_abs_diff(back, from_u8(to_u8(img), img.height, img.width)) == 0.0f);
}

TEST_CASE("png writer is byte-deterministic") {
    testsupport::TempDir tmp("pngdet");
    Image img(8, 8, 0.5f);
    img.at(3, 4) = 0.0f;
    write_png_gray8(tmp.str("x.png"), img);
    write_png_gray8(tmp.str("y.png"), img);
    std::ifstream fx(tmp.str("x.png"), std::ios::binary);
    std::ifstream fy(tmp.str("y.png"), std::ios::binary);
    const std::string bx((std::istreambuf_iterator<char>(fx)), std::istreambuf_iterator<char>());
    const std::string by((std::istreambuf_iterator<char>(fy)), std::istreambuf_iterator<char>());
    CHECK(bx == by);
    CHECK(!bx.empty());
}

TEST_CASE("rgb png reads back as luminance") {
    testsupport::TempDir tmp("pngrgb");
    std::vector<uint8_t> rgb = {255, 0, 0, 0, 255, 0, 0, 0, 255, 255, 255, 255};
    write_png_rgb8(tmp.str("c.png"), 1, 4, rgb);
    const Image img = read_png_gray(tmp.str("c.png"));
    REQUIRE(img.width == 4);
    CHECK(img.at(0, 0) == doctest::Approx(0.299f));
    CHECK(img.at(0, 1) == doctest::Approx(0.587f));
    CHECK(img.at(0, 2) == doctest::Approx(0.114f));
    CHECK(img.at(0, 3) == doctest::Approx(1.0f));
}

TEST_CASE("truncated file rejected") {
    testsupport::TempDir tmp("pngbad");
    std::ofstream f(tmp.str("bad.png"), std::ios::binary);
    f << "\x89PNG\r\n\x1a\ntrash";
    f.close();
    CHECK_THROWS_AS(read_png_gray(tmp.str("bad.png")), IoError);
}

TEST_CASE("resize to height preserves aspect and range") {
    Image img(20, 60);
    for (int r = 0; r < 20; ++r) {
        for (int c = 0; c < 60; ++c) {
            img.at(r, c) = (r + c) % 2 ? 1.0f : 0.0f;
        }
    }
    const Image out = resize_to_height(img, 32);
    CHECK(out.height == 32);
    CHECK(out.width == 96);
    for (float v : out.px) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_SUITE_END();
