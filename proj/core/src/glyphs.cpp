// SPDX-License-Identifier: Apache-2.0
#include "cipherpix/glyphs.hpp"

#include <algorithm>
#include <cmath>

#include "cipherpix/common.hpp"

namespace cipherpix {

namespace {

constexpr float kPi = 3.14159265358979f;
constexpr uint64_t kCipherGlyphSeed = 0x637068e27d3a91c4ull;

std::vector<Vec2> arc(float cx, float cy, float rx, float ry, float deg0, float deg1,
                      int n = 12) {
    std::vector<Vec2> pts;
    pts.reserve(static_cast<size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) {
        const float t = deg0 + (deg1 - deg0) * static_cast<float>(i) / n;
        const float a = t * kPi / 180.0f;
        pts.push_back({cx + rx * std::cos(a), cy - ry * std::sin(a)});
    }
    return pts;
}

std::vector<Vec2> line(std::initializer_list<Vec2> pts) { return {pts}; }

StrokeProgram circle(float cx, float cy, float r) { return {arc(cx, cy, r, r, 0, 360, 16)}; }

}  // namespace

bool latin_stroke_program(char32_t c, StrokeProgram& out) {
    out.clear();
    switch (c) {
        case U' ':
            return true;  // blank advance
        case U'a':
            out = circle(0.38f, 0.52f, 0.32f);
            out.push_back(line({{0.70f, 0.15f}, {0.70f, 1.0f}}));
            return true;
        case U'b':
            out.push_back(line({{0.18f, -0.5f}, {0.18f, 1.0f}}));
            out.push_back(arc(0.47f, 0.55f, 0.30f, 0.38f, 90, 450, 16));
            return true;
        case U'c':
            out.push_back(arc(0.52f, 0.5f, 0.36f, 0.42f, 45, 315));
            return true;
        case U'd':
            out = circle(0.42f, 0.55f, 0.32f);
            out.push_back(line({{0.74f, -0.5f}, {0.74f, 1.0f}}));
            return true;
        case U'e':
            out.push_back(line({{0.14f, 0.5f}, {0.80f, 0.5f}}));
            out.push_back(arc(0.47f, 0.52f, 0.34f, 0.40f, 0, 300));
            return true;
        case U'f':
            out.push_back(line({{0.72f, -0.42f}, {0.55f, -0.5f}, {0.44f, -0.28f}, {0.44f, 1.0f}}));
            out.push_back(line({{0.18f, 0.12f}, {0.74f, 0.12f}}));
            return true;
        case U'g':
            out = circle(0.42f, 0.48f, 0.31f);
            out.push_back(line({{0.73f, 0.15f}, {0.73f, 1.22f}, {0.48f, 1.45f}, {0.22f, 1.32f}}));
            return true;
        case U'h':
            out.push_back(line({{0.18f, -0.5f}, {0.18f, 1.0f}}));
            out.push_back(arc(0.45f, 0.52f, 0.27f, 0.35f, 180, 0));
            out.push_back(line({{0.72f, 0.52f}, {0.72f, 1.0f}}));
            return true;
        case U'i':
            out.push_back(line({{0.5f, 0.12f}, {0.5f, 1.0f}}));
            out.push_back(line({{0.5f, -0.30f}, {0.5f, -0.26f}}));
            return true;
        case U'j':
            out.push_back(line({{0.56f, 0.12f}, {0.56f, 1.22f}, {0.38f, 1.45f}, {0.18f, 1.32f}}));
            out.push_back(line({{0.56f, -0.30f}, {0.56f, -0.26f}}));
            return true;
        case U'k':
            out.push_back(line({{0.18f, -0.5f}, {0.18f, 1.0f}}));
            out.push_back(line({{0.18f, 0.55f}, {0.68f, 0.10f}}));
            out.push_back(line({{0.36f, 0.40f}, {0.74f, 1.0f}}));
            return true;
        case U'l':
            out.push_back(line({{0.5f, -0.5f}, {0.5f, 1.0f}}));
            return true;
        case U'm':
            out.push_back(line({{0.10f, 1.0f}, {0.10f, 0.12f}}));
            out.push_back(arc(0.29f, 0.40f, 0.19f, 0.28f, 180, 0));
            out.push_back(line({{0.48f, 0.40f}, {0.48f, 1.0f}}));
            out.push_back(arc(0.67f, 0.40f, 0.19f, 0.28f, 180, 0));
            out.push_back(line({{0.86f, 0.40f}, {0.86f, 1.0f}}));
            return true;
        case U'n':
            out.push_back(line({{0.18f, 1.0f}, {0.18f, 0.12f}}));
            out.push_back(arc(0.45f, 0.48f, 0.27f, 0.34f, 180, 0));
            out.push_back(line({{0.72f, 0.48f}, {0.72f, 1.0f}}));
            return true;
        case U'o':
            out = circle(0.47f, 0.55f, 0.36f);
            return true;
        case U'p':
            out.push_back(line({{0.18f, 0.12f}, {0.18f, 1.5f}}));
            out.push_back(arc(0.47f, 0.52f, 0.30f, 0.38f, 90, 450, 16));
            return true;
        case U'q':
            out = circle(0.42f, 0.52f, 0.31f);
            out.push_back(line({{0.73f, 0.14f}, {0.73f, 1.5f}}));
            return true;
        case U'r':
            out.push_back(line({{0.22f, 1.0f}, {0.22f, 0.12f}}));
            out.push_back(arc(0.50f, 0.46f, 0.28f, 0.32f, 180, 30));
            return true;
        case U's':
            out.push_back(line({{0.74f, 0.16f},
                                {0.52f, 0.04f},
                                {0.28f, 0.20f},
                                {0.44f, 0.46f},
                                {0.62f, 0.62f},
                                {0.70f, 0.82f},
                                {0.48f, 0.97f},
                                {0.24f, 0.86f}}));
            return true;
        case U't':
            out.push_back(line({{0.46f, -0.30f}, {0.46f, 0.88f}, {0.58f, 1.0f}, {0.74f, 0.94f}}));
            out.push_back(line({{0.18f, 0.14f}, {0.76f, 0.14f}}));
            return true;
        case U'u':
            out.push_back(line({{0.18f, 0.12f}, {0.18f, 0.60f}}));
            out.push_back(arc(0.45f, 0.60f, 0.27f, 0.34f, 180, 360));
            out.push_back(line({{0.72f, 0.12f}, {0.72f, 1.0f}}));
            return true;
        case U'v':
            out.push_back(line({{0.14f, 0.12f}, {0.46f, 1.0f}, {0.78f, 0.12f}}));
            return true;
        case U'w':
            out.push_back(line({{0.06f, 0.12f}, {0.27f, 1.0f}, {0.48f, 0.28f}, {0.69f, 1.0f}, {0.90f, 0.12f}}));
            return true;
        case U'x':
            out.push_back(line({{0.14f, 0.12f}, {0.76f, 1.0f}}));
            out.push_back(line({{0.76f, 0.12f}, {0.14f, 1.0f}}));
            return true;
        case U'y':
            out.push_back(line({{0.16f, 0.12f}, {0.47f, 1.0f}}));
            out.push_back(line({{0.78f, 0.12f}, {0.32f, 1.45f}}));
            return true;
        case U'z':
            out.push_back(line({{0.16f, 0.12f}, {0.74f, 0.12f}, {0.16f, 1.0f}, {0.78f, 1.0f}}));
            return true;
        case U'.':
            out.push_back(line({{0.5f, 0.94f}, {0.5f, 0.99f}}));
            return true;
        case U',':
            out.push_back(line({{0.55f, 0.90f}, {0.44f, 1.22f}}));
            return true;
        case U'-':
            out.push_back(line({{0.22f, 0.5f}, {0.72f, 0.5f}}));
            return true;
        case U'\'':
            out.push_back(line({{0.52f, -0.44f}, {0.46f, -0.18f}}));
            return true;
        default:
            return false;
    }
}

StrokeProgram cipher_stroke_program(int glyph_id) {
    require(glyph_id >= 0, "cipher glyph: negative id");
    Rng rng(derive_seed(kCipherGlyphSeed, static_cast<uint64_t>(glyph_id)));
    StrokeProgram program;
    const int n_strokes = static_cast<int>(rng.range(2, 4));
    for (int s = 0; s < n_strokes; ++s) {
        const int family = static_cast<int>(rng.index(7));
        const float cx = static_cast<float>(rng.uniform(0.25, 0.70));
        const float cy = static_cast<float>(rng.uniform(0.25, 0.75));
        switch (family) {
            case 0: {  // vertical bar, may extend to ascender/descender
                const float top = static_cast<float>(rng.uniform(-0.5, 0.25));
                const float bot = static_cast<float>(rng.uniform(0.75, 1.45));
                program.push_back({{cx, top}, {cx, bot}});
                break;
            }
            case 1: {  // horizontal bar
                const float x0 = static_cast<float>(rng.uniform(0.08, 0.3));
                const float x1 = static_cast<float>(rng.uniform(0.6, 0.9));
                program.push_back({{x0, cy}, {x1, cy}});
                break;
            }
            case 2: {  // diagonal
                const bool down = rng.uniform() < 0.5;
                const float x0 = static_cast<float>(rng.uniform(0.08, 0.3));
                const float x1 = static_cast<float>(rng.uniform(0.6, 0.9));
                program.push_back(down ? std::vector<Vec2>{{x0, 0.08f}, {x1, 1.0f}}
                                       : std::vector<Vec2>{{x0, 1.0f}, {x1, 0.08f}});
                break;
            }
            case 3: {  // bowl / arc segment
                const float r = static_cast<float>(rng.uniform(0.18, 0.38));
                const float a0 = static_cast<float>(rng.uniform(0.0, 360.0));
                const float sweep = static_cast<float>(rng.uniform(160.0, 360.0));
                program.push_back(arc(cx, cy, r, r * static_cast<float>(rng.uniform(0.8, 1.3)),
                                      a0, a0 + sweep));
                break;
            }
            case 4: {  // hook: short stem with a curved tail
                const float x = cx;
                const float y1 = static_cast<float>(rng.uniform(0.9, 1.4));
                program.push_back({{x, 0.15f},
                                   {x, y1},
                                   {x - 0.2f, y1 + 0.15f},
                                   {x - 0.38f, y1 + 0.05f}});
                break;
            }
            case 5: {  // dot
                program.push_back({{cx, cy - 0.03f}, {cx, cy + 0.03f}});
                break;
            }
            default: {  // zigzag
                const float y0 = static_cast<float>(rng.uniform(0.1, 0.4));
                program.push_back({{0.15f, y0},
                                   {0.45f, y0 + 0.45f},
                                   {0.6f, y0 + 0.1f},
                                   {0.85f, y0 + 0.55f}});
                break;
            }
        }
    }
    return program;
}

Image rasterize_glyph(const StrokeProgram& program, const RenderStyle& style,
                      int line_height, int advance, Rng& rng) {
    require(line_height >= 8, "rasterize: line height too small");
    require(advance >= 3, "rasterize: advance too small");
    style.validate();

    const float baseline = 0.75f * static_cast<float>(line_height);
    const float xheight_top = 0.34f * static_cast<float>(line_height);
    const float vscale = baseline - xheight_top;
    const float x0 = 0.10f * static_cast<float>(advance);
    const float xscale = 0.80f * static_cast<float>(advance);
    const float slant_tan = std::tan(style.slant);
    const float wobble_period = 0.75f * static_cast<float>(line_height);

    // One wobble phase per glyph; drawn first so stroke jitter draws stay
    // aligned across styles with and without wobble.
    const float phase = static_cast<float>(rng.uniform(0.0, 2.0 * kPi));

    Image ink(line_height, advance, 0.0f);
    const float radius = 0.5f * style.stroke_width;

    auto draw_segment = [&](Vec2 a, Vec2 b) {
        const float pad = radius + 1.0f;
        const int r_lo = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - pad)));
        const int r_hi = std::min(line_height - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + pad)));
        const int c_lo = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - pad)));
        const int c_hi = std::min(advance - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + pad)));
        const float dx = b.x - a.x;
        const float dy = b.y - a.y;
        const float len2 = dx * dx + dy * dy;
        for (int r = r_lo; r <= r_hi; ++r) {
            for (int c = c_lo; c <= c_hi; ++c) {
                const float px = static_cast<float>(c) + 0.5f;
                const float py = static_cast<float>(r) + 0.5f;
                float t = 0.0f;
                if (len2 > 0.0f) {
                    t = std::clamp(((px - a.x) * dx + (py - a.y) * dy) / len2, 0.0f, 1.0f);
                }
                const float qx = a.x + t * dx;
                const float qy = a.y + t * dy;
                const float dist = std::hypot(px - qx, py - qy);
                const float cov = std::clamp(radius + 0.5f - dist, 0.0f, 1.0f);
                float& cell = ink.at(r, c);
                cell = std::max(cell, cov);
            }
        }
    };

    for (const auto& stroke : program) {
        std::vector<Vec2> pts;
        pts.reserve(stroke.size());
        for (const Vec2& p : stroke) {
            // Jitter draws always happen; amplitude 0 leaves geometry exact.
            const float jx = static_cast<float>(rng.normal()) * style.jitter_amplitude;
            const float jy = static_cast<float>(rng.normal()) * style.jitter_amplitude;
            float px = x0 + p.x * xscale + jx;
            float py = xheight_top + p.y * vscale + jy;
            px += slant_tan * (baseline - py);
            py += style.baseline_wobble *
                  std::sin(2.0f * kPi * px / wobble_period + phase);
            pts.push_back({px, py});
        }
        if (pts.size() == 1) {
            draw_segment(pts[0], pts[0]);
        }
        for (size_t i = 0; i + 1 < pts.size(); ++i) {
            draw_segment(pts[i], pts[i + 1]);
        }
    }

    Image out(line_height, advance, 1.0f);
    for (size_t i = 0; i < out.px.size(); ++i) {
        out.px[i] = 1.0f - style.ink_level * ink.px[i];
    }
    return out;
}

Image render_glyph(int glyph_id, int glyph_inventory, const RenderStyle& style,
                   int line_height, int advance, Rng& rng) {
    require(glyph_id >= 0 && glyph_id < glyph_inventory,
            "render_glyph: unknown glyph id " + std::to_string(glyph_id));
    return rasterize_glyph(cipher_stroke_program(glyph_id), style, line_height, advance, rng);
}

}  // namespace cipherpix
