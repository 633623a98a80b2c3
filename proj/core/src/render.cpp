// SPDX-License-Identifier: Apache-2.0
#include "cipherpix/render.hpp"

#include <algorithm>

#include "cipherpix/common.hpp"
#include "cipherpix/text.hpp"

namespace cipherpix {

namespace {

// Compose a glyph patch onto the canvas at column offset; darkest ink wins.
void blit_min(Image& canvas, const Image& patch, int col0) {
    for (int r = 0; r < patch.height; ++r) {
        for (int c = 0; c < patch.width; ++c) {
            float& dst = canvas.at(r, col0 + c);
            dst = std::min(dst, patch.at(r, c));
        }
    }
}

void add_noise(Image& img, double sigma, Rng& rng) {
    if (sigma <= 0.0) {
        return;
    }
    for (float& v : img.px) {
        v = std::clamp(v + static_cast<float>(sigma * rng.normal()), 0.0f, 1.0f);
    }
}

struct GlyphPlan {
    StrokeProgram program;
    int glyph_id;  // -1 in identity mode
};

LineRender render_planned(const std::vector<GlyphPlan>& plan, const RenderStyle& style,
                          const LineRenderOptions& opts, Rng& rng) {
    const int width = 2 * opts.margin + opts.glyph_advance * static_cast<int>(plan.size());
    LineRender out;
    out.image = Image(opts.line_height, std::max(width, 2 * opts.margin + 1), 1.0f);
    // Each glyph owns a stream derived from (line draw, index) so a line
    // prefix renders identically regardless of what follows it.
    const uint64_t line_draw = rng.u64();
    int col = opts.margin;
    for (size_t i = 0; i < plan.size(); ++i) {
        Rng glyph_rng(derive_seed(line_draw, i));
        const Image patch =
            rasterize_glyph(plan[i].program, style, opts.line_height, opts.glyph_advance, glyph_rng);
        blit_min(out.image, patch, col);
        col += opts.glyph_advance;
        if (plan[i].glyph_id >= 0) {
            out.glyphs.push_back(plan[i].glyph_id);
        }
    }
    add_noise(out.image, opts.noise_sigma, rng);
    return out;
}

}  // namespace

LineRender render_cipher_line(const std::string& text, const CipherKey& key,
                              const RenderStyle& style, const LineRenderOptions& opts,
                              Rng& rng) {
    const std::u32string chars = utf8_decode(text);
    std::vector<GlyphPlan> plan;
    plan.reserve(chars.size());
    for (size_t i = 0; i < chars.size(); ++i) {
        const char32_t c = chars[i];
        if (c == U' ' && opts.space_mode == SpaceMode::kOmitted) {
            continue;
        }
        const std::vector<int>* homophones = key.homophones(c);
        if (homophones == nullptr) {
            throw InvalidArgument("render: character '" + utf8_encode(c) +
                                  "' at index " + std::to_string(i) + " is not in the key alphabet");
        }
        const int glyph_id = (*homophones)[rng.index(homophones->size())];
        plan.push_back({cipher_stroke_program(glyph_id), glyph_id});
    }
    return render_planned(plan, style, opts, rng);
}

LineRender render_identity_line(const std::string& text, const RenderStyle& style,
                                const LineRenderOptions& opts, Rng& rng) {
    const std::u32string chars = utf8_decode(text);
    std::vector<GlyphPlan> plan;
    plan.reserve(chars.size());
    for (size_t i = 0; i < chars.size(); ++i) {
        StrokeProgram program;
        if (!latin_stroke_program(chars[i], program)) {
            throw InvalidArgument("render: character '" + utf8_encode(chars[i]) +
                                  "' at index " + std::to_string(i) +
                                  " has no Latin letterform");
        }
        plan.push_back({std::move(program), -1});
    }
    return render_planned(plan, style, opts, rng);
}

}  // namespace cipherpix
