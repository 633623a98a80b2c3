// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "cipherpix/image.hpp"
#include "cipherpix/rng.hpp"
#include "cipherpix/style.hpp"

namespace cipherpix {

struct Vec2 {
    float x;
    float y;
};

// A glyph is a list of polylines in a unit box: x in [0,1] across the
// advance, y in [0,1] from x-height top to baseline. Ascenders reach
// negative y, descenders exceed 1.
using StrokeProgram = std::vector<std::vector<Vec2>>;

// Letterform for identity (non-cipher) rendering. Supports a-z, space,
// and the punctuation set ". , - '". Returns false if unsupported.
bool latin_stroke_program(char32_t c, StrokeProgram& out);

// Procedural cipher glyph. Every glyph id selects a fixed stroke program
// (independent of key or corpus), drawn from the same stroke families as
// the letterforms.
StrokeProgram cipher_stroke_program(int glyph_id);

// Rasterizes a stroke program onto a fresh patch of the given line height
// and advance width. Style perturbations (jitter, wobble) consume rng in a
// fixed order regardless of amplitude. Pixel law: value = 1 - ink_level *
// coverage, coverage in [0,1].
Image rasterize_glyph(const StrokeProgram& program, const RenderStyle& style,
                      int line_height, int advance, Rng& rng);

// Cipher-mode glyph renderer. glyph_id must lie in [0, glyph_inventory).
Image render_glyph(int glyph_id, int glyph_inventory, const RenderStyle& style,
                   int line_height, int advance, Rng& rng);

}  // namespace cipherpix
