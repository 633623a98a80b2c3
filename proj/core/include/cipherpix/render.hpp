// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cipherpix/glyphs.hpp"
#include "cipherpix/image.hpp"
#include "cipherpix/key.hpp"
#include "cipherpix/rng.hpp"
#include "cipherpix/style.hpp"

namespace cipherpix {

enum class SpaceMode {
    kSeparatorGlyph,  // spaces map to their own cipher glyphs
    kOmitted,         // spaces are silently dropped from the rendered line
};

struct LineRenderOptions {
    int line_height = 32;
    int glyph_advance = 10;
    int margin = 6;
    SpaceMode space_mode = SpaceMode::kSeparatorGlyph;
    double noise_sigma = 0.0;  // additive grayscale noise, applied last
};

struct LineRender {
    Image image;
    std::vector<int> glyphs;  // cipher mode only: glyph ids in render order
};

// Renders plaintext as a cipher line: each character is replaced by a
// uniformly chosen homophone of `key`. Unrenderable characters raise an
// error naming the character and its index.
LineRender render_cipher_line(const std::string& text, const CipherKey& key,
                              const RenderStyle& style, const LineRenderOptions& opts,
                              Rng& rng);

// Renders plaintext with Latin letterforms (identity mode, the handwriting
// stand-in for pretraining).
LineRender render_identity_line(const std::string& text, const RenderStyle& style,
                                const LineRenderOptions& opts, Rng& rng);

}  // namespace cipherpix
