// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "cipherpix/common.hpp"

namespace cipherpix {

// Per-writer rendering style. Bounds are part of the contract; validate()
// rejects values outside them.
struct RenderStyle {
    float stroke_width = 1.5f;      // px, [0.5, 4.0]
    float slant = 0.0f;             // radians, [-0.35, 0.35]
    float jitter_amplitude = 0.5f;  // px, [0, 2]
    float baseline_wobble = 0.5f;   // px, [0, 3]
    float ink_level = 0.85f;        // [0.3, 1.0]
    int writer_id = 0;

    void validate() const {
        require(stroke_width >= 0.5f && stroke_width <= 4.0f, "style: stroke_width out of [0.5, 4.0]");
        require(slant >= -0.35f && slant <= 0.35f, "style: slant out of [-0.35, 0.35]");
        require(jitter_amplitude >= 0.0f && jitter_amplitude <= 2.0f, "style: jitter out of [0, 2]");
        require(baseline_wobble >= 0.0f && baseline_wobble <= 3.0f, "style: wobble out of [0, 3]");
        require(ink_level >= 0.3f && ink_level <= 1.0f, "style: ink_level out of [0.3, 1.0]");
    }
};

// Deterministic style cluster for a writer. Same (seed, writer_id) always
// yields the same style.
RenderStyle writer_style(uint64_t style_seed, int writer_id);

}  // namespace cipherpix
