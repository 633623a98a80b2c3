// SPDX-License-Identifier: Apache-2.0
#include "cipherpix/style.hpp"

#include "cipherpix/rng.hpp"

namespace cipherpix {

RenderStyle writer_style(uint64_t style_seed, int writer_id) {
    Rng rng(derive_seed(style_seed, static_cast<uint64_t>(writer_id), 0x7374796cull));
    RenderStyle style;
    style.stroke_width = static_cast<float>(rng.uniform(0.9, 2.2));
    style.slant = static_cast<float>(rng.uniform(-0.25, 0.25));
    style.jitter_amplitude = static_cast<float>(rng.uniform(0.15, 0.8));
    style.baseline_wobble = static_cast<float>(rng.uniform(0.0, 1.1));
    style.ink_level = static_cast<float>(rng.uniform(0.55, 0.95));
    style.writer_id = writer_id;
    style.validate();
    return style;
}

}  // namespace cipherpix
