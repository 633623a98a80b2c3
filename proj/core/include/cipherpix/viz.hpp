// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "cipherpix/image.hpp"
#include "cipherpix/metrics.hpp"

namespace cipherpix {

enum class OverlayMode { kPerToken, kCombined };

// Alpha-blends patch-resolution attention over the line image.
//   per-token: one image row band per token, output (height*tokens) x width.
//   combined:  every patch tinted by its argmax token, output height x width.
// Heat is row-normalized by the row maximum and upsampled across each
// patch's pixel columns (nearest patch). Colors follow the documented map
// in docs/metrics.md.
struct OverlaySpec {
    OverlayMode mode = OverlayMode::kPerToken;
    int patch_width = 8;
    float alpha = 0.6f;
};

// attention is row-major (tokens x patches). Returns RGB bytes and writes
// a PNG when out_path is non-empty.
std::vector<uint8_t> render_attention_overlay(const Image& line, const std::vector<float>& attention,
                                              int n_tokens, int n_patches,
                                              const OverlaySpec& spec,
                                              const std::string& out_path);

// Aligned diff with ASCII markers from the metrics backtrace:
// '=' match, 'S' substitution, 'D' deletion, 'I' insertion; '-' fills gaps.
// Summary line carries the per-line CER. Writes out_path when non-empty.
std::string render_diff(const std::string& reference, const std::string& hypothesis,
                        const std::string& out_path);

}  // namespace cipherpix
