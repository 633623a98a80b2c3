// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

namespace cipherpix {

// Grayscale line image, row-major, values in [0, 1]. 1.0 is background
// (white paper), lower values are ink.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> px;

    Image() = default;
    Image(int h, int w, float fill = 1.0f)
        : height(h), width(w), px(static_cast<size_t>(h) * static_cast<size_t>(w), fill) {}

    float& at(int r, int c) { return px[static_cast<size_t>(r) * width + c]; }
    float at(int r, int c) const { return px[static_cast<size_t>(r) * width + c]; }
};

std::vector<uint8_t> to_u8(const Image& img);
Image from_u8(const std::vector<uint8_t>& data, int height, int width);

// Scales to a target height, preserving aspect ratio (bilinear).
Image resize_to_height(const Image& img, int target_height);

// Max |a - b| over pixels; images must have equal shape.
float max_abs_diff(const Image& a, const Image& b);

}  // namespace cipherpix
