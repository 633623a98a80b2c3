// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cipherpix/image.hpp"

namespace cipherpix {

// 8-bit grayscale PNG, filter 0, fixed zlib level: byte-deterministic output.
void write_png_gray8(const std::string& path, const Image& img);

// 8-bit RGB PNG (attention overlays). rgb is row-major, 3 bytes per pixel.
void write_png_rgb8(const std::string& path, int height, int width,
                    const std::vector<uint8_t>& rgb);

// Reads an 8-bit non-interlaced PNG (gray, gray+alpha, RGB, RGBA) and
// converts to grayscale in [0, 1]. Throws IoError on anything else.
Image read_png_gray(const std::string& path);

}  // namespace cipherpix
