// SPDX-License-Identifier: Apache-2.0
#include "cipherpix/image.hpp"

#include <algorithm>
#include <cmath>

#include "cipherpix/common.hpp"

namespace cipherpix {

std::vector<uint8_t> to_u8(const Image& img) {
    std::vector<uint8_t> out(img.px.size());
    for (size_t i = 0; i < img.px.size(); ++i) {
        const float v = std::clamp(img.px[i], 0.0f, 1.0f);
        out[i] = static_cast<uint8_t>(std::lround(v * 255.0f));
    }
    return out;
}

Image from_u8(const std::vector<uint8_t>& data, int height, int width) {
    require(static_cast<size_t>(height) * width == data.size(), "from_u8: size mismatch");
    Image img(height, width);
    for (size_t i = 0; i < data.size(); ++i) {
        img.px[i] = static_cast<float>(data[i]) / 255.0f;
    }
    return img;
}

Image resize_to_height(const Image& img, int target_height) {
    require(img.height > 0 && img.width > 0, "resize: empty image");
    require(target_height > 0, "resize: bad target height");
    if (img.height == target_height) {
        return img;
    }
    const double scale = static_cast<double>(target_height) / img.height;
    const int target_width = std::max(1, static_cast<int>(std::lround(img.width * scale)));
    Image out(target_height, target_width);
    for (int r = 0; r < target_height; ++r) {
        const double sy = (r + 0.5) / scale - 0.5;
        const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, img.height - 1);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double fy = std::clamp(sy - y0, 0.0, 1.0);
        for (int c = 0; c < target_width; ++c) {
            const double sx = (c + 0.5) / scale - 0.5;
            const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, img.width - 1);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double fx = std::clamp(sx - x0, 0.0, 1.0);
            const double top = img.at(y0, x0) * (1.0 - fx) + img.at(y0, x1) * fx;
            const double bot = img.at(y1, x0) * (1.0 - fx) + img.at(y1, x1) * fx;
            out.at(r, c) = static_cast<float>(top * (1.0 - fy) + bot * fy);
        }
    }
    return out;
}

float max_abs_diff(const Image& a, const Image& b) {
    require(a.height == b.height && a.width == b.width, "max_abs_diff: shape mismatch");
    float m = 0.0f;
    for (size_t i = 0; i < a.px.size(); ++i) {
        m = std::max(m, std::abs(a.px[i] - b.px[i]));
    }
    return m;
}

}  // namespace cipherpix
