// SPDX-License-Identifier: Apache-2.0
#include "cipherpix/viz.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "cipherpix/common.hpp"
#include "cipherpix/png_io.hpp"
#include "cipherpix/text.hpp"

namespace cipherpix {

namespace {

struct Rgb {
    float r, g, b;
};

// Golden-angle hue palette: distinct, deterministic token colors.
Rgb token_color(int token_index) {
    const double hue = std::fmod(0.618033988749895 * token_index, 1.0);
    const double s = 0.55;
    const double v = 1.0;
    const double h6 = hue * 6.0;
    const int sector = static_cast<int>(h6) % 6;
    const double f = h6 - std::floor(h6);
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    switch (sector) {
        case 0: return {static_cast<float>(v), static_cast<float>(t), static_cast<float>(p)};
        case 1: return {static_cast<float>(q), static_cast<float>(v), static_cast<float>(p)};
        case 2: return {static_cast<float>(p), static_cast<float>(v), static_cast<float>(t)};
        case 3: return {static_cast<float>(p), static_cast<float>(q), static_cast<float>(v)};
        case 4: return {static_cast<float>(t), static_cast<float>(p), static_cast<float>(v)};
        default: return {static_cast<float>(v), static_cast<float>(p), static_cast<float>(q)};
    }
}

constexpr Rgb kHeatColor = {1.0f, 0.125f, 0.125f};

void blend_pixel(std::vector<uint8_t>& rgb, size_t idx, float gray, const Rgb& color,
                 float weight) {
    const float r = gray * (1.0f - weight) + color.r * weight;
    const float g = gray * (1.0f - weight) + color.g * weight;
    const float b = gray * (1.0f - weight) + color.b * weight;
    rgb[idx + 0] = static_cast<uint8_t>(std::lround(std::clamp(r, 0.0f, 1.0f) * 255.0f));
    rgb[idx + 1] = static_cast<uint8_t>(std::lround(std::clamp(g, 0.0f, 1.0f) * 255.0f));
    rgb[idx + 2] = static_cast<uint8_t>(std::lround(std::clamp(b, 0.0f, 1.0f) * 255.0f));
}

}  // namespace

std::vector<uint8_t> render_attention_overlay(const Image& line,
                                              const std::vector<float>& attention, int n_tokens,
                                              int n_patches, const OverlaySpec& spec,
                                              const std::string& out_path) {
    require(n_tokens >= 1 && n_patches >= 1, "overlay: empty attention matrix");
    require(attention.size() == static_cast<size_t>(n_tokens) * n_patches,
            "overlay: attention shape mismatch (" + std::to_string(attention.size()) + " != " +
                std::to_string(n_tokens) + "x" + std::to_string(n_patches) + ")");
    require(spec.patch_width >= 1, "overlay: bad patch width");
    require((n_patches - 1) * spec.patch_width < line.width,
            "overlay: patches exceed image width");

    const int width = line.width;
    const int height = line.height;
    auto patch_of = [&](int col) { return std::min(col / spec.patch_width, n_patches - 1); };

    std::vector<uint8_t> rgb;
    int out_height = 0;

    if (spec.mode == OverlayMode::kPerToken) {
        out_height = height * n_tokens;
        rgb.assign(static_cast<size_t>(out_height) * width * 3, 0);
        for (int t = 0; t < n_tokens; ++t) {
            const float* row = attention.data() + static_cast<size_t>(t) * n_patches;
            const float row_max = *std::max_element(row, row + n_patches);
            for (int r = 0; r < height; ++r) {
                for (int c = 0; c < width; ++c) {
                    const float gray = line.at(r, c);
                    const float heat = row_max > 0.0f ? row[patch_of(c)] / row_max : 0.0f;
                    const size_t idx =
                        ((static_cast<size_t>(t) * height + r) * width + c) * 3;
                    blend_pixel(rgb, idx, gray, kHeatColor, spec.alpha * heat);
                }
            }
        }
    } else {
        out_height = height;
        rgb.assign(static_cast<size_t>(height) * width * 3, 0);
        // Per patch: the token attending to it most.
        std::vector<int> argmax_token(static_cast<size_t>(n_patches), 0);
        std::vector<float> strength(static_cast<size_t>(n_patches), 0.0f);
        for (int p = 0; p < n_patches; ++p) {
            float best = -1.0f;
            int best_t = 0;
            for (int t = 0; t < n_tokens; ++t) {
                const float a = attention[static_cast<size_t>(t) * n_patches + p];
                if (a > best) {
                    best = a;
                    best_t = t;
                }
            }
            argmax_token[static_cast<size_t>(p)] = best_t;
            strength[static_cast<size_t>(p)] = best;
        }
        const float max_strength = *std::max_element(strength.begin(), strength.end());
        for (int r = 0; r < height; ++r) {
            for (int c = 0; c < width; ++c) {
                const int p = patch_of(c);
                const float gray = line.at(r, c);
                const float heat =
                    max_strength > 0.0f ? strength[static_cast<size_t>(p)] / max_strength : 0.0f;
                const size_t idx = (static_cast<size_t>(r) * width + c) * 3;
                blend_pixel(rgb, idx, gray, token_color(argmax_token[static_cast<size_t>(p)]),
                            spec.alpha * heat);
            }
        }
    }

    if (!out_path.empty()) {
        write_png_rgb8(out_path, out_height, width, rgb);
    }
    return rgb;
}

std::string render_diff(const std::string& reference, const std::string& hypothesis,
                        const std::string& out_path) {
    const std::vector<EditOp> ops = edit_alignment_chars(reference, hypothesis);
    const std::u32string ref = utf8_decode(reference);
    const std::u32string hyp = utf8_decode(hypothesis);

    std::u32string ref_row;
    std::u32string hyp_row;
    std::string marks;
    size_t i = 0;
    size_t j = 0;
    for (EditOp op : ops) {
        switch (op) {
            case EditOp::kMatch:
                ref_row.push_back(ref[i++]);
                hyp_row.push_back(hyp[j++]);
                marks.push_back('=');
                break;
            case EditOp::kSub:
                ref_row.push_back(ref[i++]);
                hyp_row.push_back(hyp[j++]);
                marks.push_back('S');
                break;
            case EditOp::kDel:
                ref_row.push_back(ref[i++]);
                hyp_row.push_back(U'-');
                marks.push_back('D');
                break;
            case EditOp::kIns:
                ref_row.push_back(U'-');
                hyp_row.push_back(hyp[j++]);
                marks.push_back('I');
                break;
        }
    }

    const EditCounts counts = edit_counts_chars(reference, hypothesis);
    char summary[160];
    if (counts.ref_len > 0) {
        std::snprintf(summary, sizeof(summary), "CER: %.4f (S=%lld D=%lld I=%lld, N=%lld)",
                      static_cast<double>(counts.total()) / static_cast<double>(counts.ref_len),
                      static_cast<long long>(counts.substitutions),
                      static_cast<long long>(counts.deletions),
                      static_cast<long long>(counts.insertions),
                      static_cast<long long>(counts.ref_len));
    } else {
        std::snprintf(summary, sizeof(summary),
                      "CER: undefined (empty reference; S=%lld D=%lld I=%lld)",
                      static_cast<long long>(counts.substitutions),
                      static_cast<long long>(counts.deletions),
                      static_cast<long long>(counts.insertions));
    }

    std::string out;
    out += "REF: " + utf8_encode(ref_row) + "\n";
    out += "HYP: " + utf8_encode(hyp_row) + "\n";
    out += "OPS: " + marks + "\n";
    out += summary;
    out += "\n";

    if (!out_path.empty()) {
        const std::filesystem::path p(out_path);
        if (p.has_parent_path()) {
            std::filesystem::create_directories(p.parent_path());
        }
        std::ofstream f(out_path, std::ios::trunc);
        if (!f) {
            throw IoError("diff: cannot write " + out_path);
        }
        f << out;
    }
    return out;
}

}  // namespace cipherpix
