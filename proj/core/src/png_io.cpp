// SPDX-License-Identifier: Apache-2.0
#include "cipherpix/png_io.hpp"

#include <zlib.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "cipherpix/common.hpp"

namespace cipherpix {

namespace {

constexpr uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

uint32_t get_u32(const uint8_t* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

void append_chunk(std::vector<uint8_t>& out, const char type[4],
                  const std::vector<uint8_t>& data) {
    put_u32(out, static_cast<uint32_t>(data.size()));
    const size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const uLong crc = crc32(0, out.data() + start, static_cast<uInt>(out.size() - start));
    put_u32(out, static_cast<uint32_t>(crc));
}

std::vector<uint8_t> zlib_compress(const std::vector<uint8_t>& raw) {
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<uint8_t> out(bound);
    const int rc = compress2(out.data(), &bound, raw.data(),
                             static_cast<uLong>(raw.size()), 6);
    if (rc != Z_OK) {
        throw IoError("png: zlib compression failed");
    }
    out.resize(bound);
    return out;
}

std::vector<uint8_t> zlib_decompress(const uint8_t* data, size_t size, size_t expected) {
    std::vector<uint8_t> out(expected);
    uLongf out_len = static_cast<uLongf>(expected);
    const int rc = uncompress(out.data(), &out_len, data, static_cast<uLong>(size));
    if (rc != Z_OK || out_len != expected) {
        throw IoError("png: zlib decompression failed");
    }
    return out;
}

void write_png(const std::string& path, int height, int width, int channels,
               const std::vector<uint8_t>& pixels) {
    require(height > 0 && width > 0, "png: empty image");
    require(pixels.size() == static_cast<size_t>(height) * width * channels,
            "png: pixel buffer size mismatch");

    std::vector<uint8_t> ihdr;
    put_u32(ihdr, static_cast<uint32_t>(width));
    put_u32(ihdr, static_cast<uint32_t>(height));
    ihdr.push_back(8);                                        // bit depth
    ihdr.push_back(channels == 1 ? 0 : 2);                    // gray / truecolor
    ihdr.push_back(0);                                        // compression
    ihdr.push_back(0);                                        // filter method
    ihdr.push_back(0);                                        // no interlace

    const size_t stride = static_cast<size_t>(width) * channels;
    std::vector<uint8_t> raw;
    raw.reserve((stride + 1) * height);
    for (int r = 0; r < height; ++r) {
        raw.push_back(0);  // filter type 0 per scanline
        raw.insert(raw.end(), pixels.begin() + r * stride, pixels.begin() + (r + 1) * stride);
    }

    std::vector<uint8_t> file;
    file.insert(file.end(), kPngSig, kPngSig + 8);
    append_chunk(file, "IHDR", ihdr);
    append_chunk(file, "IDAT", zlib_compress(raw));
    append_chunk(file, "IEND", {});

    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw IoError("png: cannot open for writing: " + path);
    }
    f.write(reinterpret_cast<const char*>(file.data()), static_cast<std::streamsize>(file.size()));
    if (!f) {
        throw IoError("png: write failed: " + path);
    }
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a);
    const int pb = std::abs(p - b);
    const int pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) {
        return a;
    }
    return pb <= pc ? b : c;
}

}  // namespace

void write_png_gray8(const std::string& path, const Image& img) {
    write_png(path, img.height, img.width, 1, to_u8(img));
}

void write_png_rgb8(const std::string& path, int height, int width,
                    const std::vector<uint8_t>& rgb) {
    write_png(path, height, width, 3, rgb);
}

Image read_png_gray(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("png: cannot open: " + path);
    }
    std::vector<uint8_t> file((std::istreambuf_iterator<char>(f)),
                              std::istreambuf_iterator<char>());
    if (file.size() < 8 || std::memcmp(file.data(), kPngSig, 8) != 0) {
        throw IoError("png: not a PNG file: " + path);
    }

    int width = 0;
    int height = 0;
    int bit_depth = 0;
    int color_type = 0;
    int interlace = 0;
    std::vector<uint8_t> idat;

    size_t pos = 8;
    while (pos + 8 <= file.size()) {
        const uint32_t len = get_u32(&file[pos]);
        if (pos + 12 + len > file.size()) {
            throw IoError("png: truncated chunk: " + path);
        }
        const char* type = reinterpret_cast<const char*>(&file[pos + 4]);
        const uint8_t* data = &file[pos + 8];
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) {
                throw IoError("png: bad IHDR: " + path);
            }
            width = static_cast<int>(get_u32(data));
            height = static_cast<int>(get_u32(data + 4));
            bit_depth = data[8];
            color_type = data[9];
            interlace = data[12];
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }

    if (width <= 0 || height <= 0 || idat.empty()) {
        throw IoError("png: missing image data: " + path);
    }
    if (bit_depth != 8 || interlace != 0) {
        throw IoError("png: unsupported encoding (need 8-bit non-interlaced): " + path);
    }
    int channels = 0;
    switch (color_type) {
        case 0: channels = 1; break;  // gray
        case 2: channels = 3; break;  // rgb
        case 4: channels = 2; break;  // gray+alpha
        case 6: channels = 4; break;  // rgba
        default:
            throw IoError("png: unsupported color type: " + path);
    }

    const size_t stride = static_cast<size_t>(width) * channels;
    const size_t expected = (stride + 1) * height;
    std::vector<uint8_t> raw = zlib_decompress(idat.data(), idat.size(), expected);

    // Undo per-scanline filters in place.
    std::vector<uint8_t> prev(stride, 0);
    Image img(height, width);
    std::vector<uint8_t> cur(stride);
    for (int r = 0; r < height; ++r) {
        const uint8_t filter = raw[r * (stride + 1)];
        const uint8_t* src = &raw[r * (stride + 1) + 1];
        for (size_t i = 0; i < stride; ++i) {
            const int a = i >= static_cast<size_t>(channels) ? cur[i - channels] : 0;
            const int b = prev[i];
            const int c = i >= static_cast<size_t>(channels) ? prev[i - channels] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default:
                    throw IoError("png: bad filter byte: " + path);
            }
            cur[i] = static_cast<uint8_t>(v & 0xFF);
        }
        for (int x = 0; x < width; ++x) {
            const uint8_t* p = &cur[static_cast<size_t>(x) * channels];
            float gray = 0.0f;
            if (channels <= 2) {
                gray = p[0] / 255.0f;
            } else {
                gray = (0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2]) / 255.0f;
            }
            img.at(r, x) = gray;
        }
        prev = cur;
    }
    return img;
}

}  // namespace cipherpix
