// SPDX-License-Identifier: Apache-2.0
#include "cipherpix/checkpoint.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "cipherpix/common.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are little-endian float32");

namespace cipherpix {

namespace {

constexpr char kMagic[8] = {'C', 'P', 'I', 'X', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

}  // namespace

void save_checkpoint(const NetF& net, const Tokenizer& tokenizer, const std::string& path) {
    nlohmann::json header;
    header["config"] = net.config().to_json();
    header["tokenizer"] = tokenizer.to_json();
    nlohmann::json blobs = nlohmann::json::array();
    for (const auto& spec : net.layout().specs) {
        blobs.push_back({{"name", spec.name},
                         {"shape", spec.shape},
                         {"offset", spec.offset * sizeof(float)},
                         {"nbytes", spec.size * sizeof(float)}});
    }
    header["blobs"] = std::move(blobs);
    const std::string header_text = header.dump();

    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw IoError("checkpoint: cannot write " + path);
    }
    f.write(kMagic, 8);
    const uint32_t version = kVersion;
    f.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const uint64_t header_len = header_text.size();
    f.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    f.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    f.write(reinterpret_cast<const char*>(net.params().data()),
            static_cast<std::streamsize>(net.params().size() * sizeof(float)));
    if (!f) {
        throw IoError("checkpoint: write failed for " + path);
    }
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("checkpoint: cannot open " + path);
    }
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0) {
        throw IoError("checkpoint: bad magic in " + path);
    }
    uint32_t version = 0;
    f.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!f || version != kVersion) {
        throw IoError("checkpoint: unsupported version " + std::to_string(version) + " in " +
                      path);
    }
    uint64_t header_len = 0;
    f.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    if (!f || header_len == 0 || header_len > (1ull << 24)) {
        throw IoError("checkpoint: bad header length in " + path);
    }
    std::string header_text(header_len, '\0');
    f.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!f) {
        throw IoError("checkpoint: truncated header in " + path);
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("checkpoint: bad header JSON: " + std::string(e.what()));
    }

    const ModelConfig config = ModelConfig::from_json(header.at("config"));
    LoadedCheckpoint out{NetF(config), Tokenizer::from_json(header.at("tokenizer"))};
    require(out.tokenizer.vocab_size() == config.vocab_size,
            "checkpoint: tokenizer and config vocab size disagree");

    // Validate the blob index against the reconstructed layout.
    const auto& blobs = header.at("blobs");
    const auto& specs = out.net.layout().specs;
    require(blobs.size() == specs.size(), "checkpoint: blob count mismatch");
    for (size_t i = 0; i < specs.size(); ++i) {
        require(blobs[i].at("name").get<std::string>() == specs[i].name,
                "checkpoint: blob order mismatch at '" + specs[i].name + "'");
        require(blobs[i].at("nbytes").get<size_t>() == specs[i].size * sizeof(float),
                "checkpoint: blob size mismatch at '" + specs[i].name + "'");
    }

    f.read(reinterpret_cast<char*>(out.net.params().data()),
           static_cast<std::streamsize>(out.net.params().size() * sizeof(float)));
    if (!f || f.gcount() !=
                  static_cast<std::streamsize>(out.net.params().size() * sizeof(float))) {
        throw IoError("checkpoint: truncated weight data in " + path);
    }
    return out;
}

}  // namespace cipherpix
