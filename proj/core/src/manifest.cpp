// SPDX-License-Identifier: Apache-2.0
#include "cipherpix/manifest.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "cipherpix/common.hpp"
#include "cipherpix/png_io.hpp"
#include "cipherpix/rng.hpp"
#include "cipherpix/text.hpp"

namespace fs = std::filesystem;

namespace cipherpix {

namespace {

uint64_t fnv1a64(uint64_t h, const std::string& s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    h ^= 0x1f;  // field separator
    h *= 0x100000001b3ull;
    return h;
}

}  // namespace

std::string stage_name(Stage s) { return s == Stage::kPretrain ? "pretrain" : "cipher"; }

Stage parse_stage(const std::string& s) {
    if (s == "pretrain") {
        return Stage::kPretrain;
    }
    if (s == "cipher") {
        return Stage::kCipher;
    }
    throw InvalidArgument("unknown stage '" + s + "' (expected pretrain|cipher)");
}

std::vector<const ManifestEntry*> Manifest::split_entries(const std::string& split) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries) {
        if (e.split == split) {
            out.push_back(&e);
        }
    }
    return out;
}

std::string manifest_checksum(const std::vector<ManifestEntry>& entries) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& e : entries) {
        h = fnv1a64(h, e.line_id);
        h = fnv1a64(h, e.image_path);
        h = fnv1a64(h, e.plaintext);
        h = fnv1a64(h, e.split);
        h = fnv1a64(h, std::to_string(e.writer_id));
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_manifest(const Manifest& manifest, const std::string& path) {
    require(!manifest.entries.empty(), "manifest: refusing to write empty entry list");
    const fs::path p(path);
    if (p.has_parent_path()) {
        fs::create_directories(p.parent_path());
    }
    std::ofstream f(path, std::ios::trunc);
    if (!f) {
        throw IoError("manifest: cannot write " + path);
    }
    nlohmann::json header;
    header["type"] = "cipherpix_manifest";
    header["version"] = 1;
    header["corpus_id"] = manifest.corpus_id;
    header["stage"] = stage_name(manifest.stage);
    header["line_height"] = manifest.line_height;
    header["n_entries"] = manifest.entries.size();
    header["checksum"] = manifest_checksum(manifest.entries);
    f << header.dump() << "\n";
    for (const auto& e : manifest.entries) {
        nlohmann::json j;
        j["line_id"] = e.line_id;
        j["image_path"] = e.image_path;
        j["plaintext"] = e.plaintext;
        j["split"] = e.split;
        j["writer_id"] = e.writer_id;
        f << j.dump() << "\n";
    }
    if (!f) {
        throw IoError("manifest: write failed for " + path);
    }
}

Manifest read_manifest(const std::string& path, bool check_images) {
    std::ifstream f(path);
    if (!f) {
        throw IoError("manifest: cannot open " + path);
    }
    std::string line;
    if (!std::getline(f, line)) {
        throw CorruptManifest("manifest: empty file: " + path);
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptManifest("manifest: bad header JSON: " + std::string(e.what()));
    }
    if (header.value("type", "") != "cipherpix_manifest") {
        throw CorruptManifest("manifest: missing type marker in " + path);
    }

    Manifest m;
    m.corpus_id = header.at("corpus_id").get<std::string>();
    m.stage = parse_stage(header.at("stage").get<std::string>());
    m.line_height = header.at("line_height").get<int>();
    m.checksum = header.at("checksum").get<std::string>();
    m.base_dir = fs::absolute(fs::path(path)).parent_path();

    std::set<std::string> ids;
    while (std::getline(f, line)) {
        if (line.empty()) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw CorruptManifest("manifest: bad entry JSON: " + std::string(e.what()));
        }
        ManifestEntry e;
        e.line_id = j.at("line_id").get<std::string>();
        e.image_path = j.at("image_path").get<std::string>();
        e.plaintext = j.at("plaintext").get<std::string>();
        e.split = j.at("split").get<std::string>();
        e.writer_id = j.at("writer_id").get<int>();
        if (!ids.insert(e.line_id).second) {
            throw CorruptManifest("manifest: duplicate line_id '" + e.line_id + "'");
        }
        if (e.split != "train" && e.split != "val" && e.split != "test") {
            throw CorruptManifest("manifest: unknown split '" + e.split + "'");
        }
        m.entries.push_back(std::move(e));
    }
    if (m.entries.size() != header.at("n_entries").get<size_t>()) {
        throw CorruptManifest("manifest: entry count does not match header");
    }
    if (manifest_checksum(m.entries) != m.checksum) {
        throw CorruptManifest("manifest: checksum mismatch (file edited or truncated?): " + path);
    }
    if (check_images) {
        std::string missing;
        int n_missing = 0;
        for (const auto& e : m.entries) {
            if (!fs::exists(m.resolve(e))) {
                ++n_missing;
                if (n_missing <= 8) {
                    missing += "\n  " + e.image_path;
                }
            }
        }
        if (n_missing > 0) {
            throw DanglingPaths("manifest: " + std::to_string(n_missing) +
                                " image file(s) missing, e.g.:" + missing);
        }
    }
    return m;
}

IngestReport ingest_external(const std::string& images_dir, const std::string& transcript_path,
                             const std::string& out_dir, const IngestOptions& opts) {
    std::ifstream f(transcript_path);
    if (!f) {
        throw IoError("ingest: cannot open transcript " + transcript_path);
    }
    std::vector<std::pair<std::string, std::string>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto tab = line.find('\t');
        require(tab != std::string::npos, "ingest: transcript line without tab: '" + line + "'");
        rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    require(!rows.empty(), "ingest: empty transcript " + transcript_path);

    // Resolve split assignment up front.
    std::map<std::string, std::string> split_map;
    if (!opts.split_map_path.empty()) {
        std::ifstream sf(opts.split_map_path);
        if (!sf) {
            throw IoError("ingest: cannot open split map " + opts.split_map_path);
        }
        nlohmann::json j;
        sf >> j;
        for (const auto& [k, v] : j.items()) {
            split_map[k] = v.get<std::string>();
        }
    } else {
        require(opts.split_ratios.size() == 3, "ingest: split_ratios must have 3 entries");
        double sum = 0.0;
        for (double r : opts.split_ratios) {
            sum += r;
        }
        require(std::abs(sum - 1.0) <= 1e-9, "ingest: split ratios must sum to 1");
        std::vector<size_t> order(rows.size());
        for (size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        Rng rng(derive_seed(opts.seed, 0x696e67657374ull));
        rng.shuffle(order);
        const size_t n = rows.size();
        size_t n_train = static_cast<size_t>(std::floor(opts.split_ratios[0] * n + 0.5));
        size_t n_val = static_cast<size_t>(std::floor(opts.split_ratios[1] * n + 0.5));
        n_train = std::min(n_train, n);
        n_val = std::min(n_val, n - n_train);
        for (size_t i = 0; i < n; ++i) {
            const char* split = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
            split_map[rows[order[i]].first] = split;
        }
    }

    IngestReport report;
    Manifest& m = report.manifest;
    m.corpus_id = opts.corpus_id;
    m.stage = opts.stage;
    m.line_height = opts.line_height;
    const fs::path out(out_dir);
    fs::create_directories(out);
    m.base_dir = fs::absolute(out);

    std::set<std::string> ids;
    for (const auto& [filename, plaintext] : rows) {
        const fs::path img = fs::path(images_dir) / filename;
        if (!fs::exists(img)) {
            report.warnings.push_back("missing image, skipped: " + filename);
            continue;
        }
        try {
            (void)read_png_gray(img.string());
        } catch (const std::exception& e) {
            report.warnings.push_back("unreadable image, skipped: " + filename + " (" + e.what() + ")");
            continue;
        }
        ManifestEntry e;
        e.line_id = fs::path(filename).stem().string();
        if (!ids.insert(e.line_id).second) {
            report.warnings.push_back("duplicate line id, skipped: " + filename);
            continue;
        }
        e.image_path = fs::relative(fs::absolute(img), m.base_dir).generic_string();
        e.plaintext = plaintext;
        auto it = split_map.find(filename);
        e.split = it != split_map.end() ? it->second : "train";
        e.writer_id = 0;
        const auto n_chars = utf8_decode(plaintext).size();
        const auto n_words = split_words(plaintext).size();
        if (n_chars < 1 || n_chars > static_cast<size_t>(opts.max_chars) || n_words < 1 ||
            n_words > static_cast<size_t>(opts.max_words)) {
            ++report.envelope_violations;
        }
        m.entries.push_back(std::move(e));
    }
    require(!m.entries.empty(), "ingest: no usable rows in " + transcript_path);
    m.checksum = manifest_checksum(m.entries);
    write_manifest(m, (out / "manifest.jsonl").string());
    return report;
}

}  // namespace cipherpix
