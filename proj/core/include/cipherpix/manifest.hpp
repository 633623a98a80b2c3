// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cipherpix {

enum class Stage { kPretrain, kCipher };

std::string stage_name(Stage s);
Stage parse_stage(const std::string& s);

struct ManifestEntry {
    std::string line_id;
    std::string image_path;  // relative to the manifest file
    std::string plaintext;
    std::string split;       // train | val | test
    int writer_id = 0;
};

struct Manifest {
    std::string corpus_id;
    Stage stage = Stage::kPretrain;
    int line_height = 32;
    std::vector<ManifestEntry> entries;
    std::string checksum;                 // hex FNV-1a64 over the entry list
    std::filesystem::path base_dir;       // set on read/write for path resolution

    std::vector<const ManifestEntry*> split_entries(const std::string& split) const;
    std::filesystem::path resolve(const ManifestEntry& e) const { return base_dir / e.image_path; }
};

std::string manifest_checksum(const std::vector<ManifestEntry>& entries);

// JSON Lines: one header object, then one object per entry.
void write_manifest(const Manifest& manifest, const std::string& path);

// Validates checksum, duplicate line ids, and image existence.
// check_images=false skips the existence scan (used by tests that corrupt
// manifests on purpose).
Manifest read_manifest(const std::string& path, bool check_images = true);

struct IngestOptions {
    std::vector<double> split_ratios = {0.8, 0.1, 0.1};
    uint64_t seed = 0;
    std::string split_map_path;  // optional JSON {filename: split}; overrides ratios
    int line_height = 32;
    std::string corpus_id = "external";
    Stage stage = Stage::kCipher;
    int max_chars = 67;  // envelope check bounds (violations flagged, kept)
    int max_words = 14;
};

struct IngestReport {
    Manifest manifest;
    std::vector<std::string> warnings;     // skipped rows with reasons
    int envelope_violations = 0;           // kept but outside the envelope
};

// Builds a manifest from an image directory plus a tab-separated transcript
// ("<image_filename>\t<plaintext>" per line). The manifest is written under
// out_dir with image paths relative to it.
IngestReport ingest_external(const std::string& images_dir, const std::string& transcript_path,
                             const std::string& out_dir, const IngestOptions& opts);

}  // namespace cipherpix
