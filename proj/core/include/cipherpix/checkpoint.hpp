// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "cipherpix/model.hpp"
#include "cipherpix/tokenizer.hpp"

namespace cipherpix {

// Versioned binary container: magic + version, a JSON header (model config,
// tokenizer, blob index) and raw little-endian float32 blobs in layout
// order. Round-trips bit-exactly; see docs/checkpoint.md.
void save_checkpoint(const NetF& net, const Tokenizer& tokenizer, const std::string& path);

struct LoadedCheckpoint {
    NetF net;
    Tokenizer tokenizer;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace cipherpix
