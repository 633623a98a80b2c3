// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace cipherpix {

// User-facing input problems: bad flags, bad config values, malformed files.
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Manifest whose checksum or structural invariants fail on load.
struct CorruptManifest : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Manifest entries whose image files are missing on disk.
struct DanglingPaths : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when training produces a non-finite loss or gradient.
struct TrainingDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) {
        throw InvalidArgument(msg);
    }
}

}  // namespace cipherpix
