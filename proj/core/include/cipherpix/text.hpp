// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace cipherpix {

// Decodes UTF-8 into Unicode scalar values. Invalid bytes decode to U+FFFD.
std::u32string utf8_decode(const std::string& s);

std::string utf8_encode(const std::u32string& s);
std::string utf8_encode(char32_t c);

// Whitespace-delimited word split (the unit used by word-level metrics).
std::vector<std::string> split_words(const std::string& s);

// Lowercases ASCII letters and collapses whitespace runs to single spaces,
// trimming the ends. Used by the optional --normalize scoring mode.
std::string normalize_text(const std::string& s);

}  // namespace cipherpix
