// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <initializer_list>
#include <string>

#include "cipherpix/corpus.hpp"
#include "cipherpix/model.hpp"
#include "cipherpix/trainer.hpp"

namespace cipherpix {

// Reads a JSON (.json) or TOML (.toml) config into a JSON tree. The TOML
// reader covers the flat-table subset used by the shipped configs:
// [dotted.sections], strings, integers, floats, booleans, single-line
// arrays, and # comments.
nlohmann::json load_config_file(const std::string& path);

nlohmann::json parse_toml(const std::string& text, const std::string& origin = "<toml>");

// Applies one --set override "a.b.c=value"; the value parses as JSON when
// possible and falls back to a string.
void apply_override(nlohmann::json& config, const std::string& key_value);

// Strict schema guard: every key of j must appear in allowed.
void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& context);

// Partial-JSON parsers over the built-in defaults; unknown keys rejected.
// vocab_size may stay 0 (resolved from the tokenizer at training time).
ModelConfig model_config_from_json(const nlohmann::json& partial);
CorpusSpec corpus_spec_from_json(const nlohmann::json& partial);
TrainConfig train_config_from_json(const nlohmann::json& partial);

nlohmann::json corpus_spec_to_json(const CorpusSpec& spec);

// Every CLI run records its effective settings here.
void write_resolved_config(const std::string& out_dir, const nlohmann::json& resolved);

}  // namespace cipherpix
