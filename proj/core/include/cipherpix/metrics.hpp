// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cipherpix/batch.hpp"
#include "cipherpix/model.hpp"

namespace cipherpix {

enum class EditUnit { kChar, kWord };

// Counts from one minimal-cost alignment with the documented backtrace
// tie-break: substitution/match preferred over deletion over insertion.
struct EditCounts {
    int64_t substitutions = 0;
    int64_t deletions = 0;
    int64_t insertions = 0;
    int64_t ref_len = 0;
    EditUnit unit = EditUnit::kChar;

    int64_t total() const { return substitutions + deletions + insertions; }
};

enum class EditOp { kMatch, kSub, kDel, kIns };

// Character-level alignment over Unicode scalar values.
std::vector<EditOp> edit_alignment_chars(const std::string& reference,
                                         const std::string& hypothesis);
std::vector<EditOp> edit_alignment_words(const std::string& reference,
                                         const std::string& hypothesis);

EditCounts edit_counts_chars(const std::string& reference, const std::string& hypothesis);
EditCounts edit_counts_words(const std::string& reference, const std::string& hypothesis);

// Per-line rates (S+D+I)/ref_len. Empty reference has no defined rate and
// raises invalid-argument; corpus aggregation handles it via raw counts.
double cer(const std::string& reference, const std::string& hypothesis);
double wer(const std::string& reference, const std::string& hypothesis);

struct LineScore {
    std::string line_id;
    std::string reference;
    std::string hypothesis;
    EditCounts chars;
    EditCounts words;
    std::optional<double> cer;  // undefined when the reference is empty
    std::optional<double> wer;
};

// Corpus-pooled rates: sum of edit counts over lines divided by summed
// reference length (the only reading under which WER > 100% is meaningful).
// Line-averaged rates are also reported for transparency.
struct MetricsReport {
    std::string split;
    int64_t n_lines = 0;
    double cer = 0.0;
    double wer = 0.0;
    double mean_line_cer = 0.0;  // over lines with defined rates
    double mean_line_wer = 0.0;
    EditCounts char_totals;
    EditCounts word_totals;
    std::vector<LineScore> lines;

    nlohmann::json to_json(bool include_lines = true) const;
};

struct ScoredPair {
    std::string line_id;
    std::string reference;
    std::string hypothesis;
};

// normalize lowercases and collapses whitespace on both sides before
// scoring (off by default; exact-match semantics otherwise).
MetricsReport score_pairs(const std::string& split, const std::vector<ScoredPair>& pairs,
                          bool normalize = false);

// Greedy-decodes every line of the split with the model; a decode failure
// contributes an empty hypothesis and evaluation continues.
MetricsReport evaluate_split(const NetF& net, const Tokenizer& tokenizer, const DataStore& store,
                             const std::string& split_name, bool normalize = false,
                             int threads = 0);

// Side-by-side arm comparison over train/val/test cells.
struct ComparisonReport {
    struct Cell {
        double baseline_cer = 0.0;
        double baseline_wer = 0.0;
        double two_stage_cer = 0.0;
        double two_stage_wer = 0.0;
        std::optional<double> cer_reduction_pct;  // empty when baseline is 0
        std::optional<double> wer_reduction_pct;
    };
    std::vector<std::pair<std::string, Cell>> splits;  // in train/val/test order

    nlohmann::json to_json() const;
    std::string render_text() const;
};

ComparisonReport compare_runs(const std::vector<MetricsReport>& baseline,
                              const std::vector<MetricsReport>& two_stage);

}  // namespace cipherpix
