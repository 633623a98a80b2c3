// SPDX-License-Identifier: Apache-2.0
#include "cipherpix/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "cipherpix/common.hpp"
#include "cipherpix/parallel.hpp"
#include "cipherpix/text.hpp"

namespace cipherpix {

namespace {

// Wagner-Fischer with unit costs. Backtrace prefers substitution/match over
// deletion over insertion, making the S/D/I decomposition deterministic.
template <typename Token>
std::vector<EditOp> align(const std::vector<Token>& ref, const std::vector<Token>& hyp) {
    const size_t m = ref.size();
    const size_t n = hyp.size();
    std::vector<int> cost((m + 1) * (n + 1), 0);
    auto at = [&](size_t i, size_t j) -> int& { return cost[i * (n + 1) + j]; };
    for (size_t i = 1; i <= m; ++i) {
        at(i, 0) = static_cast<int>(i);
    }
    for (size_t j = 1; j <= n; ++j) {
        at(0, j) = static_cast<int>(j);
    }
    for (size_t i = 1; i <= m; ++i) {
        for (size_t j = 1; j <= n; ++j) {
            const int sub = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
            const int del = at(i - 1, j) + 1;
            const int ins = at(i, j - 1) + 1;
            at(i, j) = std::min({sub, del, ins});
        }
    }

    std::vector<EditOp> ops;
    size_t i = m;
    size_t j = n;
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0 &&
            at(i, j) == at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
            ops.push_back(ref[i - 1] == hyp[j - 1] ? EditOp::kMatch : EditOp::kSub);
            --i;
            --j;
        } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
            ops.push_back(EditOp::kDel);
            --i;
        } else {
            ops.push_back(EditOp::kIns);
            --j;
        }
    }
    std::reverse(ops.begin(), ops.end());
    return ops;
}

EditCounts counts_from_ops(const std::vector<EditOp>& ops, int64_t ref_len, EditUnit unit) {
    EditCounts c;
    c.ref_len = ref_len;
    c.unit = unit;
    for (EditOp op : ops) {
        switch (op) {
            case EditOp::kSub: ++c.substitutions; break;
            case EditOp::kDel: ++c.deletions; break;
            case EditOp::kIns: ++c.insertions; break;
            case EditOp::kMatch: break;
        }
    }
    return c;
}

std::vector<char32_t> char_tokens(const std::string& s) {
    const std::u32string u = utf8_decode(s);
    return {u.begin(), u.end()};
}

nlohmann::json counts_json(const EditCounts& c) {
    return nlohmann::json{{"substitutions", c.substitutions},
                          {"deletions", c.deletions},
                          {"insertions", c.insertions},
                          {"ref_len", c.ref_len}};
}

}  // namespace

std::vector<EditOp> edit_alignment_chars(const std::string& reference,
                                         const std::string& hypothesis) {
    return align(char_tokens(reference), char_tokens(hypothesis));
}

std::vector<EditOp> edit_alignment_words(const std::string& reference,
                                         const std::string& hypothesis) {
    return align(split_words(reference), split_words(hypothesis));
}

EditCounts edit_counts_chars(const std::string& reference, const std::string& hypothesis) {
    const auto ref = char_tokens(reference);
    return counts_from_ops(align(ref, char_tokens(hypothesis)),
                           static_cast<int64_t>(ref.size()), EditUnit::kChar);
}

EditCounts edit_counts_words(const std::string& reference, const std::string& hypothesis) {
    const auto ref = split_words(reference);
    return counts_from_ops(align(ref, split_words(hypothesis)),
                           static_cast<int64_t>(ref.size()), EditUnit::kWord);
}

double cer(const std::string& reference, const std::string& hypothesis) {
    const EditCounts c = edit_counts_chars(reference, hypothesis);
    require(c.ref_len > 0, "cer: empty reference has no defined per-line rate");
    return static_cast<double>(c.total()) / static_cast<double>(c.ref_len);
}

double wer(const std::string& reference, const std::string& hypothesis) {
    const EditCounts c = edit_counts_words(reference, hypothesis);
    require(c.ref_len > 0, "wer: empty reference has no defined per-line rate");
    return static_cast<double>(c.total()) / static_cast<double>(c.ref_len);
}

nlohmann::json MetricsReport::to_json(bool include_lines) const {
    nlohmann::json j;
    j["split"] = split;
    j["n_lines"] = n_lines;
    j["cer"] = cer;
    j["wer"] = wer;
    j["mean_line_cer"] = mean_line_cer;
    j["mean_line_wer"] = mean_line_wer;
    j["char_counts"] = counts_json(char_totals);
    j["word_counts"] = counts_json(word_totals);
    if (include_lines) {
        nlohmann::json lines_json = nlohmann::json::array();
        for (const auto& l : lines) {
            nlohmann::json lj;
            lj["line_id"] = l.line_id;
            lj["reference"] = l.reference;
            lj["hypothesis"] = l.hypothesis;
            lj["chars"] = counts_json(l.chars);
            lj["words"] = counts_json(l.words);
            lj["cer"] = l.cer.has_value() ? nlohmann::json(*l.cer) : nlohmann::json(nullptr);
            lj["wer"] = l.wer.has_value() ? nlohmann::json(*l.wer) : nlohmann::json(nullptr);
            lines_json.push_back(std::move(lj));
        }
        j["lines"] = std::move(lines_json);
    }
    return j;
}

MetricsReport score_pairs(const std::string& split, const std::vector<ScoredPair>& pairs,
                          bool normalize) {
    MetricsReport report;
    report.split = split;
    report.n_lines = static_cast<int64_t>(pairs.size());
    report.char_totals.unit = EditUnit::kChar;
    report.word_totals.unit = EditUnit::kWord;

    double line_cer_sum = 0.0;
    double line_wer_sum = 0.0;
    int64_t defined_cer = 0;
    int64_t defined_wer = 0;

    report.lines.resize(pairs.size());
    parallel_for(static_cast<int64_t>(pairs.size()), [&](int64_t i) {
        const auto& p = pairs[static_cast<size_t>(i)];
        LineScore score;
        score.line_id = p.line_id;
        score.reference = normalize ? normalize_text(p.reference) : p.reference;
        score.hypothesis = normalize ? normalize_text(p.hypothesis) : p.hypothesis;
        score.chars = edit_counts_chars(score.reference, score.hypothesis);
        score.words = edit_counts_words(score.reference, score.hypothesis);
        if (score.chars.ref_len > 0) {
            score.cer = static_cast<double>(score.chars.total()) /
                        static_cast<double>(score.chars.ref_len);
        }
        if (score.words.ref_len > 0) {
            score.wer = static_cast<double>(score.words.total()) /
                        static_cast<double>(score.words.ref_len);
        }
        report.lines[static_cast<size_t>(i)] = std::move(score);
    });

    for (const auto& l : report.lines) {
        report.char_totals.substitutions += l.chars.substitutions;
        report.char_totals.deletions += l.chars.deletions;
        report.char_totals.insertions += l.chars.insertions;
        report.char_totals.ref_len += l.chars.ref_len;
        report.word_totals.substitutions += l.words.substitutions;
        report.word_totals.deletions += l.words.deletions;
        report.word_totals.insertions += l.words.insertions;
        report.word_totals.ref_len += l.words.ref_len;
        if (l.cer.has_value()) {
            line_cer_sum += *l.cer;
            ++defined_cer;
        }
        if (l.wer.has_value()) {
            line_wer_sum += *l.wer;
            ++defined_wer;
        }
    }
    require(report.char_totals.ref_len > 0, "metrics: split has no reference characters");
    report.cer = static_cast<double>(report.char_totals.total()) /
                 static_cast<double>(report.char_totals.ref_len);
    report.wer = static_cast<double>(report.word_totals.total()) /
                 static_cast<double>(report.word_totals.ref_len);
    report.mean_line_cer = defined_cer > 0 ? line_cer_sum / static_cast<double>(defined_cer) : 0.0;
    report.mean_line_wer = defined_wer > 0 ? line_wer_sum / static_cast<double>(defined_wer) : 0.0;
    return report;
}

MetricsReport evaluate_split(const NetF& net, const Tokenizer& tokenizer, const DataStore& store,
                             const std::string& split_name, bool normalize, int threads) {
    std::vector<ScoredPair> pairs(static_cast<size_t>(store.size()));
    const int max_len = net.config().max_target_len - 1;
    parallel_for(
        store.size(),
        [&](int64_t i) {
            const auto& sample = store.samples()[static_cast<size_t>(i)];
            ScoredPair pair;
            pair.line_id = sample.line_id;
            pair.reference = sample.plaintext;
            try {
                pair.hypothesis = net.greedy_decode(sample.image.px.data(), sample.image.width,
                                                    sample.image.width, tokenizer, max_len)
                                      .text;
            } catch (const std::exception&) {
                pair.hypothesis.clear();  // recorded as empty, evaluation continues
            }
            pairs[static_cast<size_t>(i)] = std::move(pair);
        },
        threads > 0 ? threads : default_thread_count());
    return score_pairs(split_name, pairs, normalize);
}

ComparisonReport compare_runs(const std::vector<MetricsReport>& baseline,
                              const std::vector<MetricsReport>& two_stage) {
    require(baseline.size() == two_stage.size(), "compare_runs: split count mismatch");
    ComparisonReport out;
    for (size_t i = 0; i < baseline.size(); ++i) {
        require(baseline[i].split == two_stage[i].split,
                "compare_runs: split mismatch ('" + baseline[i].split + "' vs '" +
                    two_stage[i].split + "')");
        ComparisonReport::Cell cell;
        cell.baseline_cer = baseline[i].cer;
        cell.baseline_wer = baseline[i].wer;
        cell.two_stage_cer = two_stage[i].cer;
        cell.two_stage_wer = two_stage[i].wer;
        if (cell.baseline_cer > 0.0) {
            cell.cer_reduction_pct = 100.0 * (cell.baseline_cer - cell.two_stage_cer) /
                                     cell.baseline_cer;
        }
        if (cell.baseline_wer > 0.0) {
            cell.wer_reduction_pct = 100.0 * (cell.baseline_wer - cell.two_stage_wer) /
                                     cell.baseline_wer;
        }
        out.splits.emplace_back(baseline[i].split, cell);
    }
    return out;
}

nlohmann::json ComparisonReport::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [split, cell] : splits) {
        nlohmann::json c;
        c["baseline"] = {{"cer", cell.baseline_cer}, {"wer", cell.baseline_wer}};
        c["two_stage"] = {{"cer", cell.two_stage_cer}, {"wer", cell.two_stage_wer}};
        c["cer_reduction_pct"] = cell.cer_reduction_pct.has_value()
                                     ? nlohmann::json(*cell.cer_reduction_pct)
                                     : nlohmann::json("n/a");
        c["wer_reduction_pct"] = cell.wer_reduction_pct.has_value()
                                     ? nlohmann::json(*cell.wer_reduction_pct)
                                     : nlohmann::json("n/a");
        j[split] = std::move(c);
    }
    return j;
}

std::string ComparisonReport::render_text() const {
    char buf[256];
    std::string out;
    out += "method      ";
    for (const auto& [split, cell] : splits) {
        (void)cell;
        std::snprintf(buf, sizeof(buf), " | %-6s CER%%  WER%%", split.c_str());
        out += buf;
    }
    out += "\n";
    out += std::string(out.size() - 1, '-') + "\n";
    out += "baseline    ";
    for (const auto& [split, cell] : splits) {
        std::snprintf(buf, sizeof(buf), " | %6s %5.2f %6.2f", "", 100.0 * cell.baseline_cer,
                      100.0 * cell.baseline_wer);
        out += buf;
    }
    out += "\n";
    out += "two_stage   ";
    for (const auto& [split, cell] : splits) {
        std::snprintf(buf, sizeof(buf), " | %6s %5.2f %6.2f", "", 100.0 * cell.two_stage_cer,
                      100.0 * cell.two_stage_wer);
        out += buf;
    }
    out += "\n";
    return out;
}

}  // namespace cipherpix
