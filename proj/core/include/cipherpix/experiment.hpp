// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <optional>
#include <string>

#include "cipherpix/corpus.hpp"
#include "cipherpix/metrics.hpp"
#include "cipherpix/model.hpp"
#include "cipherpix/trainer.hpp"

namespace cipherpix {

// The full desk-scale comparison: generate both corpora, run three arms
// under one seed policy, and report Table-style cells.
//   A: pretraining alone, scored on its held-out splits.
//   B: fine-tuning from scratch (the baseline arm).
//   C: pretraining followed by fine-tuning (the two-stage arm).
struct ExperimentConfig {
    CorpusSpec pretrain_corpus;
    CorpusSpec cipher_corpus;
    ModelConfig model;
    TrainConfig pretrain_train;
    TrainConfig finetune_train;  // shared by arms B and C
    uint64_t seed = 0;
    int threads = 0;

    // Desk-scale defaults: 4,000 pretraining lines; 1,814 cipher lines
    // split 1,269/175/370.
    static ExperimentConfig desk_default();

    // Re-derives per-component seeds from the global seed.
    void reseed(uint64_t global_seed);

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
};

struct ArmOutcome {
    std::string status;  // "ok" | "failed"
    std::string error;   // set when failed
    std::vector<MetricsReport> metrics;  // train/val/test for B and C; val/test for A
    RunLog log;
};

struct ExperimentReport {
    ArmOutcome pretrain;   // arm A
    ArmOutcome baseline;   // arm B
    ArmOutcome two_stage;  // arm C
    std::optional<ComparisonReport> comparison;  // present when B and C succeeded
    double wall_time_s = 0.0;

    nlohmann::json to_json() const;  // deterministic (no timing fields)
};

ExperimentReport run_experiment(const ExperimentConfig& config, const std::string& out_dir);

}  // namespace cipherpix
