// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cipherpix/adamw.hpp"
#include "cipherpix/checkpoint.hpp"
#include "cipherpix/manifest.hpp"
#include "cipherpix/model.hpp"

namespace cipherpix {

struct TrainConfig {
    Stage stage = Stage::kPretrain;
    double learning_rate = 0.0;  // 0 resolves to the stage default
    int batch_size = 64;
    int max_epochs = 0;  // 0 resolves to the stage default
    int early_stop_patience = 20;  // cipher stage only
    double weight_decay = 0.01;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double grad_clip_norm = 1.0;
    uint64_t seed = 0;
    std::string init_checkpoint;  // cipher stage: set = two-stage arm
    bool freeze_encoder = false;
    bool bucket_by_width = true;
    int threads = 0;

    // Stage defaults: pretraining lr 5e-5 / 5 epochs; fine-tuning lr 2e-5
    // with early stopping.
    double resolved_lr() const;
    int resolved_max_epochs() const;
    void validate() const;

    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_cer = 0.0;
    double val_wer = 0.0;
    double wall_time_s = 0.0;  // timing only; excluded from determinism checks
};

struct RunLog {
    Stage stage = Stage::kPretrain;
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;  // 1-based; 0 = no epoch completed
    double best_val_cer = 0.0;
    std::string stop_reason;  // max_epochs | early_stop | diverged
    double grad_clip_norm = 0.0;  // recorded so the clipping choice is auditable

    nlohmann::json to_json() const;
    void save(const std::string& path) const;
};

struct TrainResult {
    RunLog log;
    std::string checkpoint_path;  // best-val-CER checkpoint
};

// Tracks strict validation improvement for best-checkpoint selection and
// early stopping.
class EarlyStopTracker {
  public:
    // Returns true when this epoch strictly improved on the best value.
    bool observe(int epoch, double value) {
        if (value < best_) {
            best_ = value;
            best_epoch_ = epoch;
            since_best_ = 0;
            return true;
        }
        ++since_best_;
        return false;
    }
    int best_epoch() const { return best_epoch_; }
    double best_value() const { return best_; }
    int epochs_since_best() const { return since_best_; }

  private:
    double best_ = std::numeric_limits<double>::infinity();
    int best_epoch_ = 0;
    int since_best_ = 0;
};

// One training stage: epochs of shuffled batches, per-epoch validation via
// greedy decoding, best-checkpoint tracking, early stopping (cipher stage),
// divergence abort. Writes checkpoint.ckpt and runlog.json under out_dir.
TrainResult train_stage(const TrainConfig& config, const ModelConfig& model_config,
                        const Manifest& manifest, const std::string& out_dir);

}  // namespace cipherpix
