// SPDX-License-Identifier: Apache-2.0
#include "cipherpix/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "cipherpix/batch.hpp"
#include "cipherpix/common.hpp"
#include "cipherpix/metrics.hpp"
#include "cipherpix/parallel.hpp"
#include "cipherpix/rng.hpp"

namespace fs = std::filesystem;

namespace cipherpix {

double TrainConfig::resolved_lr() const {
    if (learning_rate > 0.0) {
        return learning_rate;
    }
    return stage == Stage::kPretrain ? 5e-5 : 2e-5;
}

int TrainConfig::resolved_max_epochs() const {
    if (max_epochs > 0) {
        return max_epochs;
    }
    return stage == Stage::kPretrain ? 5 : 200;
}

void TrainConfig::validate() const {
    require(resolved_lr() > 0.0, "train: learning rate must be positive");
    require(batch_size >= 1, "train: batch_size must be >= 1");
    require(resolved_max_epochs() >= 1, "train: max_epochs must be >= 1");
    if (stage == Stage::kCipher) {
        require(early_stop_patience >= 1, "train: patience must be >= 1 with early stopping");
    } else {
        require(init_checkpoint.empty(), "train: pretraining never takes an init checkpoint");
    }
}

nlohmann::json TrainConfig::to_json() const {
    return nlohmann::json{{"stage", stage_name(stage)},
                          {"learning_rate", resolved_lr()},
                          {"batch_size", batch_size},
                          {"max_epochs", resolved_max_epochs()},
                          {"early_stop_patience", early_stop_patience},
                          {"weight_decay", weight_decay},
                          {"adam_beta1", adam_beta1},
                          {"adam_beta2", adam_beta2},
                          {"adam_eps", adam_eps},
                          {"grad_clip_norm", grad_clip_norm},
                          {"seed", seed},
                          {"init_checkpoint", init_checkpoint},
                          {"freeze_encoder", freeze_encoder},
                          {"bucket_by_width", bucket_by_width}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.stage = parse_stage(j.at("stage").get<std::string>());
    c.learning_rate = j.value("learning_rate", 0.0);
    c.batch_size = j.value("batch_size", 64);
    c.max_epochs = j.value("max_epochs", 0);
    c.early_stop_patience = j.value("early_stop_patience", 20);
    c.weight_decay = j.value("weight_decay", 0.01);
    c.adam_beta1 = j.value("adam_beta1", 0.9);
    c.adam_beta2 = j.value("adam_beta2", 0.999);
    c.adam_eps = j.value("adam_eps", 1e-8);
    c.grad_clip_norm = j.value("grad_clip_norm", 1.0);
    c.seed = j.value("seed", static_cast<uint64_t>(0));
    c.init_checkpoint = j.value("init_checkpoint", std::string());
    c.freeze_encoder = j.value("freeze_encoder", false);
    c.bucket_by_width = j.value("bucket_by_width", true);
    return c;
}

nlohmann::json RunLog::to_json() const {
    nlohmann::json epochs_json = nlohmann::json::array();
    for (const auto& e : epochs) {
        epochs_json.push_back({{"epoch", e.epoch},
                               {"train_loss", e.train_loss},
                               {"val_cer", e.val_cer},
                               {"val_wer", e.val_wer},
                               {"wall_time_s", e.wall_time_s}});
    }
    return nlohmann::json{{"stage", stage_name(stage)},
                          {"epochs", std::move(epochs_json)},
                          {"best_epoch", best_epoch},
                          {"best_val_cer", best_val_cer},
                          {"stop_reason", stop_reason},
                          {"grad_clip_norm", grad_clip_norm}};
}

void RunLog::save(const std::string& path) const {
    const fs::path p(path);
    if (p.has_parent_path()) {
        fs::create_directories(p.parent_path());
    }
    std::ofstream f(path, std::ios::trunc);
    if (!f) {
        throw IoError("runlog: cannot write " + path);
    }
    f << to_json().dump(2) << "\n";
}

namespace {

std::vector<std::pair<size_t, size_t>> encoder_ranges(const ParamLayout& layout) {
    std::vector<std::pair<size_t, size_t>> ranges;
    for (const auto& spec : layout.specs) {
        if (spec.name.rfind("enc", 0) == 0 || spec.name.rfind("patch_proj", 0) == 0 ||
            spec.name.rfind("src_pos", 0) == 0) {
            ranges.emplace_back(spec.offset, spec.offset + spec.size);
        }
    }
    return ranges;
}

}  // namespace

TrainResult train_stage(const TrainConfig& config, const ModelConfig& model_config,
                        const Manifest& manifest, const std::string& out_dir) {
    config.validate();
    require(manifest.stage == config.stage, "train: manifest stage does not match config stage");

    // Model and tokenizer: fresh for pretraining and the baseline arm,
    // loaded from the pretraining checkpoint for the two-stage arm.
    Tokenizer tokenizer;
    std::optional<NetF> net;
    if (!config.init_checkpoint.empty()) {
        LoadedCheckpoint loaded = load_checkpoint(config.init_checkpoint);
        tokenizer = std::move(loaded.tokenizer);
        net.emplace(std::move(loaded.net));
    } else {
        tokenizer = build_vocab(manifest);
        ModelConfig cfg = model_config;
        cfg.vocab_size = tokenizer.vocab_size();
        net.emplace(cfg);
        net->init(derive_seed(config.seed, 0x6d6f64656cull));
    }
    const ModelConfig& cfg = net->config();

    const int threads = config.threads > 0 ? config.threads : default_thread_count();
    DataStore train_store = DataStore::load(manifest, "train", tokenizer, cfg.max_target_len);
    DataStore val_store = DataStore::load(manifest, "val", tokenizer, cfg.max_target_len);
    require(train_store.max_width() <= cfg.max_image_width(),
            "train: widest training image (" + std::to_string(train_store.max_width()) +
                " px) exceeds the model limit (" + std::to_string(cfg.max_image_width()) +
                " px)");

    std::vector<int> widths;
    widths.reserve(static_cast<size_t>(train_store.size()));
    for (const auto& s : train_store.samples()) {
        widths.push_back(s.image.width);
    }

    AdamWConfig opt_config;
    opt_config.learning_rate = config.resolved_lr();
    opt_config.weight_decay = config.weight_decay;
    opt_config.beta1 = config.adam_beta1;
    opt_config.beta2 = config.adam_beta2;
    opt_config.eps = config.adam_eps;
    opt_config.grad_clip_norm = config.grad_clip_norm;
    AdamW optimizer(net->n_params());
    const std::vector<std::pair<size_t, size_t>> frozen =
        config.freeze_encoder ? encoder_ranges(net->layout()) : std::vector<std::pair<size_t, size_t>>{};

    // Per-slot gradient buffers; reduction in slot order keeps training
    // bit-deterministic regardless of thread scheduling.
    std::vector<std::vector<float>> slot_grads(static_cast<size_t>(config.batch_size));
    std::vector<float> total_grad(net->n_params());

    RunLog log;
    log.stage = config.stage;
    log.grad_clip_norm = config.grad_clip_norm;
    std::vector<float> best_params;
    EarlyStopTracker tracker;
    bool diverged = false;
    int global_step = 0;

    const int max_epochs = config.resolved_max_epochs();
    for (int epoch = 1; epoch <= max_epochs && !diverged; ++epoch) {
        const auto epoch_start = std::chrono::steady_clock::now();
        const auto plan = make_batch_plan(widths, config.batch_size,
                                          derive_seed(config.seed, 0x65706f6368ull,
                                                      static_cast<uint64_t>(epoch)),
                                          config.bucket_by_width);
        double epoch_loss_sum = 0.0;
        int64_t epoch_positions = 0;
        for (const auto& batch_indices : plan) {
            const Batch batch = materialize_batch(train_store, batch_indices);
            std::vector<NetF::SampleStats> stats(static_cast<size_t>(batch.size));
            parallel_for(
                batch.size,
                [&](int64_t s) {
                    auto& grad = slot_grads[static_cast<size_t>(s)];
                    grad.assign(net->n_params(), 0.0f);
                    const uint64_t dropout_seed =
                        derive_seed(config.seed, static_cast<uint64_t>(epoch),
                                    static_cast<uint64_t>(global_step),
                                    static_cast<uint64_t>(s) + 1);
                    stats[static_cast<size_t>(s)] = net->loss_and_grad(
                        batch.image_of(static_cast<int>(s)), batch.widths[static_cast<size_t>(s)],
                        batch.max_width, batch.target_of(static_cast<int>(s)),
                        batch.target_lens[static_cast<size_t>(s)], /*train=*/true, dropout_seed,
                        grad);
                },
                threads);

            double batch_loss_sum = 0.0;
            int64_t batch_positions = 0;
            for (const auto& s : stats) {
                batch_loss_sum += s.loss_sum;
                batch_positions += s.n_positions;
            }
            const double batch_loss =
                batch_positions > 0 ? batch_loss_sum / static_cast<double>(batch_positions) : 0.0;
            if (!std::isfinite(batch_loss)) {
                diverged = true;  // params still hold the last good step
                break;
            }

            std::fill(total_grad.begin(), total_grad.end(), 0.0f);
            const float scale =
                batch_positions > 0 ? 1.0f / static_cast<float>(batch_positions) : 0.0f;
            for (int s = 0; s < batch.size; ++s) {
                const auto& g = slot_grads[static_cast<size_t>(s)];
                for (size_t i = 0; i < total_grad.size(); ++i) {
                    total_grad[i] += g[i];
                }
            }
            for (float& g : total_grad) {
                g *= scale;
            }
            try {
                optimizer.step(net->params(), total_grad, opt_config, net->layout(), frozen);
            } catch (const TrainingDiverged&) {
                diverged = true;
                break;
            }
            epoch_loss_sum += batch_loss_sum;
            epoch_positions += batch_positions;
            ++global_step;
        }
        if (diverged) {
            break;
        }

        const MetricsReport val =
            evaluate_split(*net, tokenizer, val_store, "val", /*normalize=*/false, threads);
        EpochRecord record;
        record.epoch = epoch;
        record.train_loss =
            epoch_positions > 0 ? epoch_loss_sum / static_cast<double>(epoch_positions) : 0.0;
        record.val_cer = val.cer;
        record.val_wer = val.wer;
        record.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
        log.epochs.push_back(record);

        if (tracker.observe(epoch, val.cer)) {  // strict decrease counts
            best_params = net->params();
        }
        if (config.stage == Stage::kCipher &&
            tracker.epochs_since_best() >= config.early_stop_patience) {
            log.stop_reason = "early_stop";
            break;
        }
    }
    if (diverged) {
        log.stop_reason = "diverged";
    } else if (log.stop_reason.empty()) {
        log.stop_reason = "max_epochs";
    }
    log.best_epoch = tracker.best_epoch();
    log.best_val_cer = tracker.best_epoch() > 0 ? tracker.best_value() : 0.0;

    // Best checkpoint; on divergence before any evaluation, the last good
    // parameters are the current ones.
    if (!best_params.empty()) {
        net->params() = best_params;
    }
    fs::create_directories(out_dir);
    TrainResult result;
    result.checkpoint_path = (fs::path(out_dir) / "checkpoint.ckpt").string();
    save_checkpoint(*net, tokenizer, result.checkpoint_path);
    log.save((fs::path(out_dir) / "runlog.json").string());
    result.log = std::move(log);
    return result;
}

}  // namespace cipherpix
