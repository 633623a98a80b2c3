// SPDX-License-Identifier: Apache-2.0
//
// cipherpix: synthetic homophonic-cipher corpora, two-stage training, and
// evaluation from one binary. Exit codes: 0 success, 1 user error, 2
// internal error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "cipherpix/batch.hpp"
#include "cipherpix/checkpoint.hpp"
#include "cipherpix/common.hpp"
#include "cipherpix/config.hpp"
#include "cipherpix/corpus.hpp"
#include "cipherpix/experiment.hpp"
#include "cipherpix/manifest.hpp"
#include "cipherpix/metrics.hpp"
#include "cipherpix/model.hpp"
#include "cipherpix/png_io.hpp"
#include "cipherpix/trainer.hpp"
#include "cipherpix/viz.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cipherpix;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out = "out";
    std::vector<std::string> overrides;
    std::optional<uint64_t> seed;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_config = true) {
    if (with_config) {
        cmd->add_option("--config", opts.config_path, "JSON or TOML config file");
    }
    cmd->add_option("--out", opts.out, "Output directory")->capture_default_str();
    cmd->add_option("--set", opts.overrides, "Override a config key, e.g. --set train.batch_size=8")
        ->take_all();
    cmd->add_option("--seed", opts.seed, "Global seed override");
    cmd->add_option("--threads", opts.threads, "Worker threads (0 = all cores)");
}

json load_effective_config(const CommonOpts& opts) {
    json cfg = opts.config_path.empty() ? json::object() : load_config_file(opts.config_path);
    for (const auto& kv : opts.overrides) {
        apply_override(cfg, kv);
    }
    return cfg;
}

Image load_line_image(const std::string& path, int line_height) {
    Image img = read_png_gray(path);
    if (img.height != line_height) {
        img = resize_to_height(img, line_height);
    }
    return img;
}

json base_resolved(const std::string& subcommand, const CommonOpts& opts) {
    json j;
    j["subcommand"] = subcommand;
    j["out"] = opts.out;
    j["threads"] = opts.threads;
    return j;
}

int cmd_gen_corpus(const CommonOpts& opts, bool match_paper_splits) {
    CorpusSpec spec = corpus_spec_from_json(load_effective_config(opts));
    if (opts.seed.has_value()) {
        spec.seed = *opts.seed;
    }
    if (match_paper_splits) {
        require(spec.stage == Stage::kCipher,
                "--match-paper-splits applies to cipher corpora only");
        spec.n_lines = 1814;
        spec.split_counts = {1269, 175, 370};
    }
    const CorpusResult result = generate_corpus(spec, opts.out);

    json resolved = base_resolved("gen-corpus", opts);
    resolved["corpus"] = corpus_spec_to_json(spec);
    write_resolved_config(opts.out, resolved);

    int train = 0;
    int val = 0;
    int test = 0;
    for (const auto& e : result.manifest.entries) {
        (e.split == "train" ? train : e.split == "val" ? val : test) += 1;
    }
    std::printf("wrote %d lines (train %d / val %d / test %d) to %s\n",
                static_cast<int>(result.manifest.entries.size()), train, val, test,
                opts.out.c_str());
    if (result.key.has_value()) {
        std::printf("cipher key: %d glyphs over %d characters (key.json)\n",
                    result.key->glyph_inventory, static_cast<int>(result.key->alphabet.size()));
    }
    return 0;
}

int cmd_ingest(const CommonOpts& opts, const std::string& images_dir,
               const std::string& transcript, const std::string& split_map,
               std::vector<double> ratios) {
    IngestOptions ingest_opts;
    if (!ratios.empty()) {
        ingest_opts.split_ratios = std::move(ratios);
    }
    if (opts.seed.has_value()) {
        ingest_opts.seed = *opts.seed;
    }
    ingest_opts.split_map_path = split_map;
    const IngestReport report = ingest_external(images_dir, transcript, opts.out, ingest_opts);

    json resolved = base_resolved("ingest", opts);
    resolved["images_dir"] = images_dir;
    resolved["transcript"] = transcript;
    resolved["split_map"] = split_map;
    resolved["split_ratios"] = ingest_opts.split_ratios;
    resolved["seed"] = ingest_opts.seed;
    write_resolved_config(opts.out, resolved);

    std::printf("ingested %d lines into %s/manifest.jsonl\n",
                static_cast<int>(report.manifest.entries.size()), opts.out.c_str());
    for (const auto& w : report.warnings) {
        std::printf("warning: %s\n", w.c_str());
    }
    std::printf("warnings: %d, envelope violations: %d\n",
                static_cast<int>(report.warnings.size()), report.envelope_violations);
    return 0;
}

int cmd_train(const CommonOpts& opts, Stage stage, const std::string& manifest_path,
              const std::string& init_checkpoint, bool freeze_encoder) {
    const json cfg = load_effective_config(opts);
    reject_unknown_keys(cfg, {"model", "train"}, "train config file");
    const ModelConfig model =
        model_config_from_json(cfg.contains("model") ? cfg.at("model") : json::object());
    TrainConfig train =
        train_config_from_json(cfg.contains("train") ? cfg.at("train") : json::object());
    train.stage = stage;
    train.threads = opts.threads;
    if (opts.seed.has_value()) {
        train.seed = *opts.seed;
    }
    if (!init_checkpoint.empty()) {
        train.init_checkpoint = init_checkpoint;
    }
    if (freeze_encoder) {
        train.freeze_encoder = true;
    }

    const Manifest manifest = read_manifest(manifest_path);
    json resolved = base_resolved(stage == Stage::kPretrain ? "pretrain" : "finetune", opts);
    resolved["manifest"] = manifest_path;
    resolved["model"] = model.to_json();
    resolved["train"] = train.to_json();
    write_resolved_config(opts.out, resolved);

    const TrainResult result = train_stage(train, model, manifest, opts.out);
    std::printf("stage=%s epochs=%d best_epoch=%d best_val_cer=%.4f stop=%s\n",
                stage_name(stage).c_str(), static_cast<int>(result.log.epochs.size()),
                result.log.best_epoch, result.log.best_val_cer,
                result.log.stop_reason.c_str());
    std::printf("checkpoint: %s\n", result.checkpoint_path.c_str());
    return 0;
}

int cmd_evaluate(const CommonOpts& opts, const std::string& checkpoint_path,
                 const std::string& manifest_path, const std::string& split, bool normalize) {
    const LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
    const Manifest manifest = read_manifest(manifest_path);
    const DataStore store =
        DataStore::load(manifest, split, loaded.tokenizer, loaded.net.config().max_target_len);
    const MetricsReport report = evaluate_split(loaded.net, loaded.tokenizer, store, split,
                                                normalize, opts.threads);

    json resolved = base_resolved("evaluate", opts);
    resolved["checkpoint"] = checkpoint_path;
    resolved["manifest"] = manifest_path;
    resolved["split"] = split;
    resolved["normalize"] = normalize;
    write_resolved_config(opts.out, resolved);

    fs::create_directories(opts.out);
    const std::string report_path = (fs::path(opts.out) / ("metrics_" + split + ".json")).string();
    std::ofstream f(report_path, std::ios::trunc);
    f << report.to_json(true).dump(2) << "\n";
    std::printf("%s: n=%lld CER=%.4f WER=%.4f (report: %s)\n", split.c_str(),
                static_cast<long long>(report.n_lines), report.cer, report.wer,
                report_path.c_str());
    return 0;
}

int cmd_decode(const CommonOpts& opts, const std::string& checkpoint_path,
               const std::string& image_path, const std::string& reference) {
    const LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
    const Image img = load_line_image(image_path, loaded.net.config().image_height);
    const GreedyResult result =
        loaded.net.greedy_decode(img.px.data(), img.width, img.width, loaded.tokenizer,
                                 loaded.net.config().max_target_len - 1);

    json resolved = base_resolved("decode", opts);
    resolved["checkpoint"] = checkpoint_path;
    resolved["image"] = image_path;
    resolved["reference"] = reference;
    write_resolved_config(opts.out, resolved);

    fs::create_directories(opts.out);
    std::ofstream f(fs::path(opts.out) / "decoded.txt", std::ios::trunc);
    f << result.text << "\n";
    std::printf("%s\n", result.text.c_str());
    if (!reference.empty()) {
        const std::string diff =
            render_diff(reference, result.text, (fs::path(opts.out) / "diff.txt").string());
        std::printf("%s", diff.c_str());
    }
    return 0;
}

int cmd_attn_viz(const CommonOpts& opts, const std::string& checkpoint_path,
                 const std::string& image_path, const std::string& mode, int layer, int head) {
    const LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
    const Image img = load_line_image(image_path, loaded.net.config().image_height);
    const GreedyResult result =
        loaded.net.greedy_decode(img.px.data(), img.width, img.width, loaded.tokenizer,
                                 loaded.net.config().max_target_len - 1, /*want_attention=*/true);
    require(result.attention.n_tokens > 0, "attn-viz: the model emitted no tokens");

    // Default export: last decoder layer, mean over heads.
    const int use_layer = layer >= 0 ? layer : result.attention.n_layers - 1;
    const auto reduce = head >= 0 ? AttentionReduce::kSingleHead : AttentionReduce::kMeanHeads;
    const auto matrix = extract_attention(result.attention, use_layer, reduce, std::max(head, 0));

    OverlaySpec spec;
    spec.mode = mode == "combined" ? OverlayMode::kCombined : OverlayMode::kPerToken;
    spec.patch_width = loaded.net.config().patch_width;

    json resolved = base_resolved("attn-viz", opts);
    resolved["checkpoint"] = checkpoint_path;
    resolved["image"] = image_path;
    resolved["mode"] = mode;
    resolved["layer"] = use_layer;
    resolved["head"] = head;
    write_resolved_config(opts.out, resolved);

    fs::create_directories(opts.out);
    const std::string overlay_path = (fs::path(opts.out) / "attention.png").string();
    (void)render_attention_overlay(img, matrix, result.attention.n_tokens,
                                   result.attention.n_patches, spec, overlay_path);
    std::ofstream tokens(fs::path(opts.out) / "tokens.txt", std::ios::trunc);
    for (size_t i = 0; i < result.token_ids.size(); ++i) {
        const int id = result.token_ids[i];
        std::string shown = loaded.tokenizer.decode({id});
        if (id == Tokenizer::kEos) {
            shown = "<eos>";
        } else if (shown == " ") {
            shown = "<sp>";
        } else if (shown.empty()) {
            shown = "<id " + std::to_string(id) + ">";
        }
        tokens << i << "\t" << shown << "\n";
    }
    std::printf("decoded: %s\n", result.text.c_str());
    std::printf("overlay: %s (%s mode, layer %d, %s)\n", overlay_path.c_str(), mode.c_str(),
                use_layer, head >= 0 ? ("head " + std::to_string(head)).c_str() : "mean heads");
    return 0;
}

int cmd_run_experiment(const CommonOpts& opts, bool match_paper_splits, bool freeze_encoder) {
    const json cfg_json = load_effective_config(opts);
    ExperimentConfig cfg =
        cfg_json.empty() ? ExperimentConfig::desk_default() : ExperimentConfig::from_json(cfg_json);
    if (opts.seed.has_value()) {
        cfg.reseed(*opts.seed);
    }
    if (match_paper_splits) {
        cfg.cipher_corpus.n_lines = 1814;
        cfg.cipher_corpus.split_counts = {1269, 175, 370};
    }
    if (freeze_encoder) {
        cfg.finetune_train.freeze_encoder = true;
    }
    if (opts.threads > 0) {
        cfg.threads = opts.threads;
    }

    json resolved = base_resolved("run-experiment", opts);
    resolved["experiment"] = cfg.to_json();
    write_resolved_config(opts.out, resolved);

    const ExperimentReport report = run_experiment(cfg, opts.out);
    std::printf("pretrain arm: %s\n", report.pretrain.status.c_str());
    if (report.pretrain.status == "ok") {
        for (const auto& m : report.pretrain.metrics) {
            std::printf("  handwriting %-5s CER %.4f WER %.4f\n", m.split.c_str(), m.cer, m.wer);
        }
    }
    std::printf("baseline arm: %s\n", report.baseline.status.c_str());
    std::printf("two_stage arm: %s\n", report.two_stage.status.c_str());
    if (report.comparison.has_value()) {
        std::printf("%s", report.comparison->render_text().c_str());
    }
    std::printf("wall time: %.1f s\nreports under %s/reports\n", report.wall_time_s,
                opts.out.c_str());
    for (const auto* arm : {&report.pretrain, &report.baseline, &report.two_stage}) {
        if (arm->status != "ok") {
            std::fprintf(stderr, "arm failed: %s\n", arm->error.c_str());
        }
    }
    return report.baseline.status == "ok" && report.two_stage.status == "ok" ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cipherpix: image-to-plaintext decipherment at desk scale"};
    app.require_subcommand(1);

    CommonOpts gen_opts;
    bool gen_match_splits = false;
    CLI::App* gen = app.add_subcommand("gen-corpus", "Generate a synthetic line-image corpus");
    add_common(gen, gen_opts);
    gen->add_flag("--match-paper-splits", gen_match_splits,
                  "Use the 1269/175/370 fine-tuning split counts");

    CommonOpts ingest_opts;
    std::string ingest_images;
    std::string ingest_transcript;
    std::string ingest_split_map;
    std::vector<double> ingest_ratios;
    CLI::App* ingest = app.add_subcommand("ingest", "Build a manifest from external images");
    add_common(ingest, ingest_opts, /*with_config=*/false);
    ingest->add_option("--images", ingest_images, "Directory of line images")->required();
    ingest->add_option("--transcript", ingest_transcript,
                       "Tab-separated <image_filename>\\t<plaintext> file")
        ->required();
    ingest->add_option("--split-map", ingest_split_map, "JSON {filename: split} override");
    ingest->add_option("--split-ratios", ingest_ratios, "Train/val/test ratios")->expected(3);

    CommonOpts pretrain_opts;
    std::string pretrain_manifest;
    CLI::App* pretrain = app.add_subcommand("pretrain", "Train on a handwriting corpus");
    add_common(pretrain, pretrain_opts);
    pretrain->add_option("--manifest", pretrain_manifest, "Corpus manifest")->required();

    CommonOpts finetune_opts;
    std::string finetune_manifest;
    std::string finetune_init;
    bool finetune_freeze = false;
    CLI::App* finetune = app.add_subcommand("finetune", "Train on a cipher corpus");
    add_common(finetune, finetune_opts);
    finetune->add_option("--manifest", finetune_manifest, "Corpus manifest")->required();
    finetune->add_option("--init-checkpoint", finetune_init,
                         "Start from pretrained weights (two-stage arm)");
    finetune->add_flag("--freeze-encoder", finetune_freeze, "Train decoder only");

    CommonOpts eval_opts;
    std::string eval_checkpoint;
    std::string eval_manifest;
    std::string eval_split = "test";
    bool eval_normalize = false;
    CLI::App* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a split");
    add_common(evaluate, eval_opts, /*with_config=*/false);
    evaluate->add_option("--checkpoint", eval_checkpoint, "Model checkpoint")->required();
    evaluate->add_option("--manifest", eval_manifest, "Corpus manifest")->required();
    evaluate->add_option("--split", eval_split, "train|val|test")->capture_default_str();
    evaluate->add_flag("--normalize", eval_normalize,
                       "Lowercase and collapse whitespace before scoring");

    CommonOpts decode_opts;
    std::string decode_checkpoint;
    std::string decode_image;
    std::string decode_ref;
    CLI::App* decode = app.add_subcommand("decode", "Decode one line image to plaintext");
    add_common(decode, decode_opts, /*with_config=*/false);
    decode->add_option("--checkpoint", decode_checkpoint, "Model checkpoint")->required();
    decode->add_option("--image", decode_image, "Line image (PNG)")->required();
    decode->add_option("--ref", decode_ref, "Reference plaintext for a diff");

    CommonOpts viz_opts;
    std::string viz_checkpoint;
    std::string viz_image;
    std::string viz_mode = "per-token";
    int viz_layer = -1;
    int viz_head = -1;
    CLI::App* attn = app.add_subcommand("attn-viz", "Export a cross-attention overlay");
    add_common(attn, viz_opts, /*with_config=*/false);
    attn->add_option("--checkpoint", viz_checkpoint, "Model checkpoint")->required();
    attn->add_option("--image", viz_image, "Line image (PNG)")->required();
    attn->add_option("--mode", viz_mode, "per-token|combined")
        ->check(CLI::IsMember({"per-token", "combined"}))
        ->capture_default_str();
    attn->add_option("--layer", viz_layer, "Decoder layer (-1 = last)")->capture_default_str();
    attn->add_option("--head", viz_head, "Head index (-1 = mean of heads)")->capture_default_str();

    CommonOpts exp_opts;
    bool exp_match_splits = false;
    bool exp_freeze = false;
    CLI::App* experiment = app.add_subcommand(
        "run-experiment", "Generate corpora, run all arms, and write the comparison report");
    add_common(experiment, exp_opts);
    experiment->add_flag("--match-paper-splits", exp_match_splits,
                         "Use the 1269/175/370 fine-tuning split counts");
    experiment->add_flag("--freeze-encoder", exp_freeze,
                         "Freeze the encoder during the fine-tuning arms");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) {
            return cmd_gen_corpus(gen_opts, gen_match_splits);
        }
        if (ingest->parsed()) {
            return cmd_ingest(ingest_opts, ingest_images, ingest_transcript, ingest_split_map,
                              ingest_ratios);
        }
        if (pretrain->parsed()) {
            return cmd_train(pretrain_opts, Stage::kPretrain, pretrain_manifest, "", false);
        }
        if (finetune->parsed()) {
            return cmd_train(finetune_opts, Stage::kCipher, finetune_manifest, finetune_init,
                             finetune_freeze);
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(eval_opts, eval_checkpoint, eval_manifest, eval_split,
                                eval_normalize);
        }
        if (decode->parsed()) {
            return cmd_decode(decode_opts, decode_checkpoint, decode_image, decode_ref);
        }
        if (attn->parsed()) {
            return cmd_attn_viz(viz_opts, viz_checkpoint, viz_image, viz_mode, viz_layer,
                                viz_head);
        }
        if (experiment->parsed()) {
            return cmd_run_experiment(exp_opts, exp_match_splits, exp_freeze);
        }
    } catch (const InvalidArgument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const CorruptManifest& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const DanglingPaths& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 2;
    }
    return 1;
}
