#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cipherpix/experiment.hpp"
#include "test_support.hpp"

using namespace cipherpix;

namespace {

ExperimentConfig tiny_experiment(uint64_t seed) {
    ExperimentConfig cfg = ExperimentConfig::desk_default();
    cfg.pretrain_corpus.n_lines = 24;
    cfg.pretrain_corpus.n_writers = 3;
    cfg.pretrain_corpus.max_words = 3;
    cfg.cipher_corpus.n_lines = 24;
    cfg.cipher_corpus.split_counts = {18, 3, 3};
    cfg.cipher_corpus.max_words = 3;

    ModelConfig m;
    m.d_model = 32;
    m.n_heads = 2;
    m.n_encoder_layers = 1;
    m.n_decoder_layers = 1;
    m.ffn_dim = 48;
    m.dropout = 0.0f;
    cfg.model = m;

    cfg.pretrain_train.max_epochs = 1;
    cfg.pretrain_train.batch_size = 8;
    cfg.pretrain_train.learning_rate = 3e-4;
    cfg.finetune_train.max_epochs = 2;
    cfg.finetune_train.batch_size = 8;
    cfg.finetune_train.learning_rate = 3e-4;
    cfg.reseed(seed);
    return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("experiment");

TEST_CASE("tiny experiment runs all arms and writes the report tree") {
    testsupport::TempDir tmp("exp");
    const ExperimentReport report = run_experiment(tiny_experiment(3), tmp.str());

    CHECK(report.pretrain.status == "ok");
    CHECK(report.baseline.status == "ok");
    CHECK(report.two_stage.status == "ok");
    REQUIRE(report.comparison.has_value());
    REQUIRE(report.comparison->splits.size() == 3);
    CHECK(report.comparison->splits[0].first == "train");
    CHECK(report.comparison->splits[1].first == "val");
    CHECK(report.comparison->splits[2].first == "test");

    // Arm B and C metrics carry exactly the train/val/test cells.
    for (const ArmOutcome* arm : {&report.baseline, &report.two_stage}) {
        REQUIRE(arm->metrics.size() == 3);
        CHECK(arm->metrics[0].split == "train");
        CHECK(arm->metrics[2].split == "test");
    }

    for (const char* rel :
         {"corpora/pretrain/manifest.jsonl", "corpora/cipher/manifest.jsonl",
          "corpora/cipher/key.json", "arms/pretrain/checkpoint.ckpt",
          "arms/baseline/checkpoint.ckpt", "arms/two_stage/checkpoint.ckpt",
          "arms/baseline/runlog.json", "reports/experiment_report.json",
          "reports/comparison.txt", "reports/comparison.json", "reports/baseline_test.json"}) {
        CHECK_MESSAGE(std::filesystem::exists(tmp.path() / rel), rel);
    }

    // Report JSON is self-consistent and timing-free.
    std::ifstream f(tmp.str("reports/experiment_report.json"));
    const auto j = nlohmann::json::parse(f);
    CHECK(j.at("arms").at("baseline").at("status") == "ok");
    CHECK(j.at("arms").at("two_stage").at("metrics").contains("test"));
    CHECK(!j.dump().empty());
    CHECK(j.dump().find("wall_time") == std::string::npos);
}

TEST_CASE("failed arms are marked while others still report") {
    testsupport::TempDir tmp("exp_fail");
    ExperimentConfig cfg = tiny_experiment(5);
    // Fine-tuning corpus lines exceed this target budget; the pretraining
    // corpus (3-word lines) stays within it.
    cfg.cipher_corpus.max_words = 14;
    cfg.cipher_corpus.max_chars = 67;
    cfg.model.max_target_len = 24;
    ExperimentReport report = run_experiment(cfg, tmp.str());
    CHECK(report.pretrain.status == "ok");
    CHECK(report.baseline.status == "failed");
    CHECK(!report.baseline.error.empty());
    CHECK(std::filesystem::exists(tmp.path() / "reports/experiment_report.json"));

    std::ifstream f(tmp.str("reports/experiment_report.json"));
    const auto j = nlohmann::json::parse(f);
    CHECK(j.at("arms").at("baseline").at("status") == "failed");
    CHECK(j.at("comparison").is_null());
}

TEST_CASE("experiment config json round trip keeps settings") {
    const ExperimentConfig cfg = tiny_experiment(9);
    const ExperimentConfig back = ExperimentConfig::from_json(cfg.to_json());
    CHECK(back.seed == cfg.seed);
    CHECK(back.pretrain_corpus.n_lines == 24);
    CHECK(back.cipher_corpus.split_counts == std::vector<int>{18, 3, 3});
    CHECK(back.model.d_model == 32);
    CHECK(back.finetune_train.max_epochs == 2);
    CHECK(back.finetune_train.seed == cfg.finetune_train.seed);

    CHECK_THROWS_AS((void)ExperimentConfig::from_json({{"bogus", 1}}), InvalidArgument);
}

TEST_SUITE_END();
