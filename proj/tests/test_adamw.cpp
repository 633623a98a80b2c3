#include <doctest.h>

#include <cmath>

#include "cipherpix/adamw.hpp"
#include "cipherpix/common.hpp"

using namespace cipherpix;

namespace {

ParamLayout scalar_layout(int n = 1) {
    ParamLayout layout;
    for (int i = 0; i < n; ++i) {
        TensorSpec spec;
        spec.name = "w" + std::to_string(i);
        spec.shape = {1};
        spec.size = 1;
        spec.offset = static_cast<size_t>(i);
        layout.specs.push_back(spec);
    }
    layout.total = static_cast<size_t>(n);
    return layout;
}

}  // namespace

TEST_SUITE_BEGIN("adamw");

TEST_CASE("zero gradient with zero weight decay leaves params unchanged") {
    const ParamLayout layout = scalar_layout(3);
    AdamW opt(3);
    std::vector<float> params = {1.0f, -2.0f, 0.5f};
    std::vector<float> grads = {0.0f, 0.0f, 0.0f};
    AdamWConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.weight_decay = 0.0;
    opt.step(params, grads, cfg, layout);
    CHECK(params == std::vector<float>{1.0f, -2.0f, 0.5f});
}

TEST_CASE("hand-executed first step: unit grad at lr 0.1 moves 1.0 to about 0.9") {
    const ParamLayout layout = scalar_layout(1);
    AdamW opt(1);
    std::vector<float> params = {1.0f};
    std::vector<float> grads = {1.0f};
    AdamWConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.weight_decay = 0.0;
    cfg.grad_clip_norm = 1.0;  // norm is exactly 1, no clipping
    opt.step(params, grads, cfg, layout);
    // m-hat = 1, v-hat = 1: update = 0.1 * 1/(1 + 1e-8)
    CHECK(params[0] == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(opt.step_count() == 1);
}

TEST_CASE("decoupled weight decay applies even with zero gradient") {
    const ParamLayout layout = scalar_layout(1);
    AdamW opt(1);
    std::vector<float> params = {1.0f};
    std::vector<float> grads = {0.0f};
    AdamWConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.weight_decay = 0.01;
    opt.step(params, grads, cfg, layout);
    CHECK(params[0] == doctest::Approx(0.999).epsilon(1e-7));
}

TEST_CASE("global norm clipping rescales large gradients") {
    const ParamLayout layout = scalar_layout(2);
    std::vector<float> grads = {3.0f, 4.0f};  // norm 5
    CHECK(AdamW::global_norm(grads) == doctest::Approx(5.0));

    AdamW opt(2);
    std::vector<float> params = {0.0f, 0.0f};
    AdamWConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.weight_decay = 0.0;
    cfg.grad_clip_norm = 1.0;
    opt.step(params, grads, cfg, layout);
    // After clipping, grads are (0.6, 0.8); sign of the update follows.
    CHECK(params[0] < 0.0f);
    CHECK(params[1] < 0.0f);
    // Adam normalizes magnitude, so both coordinates move by about lr.
    CHECK(params[0] == doctest::Approx(-0.1).epsilon(1e-3));
    CHECK(params[1] == doctest::Approx(-0.1).epsilon(1e-3));
}

TEST_CASE("frozen ranges are skipped entirely, including weight decay") {
    const ParamLayout layout = scalar_layout(2);
    AdamW opt(2);
    std::vector<float> params = {1.0f, 1.0f};
    std::vector<float> grads = {1.0f, 1.0f};
    AdamWConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.weight_decay = 0.01;
    cfg.grad_clip_norm = 0.0;
    opt.step(params, grads, cfg, layout, {{0, 1}});
    CHECK(params[0] == 1.0f);  // frozen
    CHECK(params[1] < 1.0f);
}

TEST_CASE("non-finite gradient aborts naming the parameter group") {
    const ParamLayout layout = scalar_layout(2);
    AdamW opt(2);
    std::vector<float> params = {1.0f, 1.0f};
    std::vector<float> grads = {0.0f, std::numeric_limits<float>::quiet_NaN()};
    AdamWConfig cfg;
    try {
        opt.step(params, grads, cfg, layout);
        FAIL("expected TrainingDiverged");
    } catch (const TrainingDiverged& e) {
        CHECK(std::string(e.what()).find("w1") != std::string::npos);
    }
}

TEST_SUITE_END();
