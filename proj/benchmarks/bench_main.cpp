// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "cipherpix/corpus.hpp"
#include "cipherpix/lexicon.hpp"
#include "cipherpix/metrics.hpp"
#include "cipherpix/model.hpp"
#include "cipherpix/render.hpp"

namespace {

using namespace cipherpix;

void BM_RenderCipherLine(benchmark::State& state) {
    const CipherKey key = build_key(7, U"abcdefghijklmnopqrstuvwxyz ", 1, 3);
    const RenderStyle style = writer_style(1, 0);
    LineRenderOptions opts;
    uint64_t seed = 0;
    for (auto _ : state) {
        Rng rng(seed++);
        benchmark::DoNotOptimize(
            render_cipher_line("der alte mann kommt nach haus", key, style, opts, rng));
    }
}
BENCHMARK(BM_RenderCipherLine);

void BM_SamplePlaintext(benchmark::State& state) {
    const Lexicon& lex = builtin_german_lexicon();
    uint64_t seed = 0;
    for (auto _ : state) {
        Rng rng(seed++);
        benchmark::DoNotOptimize(sample_plaintext(lex, rng));
    }
}
BENCHMARK(BM_SamplePlaintext);

void BM_LossAndGrad(benchmark::State& state) {
    ModelConfig cfg;
    cfg.vocab_size = 31;
    NetF net(cfg);
    net.init(1);
    Rng rng(2);
    const int width = static_cast<int>(state.range(0));
    std::vector<float> img(static_cast<size_t>(cfg.image_height) * width);
    for (auto& v : img) {
        v = static_cast<float>(rng.uniform());
    }
    std::vector<int> target = {Tokenizer::kBos};
    const int chars = width / 10;
    for (int i = 0; i < chars; ++i) {
        target.push_back(4 + static_cast<int>(rng.index(26)));
    }
    target.push_back(Tokenizer::kEos);
    std::vector<float> grad(net.n_params());
    for (auto _ : state) {
        std::fill(grad.begin(), grad.end(), 0.0f);
        benchmark::DoNotOptimize(net.loss_and_grad(img.data(), width, width, target.data(),
                                                   static_cast<int>(target.size()), true, 7,
                                                   grad));
    }
}
BENCHMARK(BM_LossAndGrad)->Arg(200)->Arg(360)->Arg(560);

void BM_GreedyDecode(benchmark::State& state) {
    ModelConfig cfg;
    cfg.vocab_size = 31;
    NetF net(cfg);
    net.init(1);
    Tokenizer tok = Tokenizer::from_json(nlohmann::json::parse(
        R"({"characters":[32,97,98,99,100,101,102,103,104,105,106,107,108,109,110,111,112,113,114,115,116,117,118,119,120,121,122]})"));
    Rng rng(2);
    std::vector<float> img(static_cast<size_t>(cfg.image_height) * 360);
    for (auto& v : img) {
        v = static_cast<float>(rng.uniform());
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.greedy_decode(img.data(), 360, 360, tok, 71));
    }
}
BENCHMARK(BM_GreedyDecode);

void BM_EditCountsChars(benchmark::State& state) {
    const std::string ref = "der alte mann kommt heute nicht nach haus";
    const std::string hyp = "der alt mann kummt heute nit nach haus";
    for (auto _ : state) {
        benchmark::DoNotOptimize(edit_counts_chars(ref, hyp));
    }
}
BENCHMARK(BM_EditCountsChars);

}  // namespace

BENCHMARK_MAIN();
