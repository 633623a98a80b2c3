// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit 0 iff all selected
// criteria pass.
//
// Usage: cipherpix_acceptance [--cli <cipherpix binary>] [--work <dir>]
//                             [--criterion N ...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cipherpix/batch.hpp"
#include "cipherpix/checkpoint.hpp"
#include "cipherpix/corpus.hpp"
#include "cipherpix/experiment.hpp"
#include "cipherpix/metrics.hpp"
#include "cipherpix/model.hpp"
#include "cipherpix/rng.hpp"
#include "cipherpix/text.hpp"
#include "cipherpix/tokenizer.hpp"
#include "cipherpix/trainer.hpp"
#include "oracle_edit.hpp"

namespace fs = std::filesystem;
using namespace cipherpix;

namespace {

struct Context {
    std::string cli;   // path to the cipherpix binary (criterion 7)
    fs::path work;     // scratch directory
    bool verbose = true;
};

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("acceptance: cannot open " + path.string());
    }
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

int run_cli(const Context& ctx, const std::string& args) {
    const std::string cmd = ctx.cli + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

// --------------------------------------------------------------------------
// Criterion 1: directional comparison on the default desk corpus.

Outcome criterion1(const Context& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg = ExperimentConfig::desk_default();
    cfg.reseed(0);
    const ExperimentReport report = run_experiment(cfg, (ctx.work / "c1").string());
    const double elapsed = seconds_since(t0);

    Outcome out;
    if (report.baseline.status != "ok" || report.two_stage.status != "ok") {
        out.detail = "arm failure: baseline=" + report.baseline.status +
                     " two_stage=" + report.two_stage.status;
        return out;
    }
    double base_cer = -1;
    double base_wer = -1;
    double two_cer = -1;
    double two_wer = -1;
    for (const auto& m : report.baseline.metrics) {
        if (m.split == "test") {
            base_cer = m.cer;
            base_wer = m.wer;
        }
    }
    for (const auto& m : report.two_stage.metrics) {
        if (m.split == "test") {
            two_cer = m.cer;
            two_wer = m.wer;
        }
    }
    std::ostringstream detail;
    detail.setf(std::ios::fixed);
    detail.precision(4);
    detail << "test CER baseline " << base_cer << " vs two-stage " << two_cer << " (ratio "
           << (base_cer > 0 ? two_cer / base_cer : -1.0) << ", need <= 0.7); WER " << base_wer
           << " vs " << two_wer << "; wall " << static_cast<int>(elapsed) << "s (limit 2700s)";
    out.detail = detail.str();
    out.pass = base_cer > 0 && two_cer <= 0.7 * base_cer && two_wer < base_wer &&
               elapsed <= 45.0 * 60.0;
    return out;
}

// --------------------------------------------------------------------------
// Criterion 2: overfit oracle, 8 cipher lines, <= 300 epochs, <= 3 minutes.

Outcome criterion2(const Context& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    CorpusSpec spec;
    spec.corpus_id = "overfit";
    spec.stage = Stage::kCipher;
    spec.n_lines = 12;
    spec.split_counts = {8, 2, 2};
    spec.seed = 42;
    const fs::path dir = ctx.work / "c2";
    const CorpusResult corpus = generate_corpus(spec, dir.string());

    TrainConfig tc;
    tc.stage = Stage::kCipher;
    tc.learning_rate = 3e-4;  // oracle setting: small batch, healthy rate
    tc.batch_size = 8;
    tc.max_epochs = 300;
    tc.early_stop_patience = 300;
    tc.seed = 7;
    ModelConfig mc;
    mc.dropout = 0.0f;
    const TrainResult res = train_stage(tc, mc, corpus.manifest, (dir / "run").string());

    const LoadedCheckpoint best = load_checkpoint(res.checkpoint_path);
    const DataStore train_store = DataStore::load(corpus.manifest, "train", best.tokenizer,
                                                  best.net.config().max_target_len);
    const MetricsReport train_metrics =
        evaluate_split(best.net, best.tokenizer, train_store, "train");
    const double elapsed = seconds_since(t0);

    Outcome out;
    std::ostringstream detail;
    detail.setf(std::ios::fixed);
    detail.precision(4);
    detail << "train CER " << train_metrics.cer << " after <= " << tc.max_epochs << " epochs ("
           << static_cast<int>(elapsed) << "s, limit 180s)";
    out.detail = detail.str();
    out.pass = train_metrics.cer <= 0.01 && elapsed <= 180.0;
    return out;
}

// --------------------------------------------------------------------------
// Criterion 3: exhaustive DP-vs-brute-force equivalence, lengths <= 6.

Outcome criterion3(const Context&) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> all = {""};
    {
        std::vector<std::string> cur = {""};
        for (int len = 1; len <= 6; ++len) {
            std::vector<std::string> next;
            next.reserve(cur.size() * 3);
            for (const auto& s : cur) {
                for (char c : {'a', 'b', 'c'}) {
                    next.push_back(s + c);
                }
            }
            all.insert(all.end(), next.begin(), next.end());
            cur = std::move(next);
        }
    }
    int64_t checked = 0;
    for (const auto& ref : all) {
        for (const auto& hyp : all) {
            const EditCounts counts = edit_counts_chars(ref, hyp);
            const int expected = oracle::min_edit_cost(ref, hyp);
            if (counts.total() != expected) {
                Outcome out;
                out.detail = "mismatch at ref='" + ref + "' hyp='" + hyp +
                             "': DP " + std::to_string(counts.total()) + " vs oracle " +
                             std::to_string(expected);
                return out;
            }
            ++checked;
        }
    }
    const double elapsed = seconds_since(t0);
    Outcome out;
    out.pass = elapsed <= 60.0;
    out.detail = std::to_string(checked) + " pairs exhaustively equal (" +
                 std::to_string(static_cast<int>(elapsed)) + "s, limit 60s)";
    return out;
}

// --------------------------------------------------------------------------
// Criterion 4: metric formula spot checks.

Outcome criterion4(const Context&) {
    Outcome out;
    const double c = cer("kitten", "sitting");
    const double w = wer("a", "b c");
    std::ostringstream detail;
    detail << "cer(kitten,sitting)=" << c << " (need 0.5), wer(a,'b c')=" << w
           << " (need 2.0, rates above 100% are legal)";
    out.detail = detail.str();
    out.pass = c == 0.5 && w == 2.0;
    return out;
}

// --------------------------------------------------------------------------
// Criterion 5: analytic vs central-difference gradients (micro config).

Outcome criterion5(const Context&) {
    const auto t0 = std::chrono::steady_clock::now();
    ModelConfig cfg;
    cfg.image_height = 4;
    cfg.patch_width = 2;
    cfg.d_model = 8;
    cfg.n_heads = 2;
    cfg.n_encoder_layers = 1;
    cfg.n_decoder_layers = 1;
    cfg.ffn_dim = 16;
    cfg.dropout = 0.0f;
    cfg.max_source_patches = 4;
    cfg.max_target_len = 8;
    cfg.vocab_size = 6;

    NetD net(cfg);
    net.init(41);
    Rng rng(17);
    const int width = 7;
    std::vector<float> image(static_cast<size_t>(cfg.image_height) * width);
    for (auto& v : image) {
        v = static_cast<float>(rng.uniform());
    }
    const std::vector<int> target = {Tokenizer::kBos, 4, 5, 4, 5, Tokenizer::kEos};
    const int len = static_cast<int>(target.size());

    std::vector<double> grad(net.n_params(), 0.0);
    (void)net.loss_and_grad(image.data(), width, width, target.data(), len, false, 0, grad);

    auto loss_at = [&](size_t flat, double value) {
        NetD probe(cfg);
        probe.params() = net.params();
        probe.params()[flat] = value;
        std::vector<double> scratch(probe.n_params(), 0.0);
        return probe.loss_and_grad(image.data(), width, width, target.data(), len, false, 0,
                                   scratch)
            .loss_sum;
    };

    constexpr double kEps = 1e-4;
    int checked = 0;
    double worst = 0.0;
    for (const auto& spec : net.layout().specs) {
        const size_t stride = std::max<size_t>(1, spec.size / 8);
        for (size_t k = 0; k < spec.size; k += stride) {
            const size_t flat = spec.offset + k;
            const double orig = net.params()[flat];
            const double fd = (loss_at(flat, orig + kEps) - loss_at(flat, orig - kEps)) /
                              (2.0 * kEps);
            const double an = grad[flat];
            const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8});
            worst = std::max(worst, rel);
            ++checked;
        }
    }
    const double elapsed = seconds_since(t0);
    Outcome out;
    std::ostringstream detail;
    detail << checked << " coordinates, worst relative error " << worst << " (need <= 1e-3, "
           << static_cast<int>(elapsed) << "s, limit 120s)";
    out.detail = detail.str();
    out.pass = checked >= 200 && worst <= 1e-3 && elapsed <= 120.0;
    return out;
}

// --------------------------------------------------------------------------
// Criterion 6: structural invariants.

Outcome criterion6(const Context& ctx) {
    ModelConfig cfg;
    cfg.image_height = 8;
    cfg.patch_width = 4;
    cfg.d_model = 16;
    cfg.n_heads = 2;
    cfg.n_encoder_layers = 1;
    cfg.n_decoder_layers = 2;
    cfg.ffn_dim = 32;
    cfg.dropout = 0.0f;
    cfg.max_source_patches = 12;
    cfg.max_target_len = 16;
    cfg.vocab_size = 9;
    NetF net(cfg);
    net.init(9);
    Tokenizer tok(std::vector<char32_t>{U'a', U'b', U'c', U'd', U'e'});

    Rng rng(4);
    const int width = 26;
    std::vector<float> img(static_cast<size_t>(cfg.image_height) * width);
    for (auto& v : img) {
        v = static_cast<float>(rng.uniform());
    }
    std::vector<std::string> failures;

    {  // causal non-leakage
        std::vector<int> target = {1, 4, 5, 6, 7, 2};
        const auto base =
            net.forward_logits(img.data(), width, width, target.data(), 6);
        std::vector<int> perturbed = target;
        perturbed[4] = 8;
        const auto changed =
            net.forward_logits(img.data(), width, width, perturbed.data(), 6);
        for (int t = 0; t < 4 && failures.empty(); ++t) {
            for (int j = 0; j < cfg.vocab_size; ++j) {
                if (base[static_cast<size_t>(t) * cfg.vocab_size + j] !=
                    changed[static_cast<size_t>(t) * cfg.vocab_size + j]) {
                    failures.push_back("causal mask leaked");
                    break;
                }
            }
        }
    }
    {  // attention row normalization
        std::vector<int> target = {1, 4, 5, 2};
        AttentionRecord rec;
        (void)net.forward_logits(img.data(), width, width, target.data(), 4, &rec);
        for (int l = 0; l < rec.n_layers; ++l) {
            for (int h = 0; h < rec.n_heads; ++h) {
                for (int t = 0; t < rec.n_tokens; ++t) {
                    float sum = 0.0f;
                    for (int p = 0; p < rec.n_patches; ++p) {
                        sum += rec.at(l, h, t, p);
                    }
                    if (std::abs(sum - 1.0f) > 1e-5f) {
                        failures.push_back("attention row not normalized");
                    }
                }
            }
        }
    }
    {  // padding invariance of greedy output
        std::vector<float> padded(static_cast<size_t>(cfg.image_height) * 44, 1.0f);
        for (int r = 0; r < cfg.image_height; ++r) {
            for (int c = 0; c < width; ++c) {
                padded[static_cast<size_t>(r) * 44 + c] = img[static_cast<size_t>(r) * width + c];
            }
        }
        const auto a = net.greedy_decode(img.data(), width, width, tok, 12);
        const auto b = net.greedy_decode(padded.data(), width, 44, tok, 12);
        if (a.token_ids != b.token_ids) {
            failures.push_back("padding changed greedy output");
        }
    }
    {  // checkpoint round-trip bit-exactness
        const fs::path path = ctx.work / "c6" / "model.ckpt";
        save_checkpoint(net, tok, path.string());
        const LoadedCheckpoint back = load_checkpoint(path.string());
        if (back.net.params() != net.params() || !(back.tokenizer == tok)) {
            failures.push_back("checkpoint round-trip not bit-exact");
        }
    }
    {  // tokenizer round-trip identity
        Rng trng(8);
        const std::string alphabet = "abcde";
        for (int trial = 0; trial < 500; ++trial) {
            std::string s;
            const int len = static_cast<int>(trng.index(12));
            for (int i = 0; i < len; ++i) {
                s.push_back(alphabet[static_cast<size_t>(trng.index(alphabet.size()))]);
            }
            if (tok.decode(tok.encode(s)) != s) {
                failures.push_back("tokenizer round-trip failed on '" + s + "'");
                break;
            }
        }
    }

    Outcome out;
    out.pass = failures.empty();
    out.detail = failures.empty()
                     ? "causality, attention normalization, padding invariance, checkpoint "
                       "round-trip, tokenizer round-trip"
                     : failures.front();
    return out;
}

// --------------------------------------------------------------------------
// Criterion 7: run-experiment twice, byte-identical outputs.

Outcome criterion7(const Context& ctx) {
    Outcome out;
    if (ctx.cli.empty()) {
        out.detail = "no --cli binary given";
        return out;
    }
    const fs::path dir = ctx.work / "c7";
    fs::create_directories(dir);
    const fs::path cfg_path = dir / "exp.json";
    {
        // Reduced desk configuration: the determinism contract is scale-free.
        nlohmann::json cfg;
        cfg["seed"] = 5;
        cfg["pretrain_corpus"] = {{"n_lines", 60}, {"n_writers", 3}, {"max_words", 3}};
        cfg["cipher_corpus"] = {{"n_lines", 60}, {"split_counts", {44, 8, 8}}, {"max_words", 3}};
        cfg["model"] = {{"d_model", 32}, {"n_heads", 2},   {"n_encoder_layers", 1},
                        {"n_decoder_layers", 1}, {"ffn_dim", 48}, {"dropout", 0.1}};
        cfg["pretrain_train"] = {{"stage", "pretrain"}, {"max_epochs", 2}, {"batch_size", 8},
                                 {"learning_rate", 3e-4}};
        cfg["finetune_train"] = {{"stage", "cipher"}, {"max_epochs", 2}, {"batch_size", 8},
                                 {"learning_rate", 3e-4}};
        std::ofstream f(cfg_path);
        f << cfg.dump(2);
    }
    for (const char* run : {"run_a", "run_b"}) {
        if (run_cli(ctx, "run-experiment --config " + cfg_path.string() + " --out " +
                             (dir / run).string()) != 0) {
            out.detail = std::string("run-experiment failed in ") + run;
            return out;
        }
    }

    // Byte-compare reports, manifests, checkpoints, key, and images.
    std::vector<std::string> mismatches;
    int compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dir / "run_a")) {
        if (!entry.is_regular_file()) {
            continue;
        }
        const fs::path rel = fs::relative(entry.path(), dir / "run_a");
        const fs::path other = dir / "run_b" / rel;
        const std::string name = rel.filename().string();
        if (name == "resolved_config.json") {
            continue;  // records the differing --out paths by design
        }
        if (!fs::exists(other)) {
            mismatches.push_back(rel.string() + " missing in run_b");
            continue;
        }
        std::string a = slurp(entry.path());
        std::string b = slurp(other);
        if (name == "runlog.json") {
            // Wall time is the one timing field; everything else must match.
            auto strip = [](const std::string& text) {
                nlohmann::json j = nlohmann::json::parse(text);
                for (auto& e : j.at("epochs")) {
                    e.erase("wall_time_s");
                }
                return j.dump();
            };
            a = strip(a);
            b = strip(b);
        }
        ++compared;
        if (a != b) {
            mismatches.push_back(rel.string());
        }
    }
    Outcome result;
    result.pass = mismatches.empty() && compared > 0;
    result.detail = mismatches.empty()
                        ? std::to_string(compared) + " files byte-identical across reruns"
                        : "differs: " + mismatches.front();
    return result;
}

// --------------------------------------------------------------------------
// Criterion 8: corpus validity on the default desk cipher corpus.

Outcome criterion8(const Context& ctx) {
    ExperimentConfig desk = ExperimentConfig::desk_default();
    desk.reseed(0);
    CorpusSpec spec = desk.cipher_corpus;  // same spec the experiment uses
    spec.log_glyph_sequences = true;
    const fs::path dir = ctx.work / "c8";
    const CorpusResult corpus = generate_corpus(spec, dir.string());

    const auto inverse = corpus.key->inverse();
    std::map<std::string, std::vector<int>> glyphs_by_line;
    {
        std::ifstream log(dir / "glyph_log.jsonl");
        std::string line;
        while (std::getline(log, line)) {
            const auto j = nlohmann::json::parse(line);
            glyphs_by_line[j.at("line_id").get<std::string>()] =
                j.at("glyphs").get<std::vector<int>>();
        }
    }

    int64_t envelope_ok = 0;
    int64_t decipherable = 0;
    const int64_t total = static_cast<int64_t>(corpus.manifest.entries.size());
    for (const auto& e : corpus.manifest.entries) {
        const auto chars = utf8_decode(e.plaintext).size();
        const auto words = split_words(e.plaintext).size();
        if (chars >= 1 && chars <= 67 && words >= 1 && words <= 14) {
            ++envelope_ok;
        }
        std::u32string decoded;
        for (int g : glyphs_by_line[e.line_id]) {
            decoded.push_back(inverse[static_cast<size_t>(g)]);
        }
        if (utf8_encode(decoded) == e.plaintext) {
            ++decipherable;
        }
    }
    Outcome out;
    out.pass = total == 1814 && envelope_ok == total && decipherable == total;
    out.detail = std::to_string(envelope_ok) + "/" + std::to_string(total) +
                 " lines inside the envelope, " + std::to_string(decipherable) + "/" +
                 std::to_string(total) + " key-invertible";
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    Context ctx;
    ctx.work = fs::temp_directory_path() / "cipherpix_acceptance";
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--cli" && i + 1 < argc) {
            ctx.cli = argv[++i];
        } else if (arg == "--work" && i + 1 < argc) {
            ctx.work = argv[++i];
        } else if (arg == "--criterion" && i + 1 < argc) {
            selected.insert(std::atoi(argv[++i]));
        } else {
            std::fprintf(stderr, "usage: %s [--cli <bin>] [--work <dir>] [--criterion N ...]\n",
                         argv[0]);
            return 2;
        }
    }
    std::error_code ec;
    fs::remove_all(ctx.work, ec);
    fs::create_directories(ctx.work);

    const std::vector<std::pair<std::string, std::function<Outcome(const Context&)>>> criteria = {
        {"directional comparison: two-stage test CER <= 0.7x baseline, WER ordered, <= 45 min",
         criterion1},
        {"overfit oracle: 8 lines, <= 300 epochs, train CER <= 1%, <= 3 min", criterion2},
        {"edit-distance DP equals brute force exhaustively (lengths <= 6 over {a,b,c})",
         criterion3},
        {"metric spot checks: cer(kitten,sitting)=0.5, wer(a,'b c')=2.0", criterion4},
        {"gradient check: >= 200 coordinates within relative 1e-3 (64-bit)", criterion5},
        {"structural invariants (causality, attention, padding, checkpoint, tokenizer)",
         criterion6},
        {"determinism: run-experiment twice is byte-identical", criterion7},
        {"corpus validity: envelope and decipherability on all 1814 cipher lines", criterion8},
    };

    bool all_pass = true;
    for (size_t i = 0; i < criteria.size(); ++i) {
        const int number = static_cast<int>(i) + 1;
        if (!selected.empty() && selected.find(number) == selected.end()) {
            continue;
        }
        Outcome outcome;
        try {
            outcome = criteria[i].second(ctx);
        } catch (const std::exception& e) {
            outcome.pass = false;
            outcome.detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %d: %s — %s\n", outcome.pass ? "PASS" : "FAIL", number,
                    criteria[i].first.c_str(), outcome.detail.c_str());
        std::fflush(stdout);
        all_pass &= outcome.pass;
    }
    return all_pass ? 0 : 1;
}
