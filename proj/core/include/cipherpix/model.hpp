// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "cipherpix/batch.hpp"
#include "cipherpix/tokenizer.hpp"

namespace cipherpix {

// Architecture hyperparameters. Patches are full-height column strips of
// patch_width pixels, so a line image becomes a 1-D patch sequence.
struct ModelConfig {
    int image_height = 32;
    int patch_width = 8;
    int d_model = 128;
    int n_heads = 4;
    int n_encoder_layers = 2;
    int n_decoder_layers = 2;
    int ffn_dim = 256;
    float dropout = 0.1f;
    int max_source_patches = 96;
    int max_target_len = 72;
    int vocab_size = 0;
    bool tie_output_embedding = false;

    int patch_dim() const { return image_height * patch_width; }
    int head_dim() const { return d_model / n_heads; }
    int max_image_width() const { return max_source_patches * patch_width; }

    void validate() const;
    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
    bool operator==(const ModelConfig&) const = default;
};

struct TensorSpec {
    std::string name;
    std::vector<int> shape;
    size_t offset = 0;
    size_t size = 0;
};

// Flat parameter layout shared by all scalar types; blob order is fixed and
// defines checkpoint order and initialization draw order.
struct ParamLayout {
    std::vector<TensorSpec> specs;
    size_t total = 0;

    static ParamLayout build(const ModelConfig& config);
    const TensorSpec& spec(const std::string& name) const;
    bool has(const std::string& name) const;
    // Name of the parameter group containing flat offset i.
    const std::string& group_of(size_t flat_index) const;
};

// Cross-attention probabilities: per decoder layer and head, one row per
// emitted token over source patches. Rows are softmax outputs (sum to 1).
struct AttentionRecord {
    int n_layers = 0;
    int n_heads = 0;
    int n_tokens = 0;
    int n_patches = 0;
    std::vector<float> data;  // [layer][head][token][patch]

    float at(int layer, int head, int token, int patch) const {
        return data[((static_cast<size_t>(layer) * n_heads + head) * n_tokens + token) *
                        n_patches +
                    patch];
    }
};

enum class AttentionReduce { kMeanHeads, kSingleHead };

// Reduced (tokens x patches) matrix from one decoder layer.
std::vector<float> extract_attention(const AttentionRecord& record, int layer,
                                     AttentionReduce reduce, int head = 0);

struct GreedyResult {
    std::string text;
    std::vector<int> token_ids;  // emitted ids, EOS included when produced
    AttentionRecord attention;
};

// Encoder-decoder transducer with explicit backward passes. T is float for
// training/inference and double for finite-difference verification.
template <typename T>
class Net {
  public:
    explicit Net(const ModelConfig& config);

    void init(uint64_t seed);

    const ModelConfig& config() const { return config_; }
    const ParamLayout& layout() const { return layout_; }
    std::vector<T>& params() { return params_; }
    const std::vector<T>& params() const { return params_; }
    size_t n_params() const { return layout_.total; }

    int patch_count(int width) const;

    // Encoder only: (patches x d_model) memory for the real patches of the
    // image. `stride` is the row stride of the pixel buffer (>= width).
    std::vector<T> encode_image(const float* image, int width, int stride) const;

    struct SampleStats {
        double loss_sum = 0.0;  // sum of per-position NLL
        int n_positions = 0;
    };

    // Teacher-forced forward+backward for one sample; accumulates d(sum of
    // position losses)/d(params) into grad (same layout as params()).
    SampleStats loss_and_grad(const float* image, int width, int stride, const int* target,
                              int target_len, bool train_mode, uint64_t dropout_seed,
                              std::vector<T>& grad) const;

    // Teacher-forced logits for one sample (eval mode, no dropout); rows are
    // positions 0..target_len-2 predicting the next token. Optionally fills
    // the cross-attention record over all target positions.
    std::vector<T> forward_logits(const float* image, int width, int stride, const int* target,
                                  int target_len, AttentionRecord* record = nullptr) const;

    // Greedy autoregressive decoding: argmax next token (ties break toward
    // the lowest id), stops at EOS or max_len emitted tokens.
    GreedyResult greedy_decode(const float* image, int width, int stride,
                               const Tokenizer& tokenizer, int max_len,
                               bool want_attention = false) const;

  private:
    ModelConfig config_;
    ParamLayout layout_;
    std::vector<T> params_;
};

using NetF = Net<float>;
using NetD = Net<double>;

// Batch wrappers -------------------------------------------------------

struct TeacherForcedOutput {
    // [batch][position][vocab] with position count max_target_len-1; rows at
    // positions >= target_len-1 of a sample are zero.
    std::vector<float> logits;
    int n_positions = 0;
    int vocab = 0;
    std::vector<AttentionRecord> records;  // filled when want_attention
};

TeacherForcedOutput forward_teacher_forced(const NetF& net, const Batch& batch, bool train_mode,
                                           uint64_t dropout_seed, bool want_attention = false,
                                           int threads = 0);

// Mean cross-entropy of the gold next token over non-PAD positions.
// Position t of sample s counts iff targets[s][t+1] != PAD.
double sequence_loss(const std::vector<float>& logits, int batch, int n_positions, int vocab,
                     const std::vector<int>& targets, int max_target_len);

}  // namespace cipherpix
