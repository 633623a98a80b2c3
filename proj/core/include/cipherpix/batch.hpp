// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cipherpix/image.hpp"
#include "cipherpix/manifest.hpp"
#include "cipherpix/tokenizer.hpp"

namespace cipherpix {

// One split of a manifest, loaded into memory: images at the corpus line
// height plus encoded targets. Immutable after load.
class DataStore {
  public:
    struct Sample {
        std::string line_id;
        std::string plaintext;
        Image image;
        std::vector<int> target;  // BOS ... EOS
    };

    static DataStore load(const Manifest& manifest, const std::string& split,
                          const Tokenizer& tokenizer, int max_target_len);

    const std::vector<Sample>& samples() const { return samples_; }
    int size() const { return static_cast<int>(samples_.size()); }
    int max_width() const { return max_width_; }
    int line_height() const { return line_height_; }

  private:
    std::vector<Sample> samples_;
    int max_width_ = 0;
    int line_height_ = 0;
};

// Padded model input. Images pad with background white (1.0); targets pad
// with PAD. widths / target_lens record the exact non-padding extent.
struct Batch {
    int size = 0;
    int height = 0;
    int max_width = 0;
    int max_target_len = 0;
    std::vector<float> images;     // size x height x max_width
    std::vector<int> widths;       // per sample
    std::vector<int> targets;      // size x max_target_len
    std::vector<int> target_lens;  // per sample, includes BOS and EOS
    std::vector<int> sample_indices;

    const float* image_of(int s) const {
        return images.data() + static_cast<size_t>(s) * height * max_width;
    }
    const int* target_of(int s) const {
        return targets.data() + static_cast<size_t>(s) * max_target_len;
    }
};

// Epoch plan: a seeded shuffle chunked into batches; the final partial
// batch is retained. With bucket_by_width, samples are ordered by width
// first (stable within ties) and the batch order is then shuffled, which
// never increases total padding.
std::vector<std::vector<int>> make_batch_plan(const std::vector<int>& widths, int batch_size,
                                              uint64_t seed, bool bucket_by_width);

Batch materialize_batch(const DataStore& store, const std::vector<int>& indices);

// Total padded-out pixels of a plan (diagnostic used by tests).
int64_t padded_pixel_count(const std::vector<int>& widths, int height,
                           const std::vector<std::vector<int>>& plan);

}  // namespace cipherpix
