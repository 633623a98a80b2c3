// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cipherpix/model.hpp"

namespace cipherpix {

struct AdamWConfig {
    double learning_rate = 5e-5;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double grad_clip_norm = 1.0;  // <= 0 disables clipping
};

// Decoupled weight decay Adam over a flat parameter vector. Gradients are
// globally norm-clipped before the moment update. Frozen ranges (e.g. the
// encoder under --freeze-encoder) are skipped entirely.
class AdamW {
  public:
    explicit AdamW(size_t n_params);

    // Throws TrainingDiverged naming the parameter group on non-finite
    // gradients (layout used only for diagnostics).
    void step(std::vector<float>& params, std::vector<float>& grads, const AdamWConfig& config,
              const ParamLayout& layout,
              const std::vector<std::pair<size_t, size_t>>& frozen_ranges = {});

    int64_t step_count() const { return t_; }

    // Euclidean norm of the full gradient vector (pre-clip diagnostic).
    static double global_norm(const std::vector<float>& grads);

  private:
    std::vector<float> m_;
    std::vector<float> v_;
    int64_t t_ = 0;
};

}  // namespace cipherpix
