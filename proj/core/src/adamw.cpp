// SPDX-License-Identifier: Apache-2.0
#include "cipherpix/adamw.hpp"

#include <cmath>

#include "cipherpix/common.hpp"

namespace cipherpix {

AdamW::AdamW(size_t n_params) : m_(n_params, 0.0f), v_(n_params, 0.0f) {}

double AdamW::global_norm(const std::vector<float>& grads) {
    double sum = 0.0;
    for (float g : grads) {
        sum += static_cast<double>(g) * static_cast<double>(g);
    }
    return std::sqrt(sum);
}

void AdamW::step(std::vector<float>& params, std::vector<float>& grads,
                 const AdamWConfig& config, const ParamLayout& layout,
                 const std::vector<std::pair<size_t, size_t>>& frozen_ranges) {
    require(params.size() == m_.size() && grads.size() == m_.size(),
            "adamw: parameter/gradient size mismatch");

    for (size_t i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(grads[i])) {
            throw TrainingDiverged("adamw: non-finite gradient in parameter group '" +
                                   layout.group_of(i) + "'");
        }
    }

    if (config.grad_clip_norm > 0.0) {
        const double norm = global_norm(grads);
        if (norm > config.grad_clip_norm) {
            const float scale = static_cast<float>(config.grad_clip_norm / norm);
            for (float& g : grads) {
                g *= scale;
            }
        }
    }

    ++t_;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(t_));

    auto frozen = [&](size_t i) {
        for (const auto& [lo, hi] : frozen_ranges) {
            if (i >= lo && i < hi) {
                return true;
            }
        }
        return false;
    };

    for (size_t i = 0; i < params.size(); ++i) {
        if (!frozen_ranges.empty() && frozen(i)) {
            continue;
        }
        const double g = grads[i];
        const double m = config.beta1 * m_[i] + (1.0 - config.beta1) * g;
        const double v = config.beta2 * v_[i] + (1.0 - config.beta2) * g * g;
        m_[i] = static_cast<float>(m);
        v_[i] = static_cast<float>(v);
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        const double update =
            m_hat / (std::sqrt(v_hat) + config.eps) + config.weight_decay * params[i];
        params[i] = static_cast<float>(params[i] - config.learning_rate * update);
    }
}

}  // namespace cipherpix
