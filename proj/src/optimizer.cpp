// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#include "mngp/optimizer.hpp"

#include <cmath>

namespace mngp {

AdamState::AdamState(const FieldModel& model)
    : m(model.param_count(), 0.0f), v(model.param_count(), 0.0f), master(model.params().begin(), model.params().end()) {}

void AdamState::sync_master(const FieldModel& model) {
    master.assign(model.params().begin(), model.params().end());
}

bool adam_step(AdamState& state, FieldModel& model, std::span<const float> grads, const AdamConfig& config) {
    const std::size_t n = model.param_count();
    MNGP_EXPECTS(grads.size() == n && state.m.size() == n && state.v.size() == n && state.master.size() == n,
                 "optimizer state does not match the model");
    for (float g : grads) {
        if (!std::isfinite(g)) {
            ++state.skipped;
            return false;
        }
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const float bc1 = static_cast<float>(1.0 - std::pow(static_cast<double>(config.beta1), t));
    const float bc2 = static_cast<float>(1.0 - std::pow(static_cast<double>(config.beta2), t));
    const std::size_t mlp_begin = model.mlp_begin();
    std::span<float> stored = model.params();

    for (std::size_t i = 0; i < n; ++i) {
        float g = grads[i];
        if (i >= mlp_begin) g += config.weight_decay_mlp * state.master[i];
        state.m[i] = config.beta1 * state.m[i] + (1.0f - config.beta1) * g;
        state.v[i] = config.beta2 * state.v[i] + (1.0f - config.beta2) * g * g;
        const float m_hat = state.m[i] / bc1;
        const float v_hat = state.v[i] / bc2;
        state.master[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
        stored[i] = model.storage_round(state.master[i]);
    }
    return true;
}

}  // namespace mngp
