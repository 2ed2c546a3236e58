// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mngp/field.hpp"

#include <span>
#include <vector>

namespace mngp {

struct AdamConfig {
    float lr = 1e-2f;
    float beta1 = 0.9f;
    float beta2 = 0.99f;
    float eps = 1e-15f;
    /// Coupled L2 (added to the gradient), MLP parameters only.
    float weight_decay_mlp = 1e-6f;
};

/// Full-precision moments and master weights. The model's own parameter buffer is the
/// storage copy, re-quantized after every step.
struct AdamState {
    std::vector<float> m;
    std::vector<float> v;
    std::vector<float> master;
    std::uint64_t step = 0;
    std::uint64_t skipped = 0;

    AdamState() = default;
    explicit AdamState(const FieldModel& model);

    /// Overwrites master weights from the model (after receiving parameters from elsewhere).
    void sync_master(const FieldModel& model);
};

/// Bias-corrected Adam on the master weights. Returns false (and leaves everything untouched)
/// when the gradient contains a non-finite value.
bool adam_step(AdamState& state, FieldModel& model, std::span<const float> grads, const AdamConfig& config);

}  // namespace mngp
