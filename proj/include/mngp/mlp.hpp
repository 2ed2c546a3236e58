// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mngp/common.hpp"

#include <span>
#include <vector>

namespace mngp {

/// Dense ReLU network stored inside a flat parameter array. Layer l has a column-major
/// (out x in) weight matrix followed by its bias vector.
class MlpLayout {
public:
    MlpLayout() = default;
    /// `dims` lists widths from input to output, e.g. {32, 64, 16}.
    MlpLayout(std::vector<int> dims, std::size_t base_offset = 0);

    int layer_count() const { return static_cast<int>(dims_.size()) - 1; }
    int input_dim() const { return dims_.front(); }
    int output_dim() const { return dims_.back(); }
    const std::vector<int>& dims() const { return dims_; }
    std::size_t weight_offset(int layer) const { return w_offset_[layer]; }
    std::size_t bias_offset(int layer) const { return b_offset_[layer]; }
    std::size_t begin() const { return base_; }
    std::size_t end() const { return base_ + count_; }
    std::size_t param_count() const { return count_; }
    /// Multiply-accumulates per sample for one forward pass.
    std::size_t macs_per_sample() const;

private:
    std::vector<int> dims_;
    std::vector<std::size_t> w_offset_;
    std::vector<std::size_t> b_offset_;
    std::size_t base_ = 0;
    std::size_t count_ = 0;
};

/// Layer inputs retained by the forward pass. inputs[0] is the network input; inputs[l] for
/// l > 0 is the rectified output of layer l-1, whose sign pattern is the ReLU mask.
struct MlpCache {
    std::vector<Eigen::MatrixXf> inputs;
};

/// He-uniform weights (bound sqrt(6 / fan_in)) and zero biases.
void init_mlp(const MlpLayout& layout, std::span<float> params, Rng& rng);

/// `params` is the full flat buffer the layout's offsets refer to.
void mlp_forward(const MlpLayout& layout, std::span<const float> params,
                 const Eigen::Ref<const Eigen::MatrixXf>& input, Eigen::MatrixXf& output, MlpCache* cache);

/// Accumulates parameter gradients into `d_params` (same indexing as `params`) and writes the
/// input gradient when `d_input` is non-null.
void mlp_backward(const MlpLayout& layout, std::span<const float> params, const MlpCache& cache,
                  const Eigen::Ref<const Eigen::MatrixXf>& d_output, Eigen::MatrixXf* d_input,
                  std::span<float> d_params);

}  // namespace mngp
