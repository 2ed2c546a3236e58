// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#include "mngp/mlp.hpp"

#include <cmath>

namespace mngp {

MlpLayout::MlpLayout(std::vector<int> dims, std::size_t base_offset) : dims_(std::move(dims)), base_(base_offset) {
    MNGP_EXPECTS(dims_.size() >= 2, "an MLP needs at least one layer");
    std::size_t off = base_;
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
        MNGP_EXPECTS(dims_[l] > 0 && dims_[l + 1] > 0, "layer widths must be positive");
        w_offset_.push_back(off);
        off += static_cast<std::size_t>(dims_[l]) * dims_[l + 1];
        b_offset_.push_back(off);
        off += static_cast<std::size_t>(dims_[l + 1]);
    }
    count_ = off - base_;
}

std::size_t MlpLayout::macs_per_sample() const {
    std::size_t macs = 0;
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) macs += static_cast<std::size_t>(dims_[l]) * dims_[l + 1];
    return macs;
}

void init_mlp(const MlpLayout& layout, std::span<float> params, Rng& rng) {
    MNGP_EXPECTS(params.size() >= layout.end(), "parameter buffer too small");
    const auto& dims = layout.dims();
    for (int l = 0; l < layout.layer_count(); ++l) {
        const float bound = std::sqrt(6.0f / static_cast<float>(dims[l]));
        std::uniform_real_distribution<float> dist(-bound, bound);
        float* w = params.data() + layout.weight_offset(l);
        for (std::size_t i = 0; i < static_cast<std::size_t>(dims[l]) * dims[l + 1]; ++i) w[i] = dist(rng);
        float* b = params.data() + layout.bias_offset(l);
        std::fill(b, b + dims[l + 1], 0.0f);
    }
}

namespace {

using ConstMat = Eigen::Map<const Eigen::MatrixXf>;
using ConstVec = Eigen::Map<const Eigen::VectorXf>;

}  // namespace

void mlp_forward(const MlpLayout& layout, std::span<const float> params,
                 const Eigen::Ref<const Eigen::MatrixXf>& input, Eigen::MatrixXf& output, MlpCache* cache) {
    MNGP_EXPECTS(input.rows() == layout.input_dim(), "MLP input width mismatch");
    MNGP_EXPECTS(params.size() >= layout.end(), "parameter buffer too small");
    const auto& dims = layout.dims();
    const int n_layers = layout.layer_count();
    if (cache) {
        cache->inputs.resize(n_layers);
        cache->inputs[0] = input;
    }
    Eigen::MatrixXf x = input;
    for (int l = 0; l < n_layers; ++l) {
        ConstMat w(params.data() + layout.weight_offset(l), dims[l + 1], dims[l]);
        ConstVec b(params.data() + layout.bias_offset(l), dims[l + 1]);
        Eigen::MatrixXf z = w * x;
        z.colwise() += b;
        if (l + 1 < n_layers) {
            z = z.cwiseMax(0.0f);
            if (cache) cache->inputs[l + 1] = z;
            x = std::move(z);
        } else {
            output = std::move(z);
        }
    }
}

void mlp_backward(const MlpLayout& layout, std::span<const float> params, const MlpCache& cache,
                  const Eigen::Ref<const Eigen::MatrixXf>& d_output, Eigen::MatrixXf* d_input,
                  std::span<float> d_params) {
    const int n_layers = layout.layer_count();
    MNGP_EXPECTS(static_cast<int>(cache.inputs.size()) == n_layers, "MLP cache missing or from another network");
    MNGP_EXPECTS(d_output.rows() == layout.output_dim() && d_output.cols() == cache.inputs[0].cols(),
                 "MLP output gradient shape mismatch");
    MNGP_EXPECTS(d_params.size() >= layout.end(), "gradient buffer too small");
    const auto& dims = layout.dims();
    Eigen::MatrixXf delta = d_output;
    for (int l = n_layers - 1; l >= 0; --l) {
        const Eigen::MatrixXf& x = cache.inputs[l];
        Eigen::Map<Eigen::MatrixXf> dw(d_params.data() + layout.weight_offset(l), dims[l + 1], dims[l]);
        Eigen::Map<Eigen::VectorXf> db(d_params.data() + layout.bias_offset(l), dims[l + 1]);
        dw.noalias() += delta * x.transpose();
        // Reduce into aligned storage first; summing straight into the map would make the
        // result depend on the buffer's address.
        const Eigen::VectorXf bias_grad = delta.rowwise().sum();
        db += bias_grad;
        if (l == 0 && d_input == nullptr) break;
        ConstMat w(params.data() + layout.weight_offset(l), dims[l + 1], dims[l]);
        Eigen::MatrixXf dx = w.transpose() * delta;
        if (l == 0) {
            *d_input = std::move(dx);
        } else {
            delta = (x.array() > 0.0f).select(dx, 0.0f);
        }
    }
}

}  // namespace mngp
