// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#include "mngp/field.hpp"

#include <algorithm>
#include <cmath>

namespace mngp {

Precision parse_precision(const std::string& s) {
    if (s == "full32" || s == "fp32") return Precision::full32;
    if (s == "mixed16" || s == "fp16") return Precision::mixed16;
    throw ConfigError("unknown precision '" + s + "' (expected full32 or mixed16)");
}

std::string to_string(Precision p) { return p == Precision::full32 ? "full32" : "mixed16"; }

FieldModel::FieldModel(const FieldConfig& config) : config_(config), grid_(config.grid) {
    if (config_.channels != 1 && config_.channels != 3) throw ConfigError("channels must be 1 or 3");
    if (config_.hidden_width < 1 || config_.geo_features < 0) throw ConfigError("bad MLP widths");
    const int h = config_.hidden_width;
    density_ = MlpLayout({grid_.feature_dim(), h, 1 + config_.geo_features}, grid_.param_count());
    color_ = MlpLayout({config_.geo_features + kShCoefficients, h, h, config_.channels}, density_.end());
    params_.assign(color_.end(), 0.0f);

    for (int l = 0; l < config_.grid.levels; ++l) {
        const GridLevel& lvl = grid_.levels()[l];
        tensors_.push_back({"grid.level" + std::to_string(l), lvl.offset,
                            static_cast<std::size_t>(lvl.length) * config_.grid.features,
                            {lvl.length, static_cast<std::uint64_t>(config_.grid.features)}, false});
    }
    auto add_mlp = [&](const MlpLayout& m, const std::string& prefix) {
        const auto& d = m.dims();
        for (int l = 0; l < m.layer_count(); ++l) {
            tensors_.push_back({prefix + ".w" + std::to_string(l), m.weight_offset(l),
                                static_cast<std::size_t>(d[l + 1]) * d[l],
                                {static_cast<std::uint64_t>(d[l + 1]), static_cast<std::uint64_t>(d[l])}, true});
            tensors_.push_back({prefix + ".b" + std::to_string(l), m.bias_offset(l), static_cast<std::size_t>(d[l + 1]),
                                {static_cast<std::uint64_t>(d[l + 1])}, true});
        }
    };
    add_mlp(density_, "mlp.density");
    add_mlp(color_, "mlp.color");
}

void FieldModel::initialize(std::uint64_t seed) {
    Rng rng(seed);
    init_hash_tables(std::span<float>(params_).first(grid_.param_count()), rng);
    init_mlp(density_, params_, rng);
    init_mlp(color_, params_, rng);
    quantize_to_storage();
}

const TensorInfo* FieldModel::find_tensor(const std::string& name) const {
    for (const auto& t : tensors_) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

void FieldModel::quantize_to_storage() {
    if (config_.precision != Precision::mixed16) return;
    for (float& v : params_) v = round_to_half(v);
}

namespace {

void density_path(const FieldModel& model, const Eigen::Ref<const Eigen::Matrix3Xf>& positions,
                  Eigen::MatrixXf& density_out, FieldCache* cache) {
    Eigen::MatrixXf features;
    mrhe_forward(model.grid(), model.grid_params(), positions, features, cache ? &cache->encoding : nullptr);
    mlp_forward(model.density_mlp(), model.params(), features, density_out, cache ? &cache->density : nullptr);
}

inline float density_activation(float raw) { return std::exp(std::clamp(raw, -kDensityClamp, kDensityClamp)); }

}  // namespace

FieldOutput field_forward(const FieldModel& model, const Eigen::Ref<const Eigen::Matrix3Xf>& positions,
                          const Eigen::Ref<const Eigen::Matrix3Xf>& directions) {
    MNGP_EXPECTS(positions.cols() == directions.cols(), "positions and directions differ in batch size");
    const Eigen::Index n = positions.cols();
    const int geo = model.config().geo_features;
    FieldOutput out;
    FieldCache& cache = out.cache;
    if (n == 0) {
        out.color.resize(model.channels(), 0);
        cache.color_out = out.color;
        return out;
    }

    Eigen::MatrixXf density_out;
    density_path(model, positions, density_out, &cache);
    cache.raw_density = density_out.row(0).transpose();
    cache.sigma = cache.raw_density.unaryExpr(&density_activation);

    Eigen::MatrixXf color_in(geo + kShCoefficients, n);
    color_in.topRows(geo) = density_out.bottomRows(geo);
    sh_encode(directions, color_in.bottomRows(kShCoefficients));

    Eigen::MatrixXf logits;
    mlp_forward(model.color_mlp(), model.params(), color_in, logits, &cache.color);
    cache.color_out = (1.0f / (1.0f + (-logits.array()).exp())).matrix();

    out.sigma = cache.sigma;
    out.color = cache.color_out;
    return out;
}

Eigen::VectorXf field_density(const FieldModel& model, const Eigen::Ref<const Eigen::Matrix3Xf>& positions) {
    Eigen::MatrixXf density_out;
    density_path(model, positions, density_out, nullptr);
    return density_out.row(0).transpose().unaryExpr(&density_activation);
}

void field_backward(const FieldModel& model, const FieldCache& cache, const Eigen::Ref<const Eigen::VectorXf>& d_sigma,
                    const Eigen::Ref<const Eigen::MatrixXf>& d_color, std::span<float> grad) {
    const Eigen::Index n = cache.sigma.size();
    MNGP_EXPECTS(n > 0 || cache.color_out.cols() == 0, "missing field cache");
    MNGP_EXPECTS(d_sigma.size() == n && d_color.cols() == n && d_color.rows() == model.channels(),
                 "field gradient shape mismatch");
    MNGP_EXPECTS(grad.size() == model.param_count(), "gradient buffer does not match the model");
    if (n == 0) return;
    const int geo = model.config().geo_features;

    // logistic'(z) = c (1 - c)
    const Eigen::MatrixXf d_logits =
        (d_color.array() * cache.color_out.array() * (1.0f - cache.color_out.array())).matrix();
    Eigen::MatrixXf d_color_in;
    mlp_backward(model.color_mlp(), model.params(), cache.color, d_logits, &d_color_in, grad);

    Eigen::MatrixXf d_density_out(1 + geo, n);
    for (Eigen::Index s = 0; s < n; ++s) {
        const float raw = cache.raw_density[s];
        const bool live = raw > -kDensityClamp && raw < kDensityClamp;
        d_density_out(0, s) = live ? cache.sigma[s] * d_sigma[s] : 0.0f;
    }
    d_density_out.bottomRows(geo) = d_color_in.topRows(geo);

    Eigen::MatrixXf d_features;
    mlp_backward(model.density_mlp(), model.params(), cache.density, d_density_out, &d_features, grad);
    mrhe_backward(model.grid(), cache.encoding, d_features, grad.first(model.grid().param_count()));
}

}  // namespace mngp
