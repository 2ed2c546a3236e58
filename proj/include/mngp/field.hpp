// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mngp/common.hpp"
#include "mngp/encoding.hpp"
#include "mngp/mlp.hpp"

#include <span>
#include <string>
#include <vector>

namespace mngp {

enum class Precision { full32, mixed16 };

Precision parse_precision(const std::string& s);
std::string to_string(Precision p);

struct FieldConfig {
    HashGridConfig grid{};
    int channels = 3;
    Precision precision = Precision::mixed16;
    int hidden_width = 64;
    /// Width of the geometry feature vector h passed from the density to the color network.
    int geo_features = 15;
};

/// One named slice of the flat parameter buffer.
struct TensorInfo {
    std::string name;
    std::size_t offset = 0;
    std::size_t count = 0;
    std::vector<std::uint64_t> dims;
    bool mlp = false;
};

inline constexpr float kDensityClamp = 15.0f;

/// All trainable state of the radiance field: packed hash tables followed by the density
/// network (L*F -> 64 -> 1 + 15) and the color network (15 + 16 -> 64 -> 64 -> channels).
class FieldModel {
public:
    explicit FieldModel(const FieldConfig& config = {});

    void initialize(std::uint64_t seed);

    const FieldConfig& config() const { return config_; }
    const HashGridLayout& grid() const { return grid_; }
    const MlpLayout& density_mlp() const { return density_; }
    const MlpLayout& color_mlp() const { return color_; }
    int channels() const { return config_.channels; }
    Precision precision() const { return config_.precision; }

    std::span<float> params() { return params_; }
    std::span<const float> params() const { return params_; }
    std::span<const float> grid_params() const { return std::span<const float>(params_).first(grid_.param_count()); }
    std::size_t param_count() const { return params_.size(); }
    /// Index of the first MLP parameter; everything before it is hash-table storage.
    std::size_t mlp_begin() const { return grid_.param_count(); }

    const std::vector<TensorInfo>& tensors() const { return tensors_; }
    const TensorInfo* find_tensor(const std::string& name) const;

    /// Rounds every parameter to the storage precision (no-op at full32).
    void quantize_to_storage();
    float storage_round(float v) const { return config_.precision == Precision::mixed16 ? round_to_half(v) : v; }

private:
    FieldConfig config_;
    HashGridLayout grid_;
    MlpLayout density_;
    MlpLayout color_;
    std::vector<float> params_;
    std::vector<TensorInfo> tensors_;
};

struct FieldCache {
    EncodingCache encoding;
    MlpCache density;
    MlpCache color;
    Eigen::VectorXf raw_density;  // pre-activation log-density
    Eigen::VectorXf sigma;
    Eigen::MatrixXf color_out;    // post-logistic
};

struct FieldOutput {
    Eigen::VectorXf sigma;
    Eigen::MatrixXf color;  // channels x batch
    FieldCache cache;
};

/// sigma = exp(clamp(raw, -15, 15)); color = logistic(color_mlp([h, SH(d)])).
FieldOutput field_forward(const FieldModel& model, const Eigen::Ref<const Eigen::Matrix3Xf>& positions,
                          const Eigen::Ref<const Eigen::Matrix3Xf>& directions);

/// Density path only, no cache.
Eigen::VectorXf field_density(const FieldModel& model, const Eigen::Ref<const Eigen::Matrix3Xf>& positions);

/// Accumulates gradients w.r.t. all parameters into `grad` (full precision, flat layout).
void field_backward(const FieldModel& model, const FieldCache& cache, const Eigen::Ref<const Eigen::VectorXf>& d_sigma,
                    const Eigen::Ref<const Eigen::MatrixXf>& d_color, std::span<float> grad);

}  // namespace mngp
