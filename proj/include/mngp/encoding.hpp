// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mngp/common.hpp"

#include <array>
#include <span>
#include <vector>

namespace mngp {

/// Multi-resolution hash grid hyperparameters.
struct HashGridConfig {
    int levels = 16;
    int log2_table_size = 13;
    int features = 2;
    int base_resolution = 16;
    /// Resolution of the finest level; the per-level growth factor is derived from it.
    int finest_resolution = 2048;

    std::uint32_t table_size() const { return std::uint32_t{1} << log2_table_size; }
    double growth() const;
    void validate() const;
};

struct GridLevel {
    int resolution = 0;       // N_l: cells per axis, N_l + 1 vertices
    std::uint32_t length = 0; // entries in this level's table
    std::size_t offset = 0;   // first float of the level inside the packed tables
    bool hashed = false;
};

/// Per-level resolutions and table sizes of a hash grid, plus the offsets of each level inside
/// one packed parameter array (entry-major, `features` floats per entry).
class HashGridLayout {
public:
    HashGridLayout() = default;
    explicit HashGridLayout(const HashGridConfig& config);

    const HashGridConfig& config() const { return config_; }
    std::span<const GridLevel> levels() const { return levels_; }
    std::size_t param_count() const { return param_count_; }
    int feature_dim() const { return config_.levels * config_.features; }

private:
    HashGridConfig config_{};
    std::vector<GridLevel> levels_;
    std::size_t param_count_ = 0;
};

inline constexpr std::uint32_t kHashPrime1 = 1u;
inline constexpr std::uint32_t kHashPrime2 = 2654435761u;
inline constexpr std::uint32_t kHashPrime3 = 805459861u;

/// Entry index of a grid vertex. Dense linear indexing when the whole level fits in
/// `table_len`, otherwise the XOR-prime spatial hash modulo `table_len`.
inline std::uint32_t hash_index(int level_resolution, const std::array<std::uint32_t, 3>& corner,
                                std::uint32_t table_len) {
    const std::uint64_t side = static_cast<std::uint64_t>(level_resolution) + 1;
    if (side * side * side <= table_len) {
        return static_cast<std::uint32_t>(corner[0] + corner[1] * side + corner[2] * side * side);
    }
    const std::uint32_t h = (corner[0] * kHashPrime1) ^ (corner[1] * kHashPrime2) ^ (corner[2] * kHashPrime3);
    return h % table_len;
}

/// Corner entries and trilinear weights of every (sample, level), 8 corners each, kept for backward.
struct EncodingCache {
    int batch = 0;
    int levels = 0;
    std::vector<std::uint32_t> index;  // [sample][level][corner], level-local entry index
    std::vector<float> weight;         // same layout
};

/// Uniform init in [-1e-4, 1e-4].
void init_hash_tables(std::span<float> tables, Rng& rng);

/// Encodes positions in [0,1]^3 (3 x batch) into features (L*F x batch).
void mrhe_forward(const HashGridLayout& layout, std::span<const float> tables,
                  const Eigen::Ref<const Eigen::Matrix3Xf>& positions, Eigen::MatrixXf& features,
                  EncodingCache* cache);

/// Scatters feature gradients into `d_tables` (same layout as the tables), accumulating.
void mrhe_backward(const HashGridLayout& layout, const EncodingCache& cache,
                   const Eigen::Ref<const Eigen::MatrixXf>& d_features, std::span<float> d_tables);

inline constexpr int kShCoefficients = 16;

/// Real spherical harmonics through degree 3 of a unit direction, l-major / m ascending.
std::array<float, kShCoefficients> sh_encode(const Eigen::Vector3f& d);

/// Batched sh_encode: directions 3 x batch into `out` (16 x batch).
void sh_encode(const Eigen::Ref<const Eigen::Matrix3Xf>& directions, Eigen::Ref<Eigen::MatrixXf> out);

}  // namespace mngp
