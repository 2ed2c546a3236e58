// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#include "mngp/encoding.hpp"

#include <algorithm>
#include <cmath>

namespace mngp {

double HashGridConfig::growth() const {
    if (levels <= 1) return 2.0;
    return std::exp(std::log(static_cast<double>(finest_resolution) / base_resolution) / (levels - 1));
}

void HashGridConfig::validate() const {
    if (levels < 1) throw ConfigError("hash grid needs at least one level");
    if (log2_table_size < 0 || log2_table_size > 30) throw ConfigError("log2 table size out of range");
    if (features < 1) throw ConfigError("hash grid needs at least one feature per entry");
    if (base_resolution < 1) throw ConfigError("base resolution must be >= 1");
    if (levels > 1 && !(growth() > 1.0)) throw ConfigError("finest resolution must exceed the base resolution");
}

HashGridLayout::HashGridLayout(const HashGridConfig& config) : config_(config) {
    config_.validate();
    const double b = config_.growth();
    std::size_t offset = 0;
    for (int l = 0; l < config_.levels; ++l) {
        const double scaled = config_.base_resolution * std::pow(b, l);
        GridLevel lvl;
        // Relative slack keeps exact powers (e.g. the finest level) from flooring one below.
        lvl.resolution = static_cast<int>(std::floor(scaled * (1.0 + 1e-9)));
        const std::uint64_t side = static_cast<std::uint64_t>(lvl.resolution) + 1;
        const std::uint64_t dense = side * side * side;
        lvl.hashed = dense > config_.table_size();
        lvl.length = static_cast<std::uint32_t>(std::min<std::uint64_t>(dense, config_.table_size()));
        lvl.offset = offset;
        offset += static_cast<std::size_t>(lvl.length) * config_.features;
        levels_.push_back(lvl);
    }
    param_count_ = offset;
}

void init_hash_tables(std::span<float> tables, Rng& rng) {
    std::uniform_real_distribution<float> dist(-1e-4f, 1e-4f);
    for (float& v : tables) v = dist(rng);
}

void mrhe_forward(const HashGridLayout& layout, std::span<const float> tables,
                  const Eigen::Ref<const Eigen::Matrix3Xf>& positions, Eigen::MatrixXf& features,
                  EncodingCache* cache) {
    MNGP_EXPECTS(tables.size() == layout.param_count(), "table size does not match the layout");
    const int n = static_cast<int>(positions.cols());
    const int n_levels = layout.config().levels;
    const int n_feat = layout.config().features;
    features.resize(layout.feature_dim(), n);
    if (cache) {
        cache->batch = n;
        cache->levels = n_levels;
        cache->index.resize(static_cast<std::size_t>(n) * n_levels * 8);
        cache->weight.resize(cache->index.size());
    }
    const auto levels = layout.levels();

    for (int s = 0; s < n; ++s) {
        float* out = features.col(s).data();
        for (int l = 0; l < n_levels; ++l) {
            const GridLevel& lvl = levels[l];
            std::array<std::uint32_t, 3> base{};
            std::array<float, 3> frac{};
            for (int a = 0; a < 3; ++a) {
                const float p = std::clamp(positions(a, s), 0.0f, 1.0f) * static_cast<float>(lvl.resolution);
                // The upper face belongs to the last cell so that corner + 1 stays within N_l.
                const int i = std::min(static_cast<int>(std::floor(p)), lvl.resolution - 1);
                base[a] = static_cast<std::uint32_t>(std::max(i, 0));
                frac[a] = p - static_cast<float>(base[a]);
            }
            const float* table = tables.data() + lvl.offset;
            float* f = out + l * n_feat;
            std::fill(f, f + n_feat, 0.0f);
            for (int c = 0; c < 8; ++c) {
                const std::array<std::uint32_t, 3> corner{base[0] + (c & 1), base[1] + ((c >> 1) & 1),
                                                          base[2] + ((c >> 2) & 1)};
                const float w = ((c & 1) ? frac[0] : 1.0f - frac[0]) * (((c >> 1) & 1) ? frac[1] : 1.0f - frac[1]) *
                                (((c >> 2) & 1) ? frac[2] : 1.0f - frac[2]);
                const std::uint32_t idx = hash_index(lvl.resolution, corner, lvl.length);
                const float* entry = table + static_cast<std::size_t>(idx) * n_feat;
                for (int k = 0; k < n_feat; ++k) f[k] += w * entry[k];
                if (cache) {
                    const std::size_t slot = (static_cast<std::size_t>(s) * n_levels + l) * 8 + c;
                    cache->index[slot] = idx;
                    cache->weight[slot] = w;
                }
            }
        }
    }
}

void mrhe_backward(const HashGridLayout& layout, const EncodingCache& cache,
                   const Eigen::Ref<const Eigen::MatrixXf>& d_features, std::span<float> d_tables) {
    MNGP_EXPECTS(d_features.cols() == cache.batch && d_features.rows() == layout.feature_dim(),
                 "feature gradient shape does not match the cached forward pass");
    MNGP_EXPECTS(cache.levels == layout.config().levels, "cache from a different grid");
    MNGP_EXPECTS(d_tables.size() == layout.param_count(), "gradient buffer does not match the layout");
    const int n_levels = layout.config().levels;
    const int n_feat = layout.config().features;
    const auto levels = layout.levels();
    for (int s = 0; s < cache.batch; ++s) {
        for (int l = 0; l < n_levels; ++l) {
            const float* g = d_features.col(s).data() + l * n_feat;
            bool any = false;
            for (int k = 0; k < n_feat; ++k) any |= (g[k] != 0.0f);
            if (!any) continue;
            float* table = d_tables.data() + levels[l].offset;
            const std::size_t base = (static_cast<std::size_t>(s) * n_levels + l) * 8;
            for (int c = 0; c < 8; ++c) {
                const float w = cache.weight[base + c];
                float* entry = table + static_cast<std::size_t>(cache.index[base + c]) * n_feat;
                for (int k = 0; k < n_feat; ++k) entry[k] += w * g[k];
            }
        }
    }
}

std::array<float, kShCoefficients> sh_encode(const Eigen::Vector3f& d) {
    const float x = d.x(), y = d.y(), z = d.z();
    const float xy = x * y, xz = x * z, yz = y * z;
    const float x2 = x * x, y2 = y * y, z2 = z * z;
    return {
        0.28209479177387814f,
        -0.48860251190291987f * y,
        0.48860251190291987f * z,
        -0.48860251190291987f * x,
        1.0925484305920792f * xy,
        -1.0925484305920792f * yz,
        0.94617469575755997f * z2 - 0.31539156525251999f,
        -1.0925484305920792f * xz,
        0.54627421529603959f * (x2 - y2),
        0.59004358992664352f * y * (y2 - 3.0f * x2),
        2.8906114426405538f * xy * z,
        0.45704579946446572f * y * (1.0f - 5.0f * z2),
        0.3731763325901154f * z * (5.0f * z2 - 3.0f),
        0.45704579946446572f * x * (1.0f - 5.0f * z2),
        1.4453057213202769f * z * (x2 - y2),
        0.59004358992664352f * x * (3.0f * y2 - x2),
    };
}

void sh_encode(const Eigen::Ref<const Eigen::Matrix3Xf>& directions, Eigen::Ref<Eigen::MatrixXf> out) {
    MNGP_EXPECTS(out.rows() == kShCoefficients && out.cols() == directions.cols(), "SH output shape mismatch");
    for (Eigen::Index s = 0; s < directions.cols(); ++s) {
        const auto coeffs = sh_encode(Eigen::Vector3f(directions.col(s)));
        for (int k = 0; k < kShCoefficients; ++k) out(k, s) = coeffs[k];
    }
}

}  // namespace mngp
