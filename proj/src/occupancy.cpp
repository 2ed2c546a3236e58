// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#include "mngp/occupancy.hpp"

#include "mngp/field.hpp"
#include "mngp/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace mngp {

OccupancyGrid::OccupancyGrid(const OccupancyConfig& config) : config_(config) {
    if (config_.resolution < 1) throw ConfigError("occupancy resolution must be >= 1");
    if (!(config_.decay >= 0.0f && config_.decay <= 1.0f)) throw ConfigError("occupancy decay must lie in [0,1]");
    const auto r = static_cast<std::size_t>(config_.resolution);
    ema_.assign(r * r * r, 0.0f);
    bits_.assign((ema_.size() + 63) / 64, 0);
    effective_threshold_ = config_.threshold;
    fill(true);
}

bool OccupancyGrid::is_occupied(const Eigen::Vector3f& x) const {
    const int r = config_.resolution;
    int c[3];
    for (int a = 0; a < 3; ++a) {
        c[a] = std::clamp(static_cast<int>(std::floor(x[a] * static_cast<float>(r))), 0, r - 1);
    }
    return occupied_cell(cell_index(c[0], c[1], c[2]));
}

std::size_t OccupancyGrid::occupied_count() const {
    std::size_t n = 0;
    for (auto w : bits_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
}

void OccupancyGrid::fill(bool occupied) {
    std::fill(bits_.begin(), bits_.end(), occupied ? ~std::uint64_t{0} : std::uint64_t{0});
    const std::size_t tail = ema_.size() & 63;
    if (occupied && tail != 0) bits_.back() = (std::uint64_t{1} << tail) - 1;
}

void OccupancyGrid::set_cell(std::size_t cell, bool occupied) {
    const std::uint64_t mask = std::uint64_t{1} << (cell & 63);
    if (occupied) {
        bits_[cell >> 6] |= mask;
    } else {
        bits_[cell >> 6] &= ~mask;
    }
}

void OccupancyGrid::recompute_bits() {
    double mean = 0.0;
    for (float v : ema_) mean += v;
    mean = ema_.empty() ? 0.0 : mean / static_cast<double>(ema_.size());
    effective_threshold_ = std::min(config_.threshold, static_cast<float>(mean) * kMarchStep);
    std::vector<std::uint64_t> bits(bits_.size(), 0);
    for (std::size_t i = 0; i < ema_.size(); ++i) {
        if (threshold_rule(ema_[i])) bits[i >> 6] |= std::uint64_t{1} << (i & 63);
    }
    bits_.swap(bits);
}

void OccupancyGrid::set_density_ema(std::vector<float> ema) {
    MNGP_EXPECTS(ema.size() == ema_.size(), "density EMA size mismatch");
    for (float& v : ema) {
        v = std::max(v, 0.0f);
        if (config_.storage16) v = round_to_half(v);
    }
    ema_.swap(ema);
    recompute_bits();
}

void OccupancyGrid::update(const DensityFn& density, Rng& rng, int threads) {
    const int r = config_.resolution;
    const std::size_t n = ema_.size();
    const float inv_r = 1.0f / static_cast<float>(r);
    std::vector<float> next(n);
    std::uniform_real_distribution<float> jitter(0.0f, 1.0f);

    constexpr std::size_t kChunk = 1 << 14;
    Eigen::Matrix3Xf pos;
    Eigen::VectorXf sigma;
    for (std::size_t begin = 0; begin < n; begin += kChunk) {
        const std::size_t count = std::min(kChunk, n - begin);
        pos.resize(3, static_cast<Eigen::Index>(count));
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t cell = begin + i;
            const std::size_t x = cell % r, y = (cell / r) % r, z = cell / (static_cast<std::size_t>(r) * r);
            pos(0, i) = (static_cast<float>(x) + jitter(rng)) * inv_r;
            pos(1, i) = (static_cast<float>(y) + jitter(rng)) * inv_r;
            pos(2, i) = (static_cast<float>(z) + jitter(rng)) * inv_r;
        }
        pos = pos.cwiseMin(1.0f);
        sigma.resize(static_cast<Eigen::Index>(count));
        parallel_for(count, threads, [&](std::size_t b, std::size_t e) {
            Eigen::VectorXf part;
            density(pos.middleCols(b, e - b), part);
            sigma.segment(b, e - b) = part;
        });
        for (std::size_t i = 0; i < count; ++i) {
            float v = std::max(config_.decay * ema_[begin + i], std::max(sigma[i], 0.0f));
            if (config_.storage16) v = round_to_half(v);
            next[begin + i] = v;
        }
    }
    ema_.swap(next);
    recompute_bits();
}

void update_grid(OccupancyGrid& grid, const FieldModel& model, Rng& rng, int threads) {
    grid.update([&model](const Eigen::Matrix3Xf& p, Eigen::VectorXf& s) { s = field_density(model, p); }, rng,
                threads);
}

}  // namespace mngp
