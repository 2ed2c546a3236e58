// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mngp/common.hpp"

#include <functional>
#include <vector>

namespace mngp {

class FieldModel;

struct OccupancyConfig {
    int resolution = 128;
    float decay = 0.95f;
    float threshold = 0.01f;
    /// Density EMA kept at binary16 precision.
    bool storage16 = true;
};

/// Evaluates density at a batch of positions (3 x n) into `sigma` (n).
using DensityFn = std::function<void(const Eigen::Matrix3Xf& positions, Eigen::VectorXf& sigma)>;

/// Max-decay EMA of sampled density per cell, binarized into an occupancy bitfield.
/// A cell is occupied when one marching step through it would exceed the opacity threshold,
/// lowered to the grid's mean step opacity so that an undertrained field never empties the grid.
/// Starts fully occupied with zero EMA so early training sees the whole volume.
class OccupancyGrid {
public:
    explicit OccupancyGrid(const OccupancyConfig& config = {});

    const OccupancyConfig& config() const { return config_; }
    int resolution() const { return config_.resolution; }
    std::size_t cell_count() const { return ema_.size(); }

    std::size_t cell_index(int x, int y, int z) const {
        const auto r = static_cast<std::size_t>(config_.resolution);
        return static_cast<std::size_t>(x) + r * (static_cast<std::size_t>(y) + r * static_cast<std::size_t>(z));
    }

    bool occupied_cell(std::size_t cell) const { return (bits_[cell >> 6] >> (cell & 63)) & 1u; }
    bool is_occupied(const Eigen::Vector3f& x) const;
    std::size_t occupied_count() const;

    const std::vector<float>& density_ema() const { return ema_; }

    /// Replaces the EMA (rounded to storage precision) and recomputes every bit.
    void set_density_ema(std::vector<float> ema);
    /// Overrides bits directly (tests, warm-up, disabling skipping).
    void fill(bool occupied);
    void set_cell(std::size_t cell, bool occupied);

    /// ema <- max(decay * ema, sigma(jittered point in cell)) for every cell, then re-threshold.
    void update(const DensityFn& density, Rng& rng, int threads = 1);

    bool threshold_rule(float ema) const { return ema * kMarchStep > effective_threshold_; }
    /// min(threshold, mean of ema * march step) as of the last re-threshold.
    float effective_threshold() const { return effective_threshold_; }

private:
    void recompute_bits();

    OccupancyConfig config_;
    std::vector<float> ema_;
    std::vector<std::uint64_t> bits_;
    float effective_threshold_ = 0.0f;
};

/// Runs OccupancyGrid::update with the model's density network.
void update_grid(OccupancyGrid& grid, const FieldModel& model, Rng& rng, int threads = 1);

}  // namespace mngp
