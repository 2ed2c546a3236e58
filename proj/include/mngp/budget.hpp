// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mngp/dataset.hpp"
#include "mngp/field.hpp"
#include "mngp/occupancy.hpp"
#include "mngp/trainer.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mngp {

struct SceneSpec {
    int frames = 100;
    int width = 160;
    int height = 160;
    int channels = 3;
    int img_per_step = 1;
};

struct BudgetReport {
    std::uint64_t hash_bytes = 0;
    std::uint64_t mlp_bytes = 0;
    std::uint64_t optimizer_bytes = 0;
    std::uint64_t gradient_bytes = 0;
    std::uint64_t grid_bytes = 0;
    std::uint64_t activation_bytes = 0;
    std::uint64_t image_bytes = 0;
    /// Images resident during one step; reported beside the total, not inside it.
    std::uint64_t image_step_bytes = 0;
    /// The same working set counted at the source resolution (800x800 RGBA), for comparison.
    std::uint64_t source_image_step_bytes = 0;
    double ops_per_step = 0.0;

    std::uint64_t total_bytes() const;
    std::string to_text() const;
};

/// Values cached per sample for the backward pass (encoding, both networks, compositing).
std::size_t activation_elements_per_sample(const FieldModel& model);

/// Multiply-accumulates per sample for one forward + backward pass.
double macs_per_sample(const FieldModel& model);

/// 2 * MACs for one optimizer step of `batch` samples.
double ops_per_step(const FieldModel& model, int batch);

BudgetReport memory_footprint(const FieldConfig& field, const OccupancyConfig& occupancy, int batch,
                              const SceneSpec& scene);

struct SweepPoint {
    int batch = 8192;
    int log2_table_size = 13;
};

struct SweepRow {
    SweepPoint point;
    BudgetReport budget;
    double psnr = 0.0;
    double ssim = 0.0;
    bool selected = false;
};

inline constexpr SweepPoint kSelectedPoint{8192, 13};

/// Default grid: B in {2k, 4k, 8k, 16k} x log2(T) in {12..15}.
std::vector<SweepPoint> default_sweep_points();

/// Trains and evaluates every point for `base.steps` steps (tile shrinks to B when B < tile).
std::vector<SweepRow> sweep(const Scene& scene, const std::vector<SweepPoint>& points, const TrainConfig& base,
                            int eval_images);

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

}  // namespace mngp
