// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mngp/dataset.hpp"
#include "mngp/field.hpp"
#include "mngp/occupancy.hpp"
#include "mngp/optimizer.hpp"
#include "mngp/renderer.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace mngp {

struct TrainConfig {
    int steps = 10000;
    /// Effective batch B in samples; must equal tile * accumulation.
    int batch = 8192;
    int tile = 1024;
    int img_per_step = 1;
    AdamConfig adam{};
    float huber_delta = 0.1f;
    int grid_update_every = 256;
    std::uint64_t seed = 42;
    int max_samples = kMaxSamplesPerRay;
    int threads = 1;

    FieldConfig field{};
    OccupancyConfig occupancy{};

    /// Periodic evaluation on `eval_images` evenly spaced test frames (0 = all).
    int eval_every = 1000;
    int eval_images = 8;
    int checkpoint_every = 1000;

    int accumulation() const { return tile > 0 ? batch / tile : 0; }
    void validate() const;
};

struct HuberResult {
    double loss = 0.0;
    Eigen::MatrixXf d_pred;
};

/// Elementwise Huber loss averaged over all elements (`normalizer` overrides the element count,
/// which lets several tiles share one mean).
HuberResult huber_loss(const Eigen::Ref<const Eigen::MatrixXf>& pred, const Eigen::Ref<const Eigen::MatrixXf>& target,
                       float delta, double normalizer = 0.0);

/// Exponentially averaged samples-per-ray estimate that sizes the ray count of each tile.
struct SampleBudget {
    float mean_samples_per_ray = 16.0f;
    float decay = 0.9f;

    int rays_for_tile(int tile_size) const;
    void update(float observed_mean) { mean_samples_per_ray = decay * mean_samples_per_ray + (1.0f - decay) * observed_mean; }
};

/// Whole rays packed into at most `tile_size` samples, with their target colours.
struct TrainingTile {
    SampleBatch batch;
    Eigen::MatrixXf targets;  // channels x rays
};

TrainingTile build_tile(const Scene& scene, std::span<const int> frames, const OccupancyGrid& grid, Rng& rng,
                        int tile_size, int img_per_step, SampleBudget& budget, int max_samples = kMaxSamplesPerRay);

/// Concatenates tiles into one batch (rays keep their order).
TrainingTile merge_tiles(std::span<const TrainingTile> tiles);

/// Forward + loss + backward for one tile, adding gradients into `grad`. Returns the tile's
/// share of the loss (sum of Huber terms / normalizer).
double accumulate_tile_gradient(const FieldModel& model, const TrainingTile& tile,
                                const Eigen::Ref<const Eigen::VectorXf>& background, float huber_delta,
                                double normalizer, std::span<float> grad);

/// Owns one model, its occupancy grid and optimizer state, and trains on a fixed frame set.
class Trainer {
public:
    Trainer(const Scene& scene, std::vector<int> frames, const TrainConfig& config, std::uint64_t seed);
    Trainer(const Scene& scene, std::vector<int> frames, const TrainConfig& config, std::uint64_t seed,
            FieldModel model, OccupancyGrid grid);

    /// One optimizer step over `accumulation` tiles. On multiples of grid_update_every the
    /// occupancy grid is refreshed first. Returns the step's loss.
    double step();

    FieldModel& model() { return model_; }
    const FieldModel& model() const { return model_; }
    OccupancyGrid& grid() { return grid_; }
    const OccupancyGrid& grid() const { return grid_; }
    AdamState& adam() { return adam_; }
    const AdamState& adam() const { return adam_; }
    const SampleBudget& budget() const { return budget_; }
    const std::vector<int>& frames() const { return frames_; }
    std::uint64_t steps_done() const { return steps_done_; }
    const TrainConfig& config() const { return config_; }
    Rng& rng() { return rng_; }

    void refresh_grid();
    /// Replaces parameters with externally supplied ones. Master weights follow every changed
    /// value; moments stay.
    void receive_parameters(std::span<const float> params);

private:
    const Scene& scene_;
    std::vector<int> frames_;
    TrainConfig config_;
    FieldModel model_;
    OccupancyGrid grid_;
    AdamState adam_;
    Rng rng_;
    SampleBudget budget_;
    std::vector<float> grad_;
    Eigen::VectorXf background_;
    std::uint64_t steps_done_ = 0;
};

struct EvalResult {
    double psnr = 0.0;
    double ssim = 0.0;
    double mean_samples_per_pixel = 0.0;
    int images = 0;
};

/// Evenly spaced subset of `frames` (count <= 0 returns all).
std::vector<int> spaced_subset(const std::vector<int>& frames, int count);

EvalResult evaluate(const FieldModel& model, const OccupancyGrid& grid, const Scene& scene,
                    const std::vector<int>& frames, int threads = 1);

struct TrainLogEntry {
    std::uint64_t step = 0;
    double loss = 0.0;
    std::optional<double> psnr;
    double elapsed_ms = 0.0;
};

struct TrainLog {
    std::vector<TrainLogEntry> entries;
    void write_csv(const std::filesystem::path& path) const;
};

struct TrainResult {
    FieldModel model;
    OccupancyGrid grid;
    AdamState adam;
    TrainLog log;
};

/// Full training loop. With `out_dir`, writes periodic renders, render stats, checkpoints
/// every `checkpoint_every` steps plus final.tdnf, and train_log.csv.
TrainResult train(const Scene& scene, const TrainConfig& config, std::optional<std::vector<int>> frames = std::nullopt,
                  const std::optional<std::filesystem::path>& out_dir = std::nullopt);

}  // namespace mngp
