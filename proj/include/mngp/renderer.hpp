// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mngp/dataset.hpp"
#include "mngp/field.hpp"
#include "mngp/occupancy.hpp"

#include <vector>

namespace mngp {

inline constexpr int kMaxSamplesPerRay = 1024;
inline constexpr int kDefaultTile = 1024;
inline constexpr float kTransmittanceCutoff = 1e-4f;
/// Rays marched concurrently by render_image.
inline constexpr int kRaysInFlight = 4096;
/// Upper bound on samples a live ray marches per render round.
inline constexpr int kMaxStepsPerRound = 16;

struct RaySpan {
    std::uint32_t offset = 0;
    std::uint32_t count = 0;
};

/// Flattened ray samples. Samples of one ray are contiguous and ordered by t.
struct SampleBatch {
    std::vector<float> positions;   // 3 per sample
    std::vector<float> directions;  // 3 per sample
    std::vector<float> dt;
    std::vector<std::uint32_t> ray_id;
    std::vector<RaySpan> rays;

    std::size_t size() const { return dt.size(); }
    std::size_t ray_count() const { return rays.size(); }
    void clear();
    void reserve(std::size_t samples, std::size_t n_rays);
    /// Appends `other`, renumbering its rays after ours.
    void append(const SampleBatch& other);

    Eigen::Map<const Eigen::Matrix3Xf> position_matrix() const {
        return {positions.data(), 3, static_cast<Eigen::Index>(size())};
    }
    Eigen::Map<const Eigen::Matrix3Xf> direction_matrix() const {
        return {directions.data(), 3, static_cast<Eigen::Index>(size())};
    }
};

/// Fixed-step march from t_near; a step emits its midpoint only if that cell is occupied.
/// Appends one ray (possibly empty) to `out` and returns the number of samples emitted.
int march_ray(const Ray& ray, const OccupancyGrid& grid, int max_samples, SampleBatch& out);

struct CompositeCache {
    Eigen::VectorXf transmittance;  // T_i before each sample
    std::vector<std::uint32_t> used;  // samples composited per ray before early termination
};

struct RenderResult {
    Eigen::MatrixXf color;  // channels x rays
    Eigen::VectorXf opacity;
    Eigen::VectorXf weights;  // per sample
    CompositeCache cache;
};

/// Front-to-back alpha compositing over an arbitrary background colour.
RenderResult composite(const Eigen::Ref<const Eigen::VectorXf>& sigma, const Eigen::Ref<const Eigen::MatrixXf>& color,
                       const SampleBatch& batch, const Eigen::Ref<const Eigen::VectorXf>& background);

struct CompositeGrad {
    Eigen::VectorXf d_sigma;
    Eigen::MatrixXf d_color;
};

/// Exact reverse mode of `composite` (including the background term through opacity).
CompositeGrad composite_backward(const Eigen::Ref<const Eigen::VectorXf>& sigma,
                                 const Eigen::Ref<const Eigen::MatrixXf>& color, const SampleBatch& batch,
                                 const Eigen::Ref<const Eigen::VectorXf>& background, const RenderResult& forward,
                                 const Eigen::Ref<const Eigen::MatrixXf>& d_ray_color);

struct RenderStats {
    std::size_t pixels = 0;
    /// Samples composited before early termination.
    std::size_t total_samples = 0;
    /// Samples run through the field, including the tail of each ray's last round.
    std::size_t evaluated_samples = 0;
    std::size_t tiles = 0;
    double mean_samples_per_pixel() const { return pixels ? static_cast<double>(total_samples) / pixels : 0.0; }
};

struct RenderedImage {
    Image image;
    RenderStats stats;
};

struct RenderOptions {
    int tile = kDefaultTile;
    int max_samples = kMaxSamplesPerRay;
    int threads = 1;
};

/// White in every channel, matching the loader's alpha compositing.
Eigen::VectorXf default_background(int channels);

/// Renders every pixel. Rays march in short rounds and stop once transmittance drops below
/// kTransmittanceCutoff; each round's samples go through the field in `tile`-sized chunks.
/// The image equals compositing the fully marched rays.
RenderedImage render_image(const FieldModel& model, const OccupancyGrid& grid, const Camera& camera,
                           const Eigen::Ref<const Eigen::VectorXf>& background, const Aabb& bounds = {},
                           const RenderOptions& options = {});

}  // namespace mngp
