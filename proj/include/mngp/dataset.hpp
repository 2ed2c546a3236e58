// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mngp/common.hpp"
#include "mngp/image.hpp"

#include <Eigen/Geometry>

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mngp {

struct Aabb {
    Eigen::Vector3f min = Eigen::Vector3f::Zero();
    Eigen::Vector3f max = Eigen::Vector3f::Ones();
};

/// Pinhole camera. `pose` is camera-to-world in normalized scene units, OpenGL axes
/// (camera looks down -z, +y up).
struct Camera {
    int width = 0;
    int height = 0;
    float focal = 0.0f;
    Eigen::Matrix4f pose = Eigen::Matrix4f::Identity();

    Eigen::Vector3f position() const { return pose.block<3, 1>(0, 3); }
    Eigen::Matrix3f rotation() const { return pose.block<3, 3>(0, 0); }
    /// Checks focal/size positivity and rotation orthonormality (1e-4).
    void validate() const;
};

enum class Split { train, test };

struct Ray {
    Eigen::Vector3f origin = Eigen::Vector3f::Zero();
    Eigen::Vector3f direction = Eigen::Vector3f(0.0f, 0.0f, -1.0f);
    float t_near = 0.0f;
    float t_far = 0.0f;

    bool hits() const { return t_far > t_near; }
};

struct Scene {
    std::vector<Camera> cameras;
    std::vector<Image> images;
    std::vector<Split> split;
    int channels = 3;
    Aabb bounds;

    std::vector<int> frames(Split s) const;
    std::size_t frame_count() const { return cameras.size(); }
};

/// Maps dataset world coordinates into the unit cube: x' = scale * x + offset.
struct SceneNormalization {
    float scale = 1.0f / 3.0f;
    Eigen::Vector3f offset = Eigen::Vector3f::Constant(0.5f);
};

struct LoadOptions {
    /// Output image width; the source width must be an integer multiple of it.
    int target_resolution = 160;
    int channels = 3;
    SceneNormalization normalization{};
    /// Caps frames per split (0 = all). Used for quick experiments.
    int max_train_frames = 0;
    int max_test_frames = 0;
};

/// Loads a NeRF-synthetic style directory (transforms_train.json + transforms_test.json).
Scene load_scene(const std::filesystem::path& root, const LoadOptions& options);

/// RGBA8 -> composited on white -> box-downscaled by `factor` -> optional BT.601 luminance.
Image preprocess_image(const Rgba8Image& src, int factor, int channels);

float focal_from_fov(int width, double camera_angle_x);

/// Slab-method intersection; a miss gives t_near == t_far. t_near is clamped to 0.
std::pair<float, float> intersect_aabb(const Eigen::Vector3f& origin, const Eigen::Vector3f& dir,
                                       const Aabb& box);

Ray generate_ray(const Camera& camera, int u, int v, const Aabb& bounds = {});

enum class PartitionMode { iid, non_iid };

PartitionMode parse_partition_mode(const std::string& s);
std::string to_string(PartitionMode m);

struct PartitionPlan {
    PartitionMode mode = PartitionMode::iid;
    int n_clients = 1;
    /// Parallel arrays: training frame id and the client that owns it.
    std::vector<int> frames;
    std::vector<int> clients;

    std::vector<int> client_frames(int client) const;
};

/// Camera azimuth around the vertical (z) axis of the scene center, radians in (-pi, pi].
float camera_azimuth(const Camera& camera, const Aabb& bounds = {});

PartitionPlan partition(const Scene& scene, int n_clients, PartitionMode mode, std::uint64_t seed);

void write_partition(const std::filesystem::path& path, const PartitionPlan& plan);

struct PixelSample {
    int frame = 0;
    int u = 0;
    int v = 0;
    std::array<float, 3> color{};
};

/// Picks `img_per_step` frames from `frames`, then `n_rays` pixels uniformly (with replacement)
/// from those frames.
std::vector<PixelSample> sample_training_pixels(const Scene& scene, std::span<const int> frames, Rng& rng,
                                                int n_rays, int img_per_step);

}  // namespace mngp
