// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mngp/common.hpp"

#include <filesystem>

namespace mngp {

/// Procedural stand-in for a NeRF-synthetic scene: a few shaded spheres and boxes over a
/// checkered slab, written as RGBA PNGs with transparent background plus transforms_*.json.
struct SyntheticOptions {
    int width = 160;
    int train_frames = 100;
    int test_frames = 200;
    double camera_angle_x = 0.6911112070083618;
    double radius = 4.031128857175551;
    std::uint64_t seed = 7;
};

void write_synthetic_scene(const std::filesystem::path& root, const SyntheticOptions& options);

}  // namespace mngp
