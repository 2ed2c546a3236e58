// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mngp/dataset.hpp"
#include "mngp/synthetic.hpp"
#include "mngp/trainer.hpp"

#include <filesystem>
#include <string>
#include <unistd.h>

namespace mngp::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("mngp_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// A small procedural scene written once per test process (32 px, 12 train / 4 test views).
inline const std::filesystem::path& small_scene_dir() {
    static TempDir dir("scene");
    static const bool written = [] {
        SyntheticOptions opt;
        opt.width = 32;
        opt.train_frames = 12;
        opt.test_frames = 4;
        write_synthetic_scene(dir.path(), opt);
        return true;
    }();
    (void)written;
    return dir.path();
}

inline const Scene& small_scene(int channels = 3) {
    static const Scene rgb = [] {
        LoadOptions o;
        o.target_resolution = 32;
        return load_scene(small_scene_dir(), o);
    }();
    static const Scene gray = [] {
        LoadOptions o;
        o.target_resolution = 32;
        o.channels = 1;
        return load_scene(small_scene_dir(), o);
    }();
    return channels == 1 ? gray : rgb;
}

/// Coarse model and short schedule sized for unit tests.
inline TrainConfig tiny_train_config() {
    TrainConfig c;
    c.steps = 10;
    c.batch = 1024;
    c.tile = 256;
    c.field.grid.levels = 4;
    c.field.grid.log2_table_size = 10;
    c.field.grid.base_resolution = 4;
    c.field.grid.finest_resolution = 32;
    c.field.precision = Precision::full32;
    c.occupancy.resolution = 16;
    c.max_samples = 64;
    c.grid_update_every = 4;
    c.eval_every = 0;
    c.eval_images = 2;
    c.checkpoint_every = 0;
    return c;
}

}  // namespace mngp::testing
