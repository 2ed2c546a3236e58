// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace mngp {

/// Interleaved float image, row-major, values nominally in [0,1].
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<float> data;

    Image() = default;
    Image(int w, int h, int c, float fill = 0.0f)
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

    float& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    float at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

/// 8-bit RGBA pixels as decoded from disk.
struct Rgba8Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgba;
};

/// Decodes any PNG libpng understands into 8-bit RGBA. Throws LoadError naming the file.
Rgba8Image read_png_rgba(const std::filesystem::path& path);

/// Writes RGBA8 pixels as PNG.
void write_png_rgba(const std::filesystem::path& path, const Rgba8Image& image);

/// Writes a float image (1 or 3 channels) as an 8-bit PNG, clamping to [0,1].
void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace mngp
