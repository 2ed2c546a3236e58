// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#include "mngp/image.hpp"

#include "mngp/common.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace mngp {

Rgba8Image read_png_rgba(const std::filesystem::path& path) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str())) {
        throw LoadError("cannot read image '" + path.string() + "': " + img.message);
    }
    img.format = PNG_FORMAT_RGBA;
    Rgba8Image out;
    out.width = static_cast<int>(img.width);
    out.height = static_cast<int>(img.height);
    out.rgba.resize(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, out.rgba.data(), 0, nullptr)) {
        std::string msg = img.message;
        png_image_free(&img);
        throw LoadError("corrupt image '" + path.string() + "': " + msg);
    }
    return out;
}

void write_png_rgba(const std::filesystem::path& path, const Rgba8Image& image) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    img.format = PNG_FORMAT_RGBA;
    if (!png_image_write_to_file(&img, path.c_str(), 0, image.rgba.data(), 0, nullptr)) {
        throw Error("cannot write image '" + path.string() + "': " + img.message);
    }
}

void write_png(const std::filesystem::path& path, const Image& image) {
    MNGP_EXPECTS(image.channels == 1 || image.channels == 3, "PNG export needs 1 or 3 channels");
    Rgba8Image out;
    out.width = image.width;
    out.height = image.height;
    out.rgba.resize(image.pixel_count() * 4);
    auto to8 = [](float v) {
        return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    };
    for (std::size_t p = 0; p < image.pixel_count(); ++p) {
        for (int c = 0; c < 3; ++c) {
            const int src = image.channels == 1 ? 0 : c;
            out.rgba[p * 4 + c] = to8(image.data[p * image.channels + src]);
        }
        out.rgba[p * 4 + 3] = 255;
    }
    write_png_rgba(path, out);
}

}  // namespace mngp
