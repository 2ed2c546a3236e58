// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#include "mngp/synthetic.hpp"

#include "mngp/image.hpp"

#include <json.hpp>

#include <Eigen/Geometry>

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

namespace mngp {

namespace fs = std::filesystem;
using Eigen::Vector3d;

namespace {

struct Hit {
    double t = std::numeric_limits<double>::infinity();
    Vector3d normal;
    Vector3d color;
};

struct Sphere {
    Vector3d center;
    double radius;
    Vector3d color;
};

struct Box {
    Vector3d center;
    Vector3d half;
    Vector3d color;
    bool checker = false;
};

const std::vector<Sphere> kSpheres = {
    {{0.0, 0.0, 0.25}, 0.55, {0.85, 0.25, 0.2}},
    {{0.65, 0.45, -0.45}, 0.32, {0.2, 0.7, 0.3}},
    {{-0.2, 0.75, -0.55}, 0.22, {0.95, 0.8, 0.2}},
};

const std::vector<Box> kBoxes = {
    {{-0.55, -0.45, -0.5}, {0.3, 0.3, 0.3}, {0.2, 0.35, 0.85}, false},
    {{0.0, 0.0, -0.92}, {1.05, 1.05, 0.08}, {0.9, 0.9, 0.9}, true},
};

void intersect(const Sphere& s, const Vector3d& o, const Vector3d& d, Hit& best) {
    const Vector3d oc = o - s.center;
    const double b = oc.dot(d);
    const double c = oc.squaredNorm() - s.radius * s.radius;
    const double disc = b * b - c;
    if (disc < 0.0) return;
    const double t = -b - std::sqrt(disc);
    if (t <= 1e-6 || t >= best.t) return;
    best.t = t;
    best.normal = (o + t * d - s.center).normalized();
    best.color = s.color;
}

void intersect(const Box& bx, const Vector3d& o, const Vector3d& d, Hit& best) {
    double t0 = -std::numeric_limits<double>::infinity();
    double t1 = std::numeric_limits<double>::infinity();
    int axis = 0;
    for (int a = 0; a < 3; ++a) {
        const double inv = 1.0 / d[a];
        double ta = (bx.center[a] - bx.half[a] - o[a]) * inv;
        double tb = (bx.center[a] + bx.half[a] - o[a]) * inv;
        if (ta > tb) std::swap(ta, tb);
        if (ta > t0) {
            t0 = ta;
            axis = a;
        }
        t1 = std::min(t1, tb);
    }
    if (t0 > t1 || t0 <= 1e-6 || t0 >= best.t) return;
    best.t = t0;
    best.normal = Vector3d::Zero();
    best.normal[axis] = d[axis] > 0.0 ? -1.0 : 1.0;
    best.color = bx.color;
    if (bx.checker) {
        const Vector3d p = o + t0 * d;
        const int k = static_cast<int>(std::floor(p.x() * 4.0)) + static_cast<int>(std::floor(p.y() * 4.0));
        if (k & 1) best.color = {0.25, 0.25, 0.3};
    }
}

std::optional<Vector3d> shade(const Vector3d& o, const Vector3d& d) {
    Hit hit;
    for (const auto& s : kSpheres) intersect(s, o, d, hit);
    for (const auto& b : kBoxes) intersect(b, o, d, hit);
    if (!std::isfinite(hit.t)) return std::nullopt;
    const Vector3d light = Vector3d(0.4, 0.3, 0.85).normalized();
    const double diffuse = std::max(0.0, hit.normal.dot(light));
    return (hit.color * (0.35 + 0.65 * diffuse)).cwiseMin(1.0);
}

Eigen::Matrix4d look_at_origin(const Vector3d& pos) {
    const Vector3d forward = (-pos).normalized();
    const Vector3d right = forward.cross(Vector3d::UnitZ()).normalized();
    const Vector3d up = right.cross(forward);
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.block<3, 1>(0, 0) = right;
    m.block<3, 1>(0, 1) = up;
    m.block<3, 1>(0, 2) = -forward;
    m.block<3, 1>(0, 3) = pos;
    return m;
}

Rgba8Image render(const Eigen::Matrix4d& pose, int width, double focal) {
    Rgba8Image img;
    img.width = width;
    img.height = width;
    img.rgba.assign(static_cast<std::size_t>(width) * width * 4, 0);
    const Vector3d o = pose.block<3, 1>(0, 3);
    const Eigen::Matrix3d rot = pose.block<3, 3>(0, 0);
    // 2x2 supersampling gives partially transparent silhouette pixels like the real renders.
    for (int v = 0; v < width; ++v) {
        for (int u = 0; u < width; ++u) {
            Vector3d rgb = Vector3d::Zero();
            int hits = 0;
            for (int sy = 0; sy < 2; ++sy) {
                for (int sx = 0; sx < 2; ++sx) {
                    const double x = (u + 0.25 + 0.5 * sx - 0.5 * width) / focal;
                    const double y = -(v + 0.25 + 0.5 * sy - 0.5 * width) / focal;
                    const Vector3d d = (rot * Vector3d(x, y, -1.0)).normalized();
                    if (auto c = shade(o, d)) {
                        rgb += *c;
                        ++hits;
                    }
                }
            }
            std::uint8_t* px = &img.rgba[(static_cast<std::size_t>(v) * width + u) * 4];
            if (hits > 0) rgb /= hits;
            for (int c = 0; c < 3; ++c) px[c] = static_cast<std::uint8_t>(std::lround(rgb[c] * 255.0));
            px[3] = static_cast<std::uint8_t>(std::lround(hits * 255.0 / 4.0));
        }
    }
    return img;
}

void write_split(const fs::path& root, const std::string& split, int count, const SyntheticOptions& opt, Rng& rng) {
    fs::create_directories(root / split);
    const double focal = 0.5 * opt.width / std::tan(0.5 * opt.camera_angle_x);
    std::uniform_real_distribution<double> azimuth(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> elevation(0.15, 1.2);
    nlohmann::json j;
    j["camera_angle_x"] = opt.camera_angle_x;
    j["frames"] = nlohmann::json::array();
    for (int i = 0; i < count; ++i) {
        const double az = azimuth(rng);
        const double el = elevation(rng);
        const Vector3d pos = opt.radius * Vector3d(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
        const Eigen::Matrix4d pose = look_at_origin(pos);
        const std::string stem = "r_" + std::to_string(i);
        write_png_rgba(root / split / (stem + ".png"), render(pose, opt.width, focal));
        nlohmann::json m = nlohmann::json::array();
        for (int r = 0; r < 4; ++r) m.push_back({pose(r, 0), pose(r, 1), pose(r, 2), pose(r, 3)});
        j["frames"].push_back({{"file_path", "./" + split + "/" + stem}, {"rotation", 0.0}, {"transform_matrix", m}});
    }
    std::ofstream out(root / ("transforms_" + split + ".json"));
    if (!out) throw Error("cannot write transforms for split '" + split + "'");
    out << j.dump(2) << "\n";
}

}  // namespace

void write_synthetic_scene(const fs::path& root, const SyntheticOptions& options) {
    MNGP_EXPECTS(options.width > 0 && options.train_frames > 0 && options.test_frames >= 0, "invalid synthetic options");
    Rng rng(options.seed);
    write_split(root, "train", options.train_frames, options, rng);
    write_split(root, "test", options.test_frames, options, rng);
}

}  // namespace mngp
