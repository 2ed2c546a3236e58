// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#include "mngp/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace mngp {

namespace fs = std::filesystem;
using json = nlohmann::json;

void Camera::validate() const {
    if (width <= 0 || height <= 0) throw FormatError("camera size must be positive");
    if (!(focal > 0.0f)) throw FormatError("camera focal must be positive");
    const Eigen::Matrix3f r = rotation();
    const float err = (r.transpose() * r - Eigen::Matrix3f::Identity()).cwiseAbs().maxCoeff();
    if (err > 1e-4f) throw FormatError("camera rotation is not orthonormal");
}

std::vector<int> Scene::frames(Split s) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < split.size(); ++i) {
        if (split[i] == s) out.push_back(static_cast<int>(i));
    }
    return out;
}

float focal_from_fov(int width, double camera_angle_x) {
    return static_cast<float>(0.5 * width / std::tan(0.5 * camera_angle_x));
}

Image preprocess_image(const Rgba8Image& src, int factor, int channels) {
    MNGP_EXPECTS(factor >= 1, "downscale factor must be >= 1");
    MNGP_EXPECTS(channels == 1 || channels == 3, "channels must be 1 or 3");
    if (src.width % factor != 0 || src.height % factor != 0) {
        throw FormatError("image size " + std::to_string(src.width) + "x" + std::to_string(src.height) +
                          " is not divisible by downscale factor " + std::to_string(factor));
    }
    const int w = src.width / factor;
    const int h = src.height / factor;
    Image rgb(w, h, 3);
    const float inv_area = 1.0f / static_cast<float>(factor * factor);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::array<float, 3> acc{};
            for (int dy = 0; dy < factor; ++dy) {
                for (int dx = 0; dx < factor; ++dx) {
                    const std::size_t p = (static_cast<std::size_t>(y * factor + dy) * src.width + x * factor + dx) * 4;
                    const float a = src.rgba[p + 3] / 255.0f;
                    for (int c = 0; c < 3; ++c) acc[c] += (src.rgba[p + c] / 255.0f) * a + (1.0f - a);
                }
            }
            for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = acc[c] * inv_area;
        }
    }
    if (channels == 3) return rgb;
    Image gray(w, h, 1);
    for (std::size_t p = 0; p < rgb.pixel_count(); ++p) {
        gray.data[p] = 0.299f * rgb.data[p * 3] + 0.587f * rgb.data[p * 3 + 1] + 0.114f * rgb.data[p * 3 + 2];
    }
    return gray;
}

namespace {

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw LoadError("malformed JSON in '" + path.string() + "': " + e.what());
    }
}

fs::path resolve_image_path(const fs::path& root, const std::string& file_path) {
    fs::path p = root / file_path;
    if (!p.has_extension()) p += ".png";
    return p.lexically_normal();
}

Eigen::Matrix4f parse_transform(const json& m, const fs::path& file) {
    if (!m.is_array() || m.size() != 4) {
        throw FormatError("transform_matrix in '" + file.string() + "' is not 4x4");
    }
    Eigen::Matrix4f out;
    for (int r = 0; r < 4; ++r) {
        if (!m[r].is_array() || m[r].size() != 4) {
            throw FormatError("transform_matrix in '" + file.string() + "' is not 4x4");
        }
        for (int c = 0; c < 4; ++c) out(r, c) = m[r][c].get<float>();
    }
    return out;
}

void load_split(const fs::path& root, const std::string& name, Split split, const LoadOptions& opt, int max_frames,
                Scene& scene) {
    const fs::path file = root / ("transforms_" + name + ".json");
    if (!fs::exists(file)) throw LoadError("missing '" + file.string() + "'");
    const json doc = read_json(file);
    if (!doc.contains("camera_angle_x") || !doc.contains("frames")) {
        throw FormatError("'" + file.string() + "' lacks camera_angle_x or frames");
    }
    const double angle = doc["camera_angle_x"].get<double>();
    int count = 0;
    for (const auto& frame : doc["frames"]) {
        if (max_frames > 0 && count >= max_frames) break;
        if (!frame.contains("file_path") || !frame.contains("transform_matrix")) {
            throw FormatError("frame entry in '" + file.string() + "' lacks file_path or transform_matrix");
        }
        const Eigen::Matrix4f world = parse_transform(frame["transform_matrix"], file);
        const fs::path img_path = resolve_image_path(root, frame["file_path"].get<std::string>());
        const Rgba8Image raw = read_png_rgba(img_path);
        if (raw.width % opt.target_resolution != 0) {
            throw FormatError("'" + img_path.string() + "' width " + std::to_string(raw.width) +
                              " is not an integer multiple of " + std::to_string(opt.target_resolution));
        }
        const int factor = raw.width / opt.target_resolution;
        Image img = preprocess_image(raw, factor, opt.channels);

        Camera cam;
        cam.width = img.width;
        cam.height = img.height;
        cam.focal = focal_from_fov(img.width, angle);
        cam.pose = world;
        cam.pose.block<3, 1>(0, 3) = opt.normalization.scale * world.block<3, 1>(0, 3) + opt.normalization.offset;
        cam.validate();

        scene.cameras.push_back(cam);
        scene.images.push_back(std::move(img));
        scene.split.push_back(split);
        ++count;
    }
}

}  // namespace

Scene load_scene(const fs::path& root, const LoadOptions& options) {
    if (options.target_resolution <= 0) throw ConfigError("target resolution must be positive");
    if (options.channels != 1 && options.channels != 3) throw ConfigError("channels must be 1 or 3");
    Scene scene;
    scene.channels = options.channels;
    load_split(root, "train", Split::train, options, options.max_train_frames, scene);
    load_split(root, "test", Split::test, options, options.max_test_frames, scene);
    return scene;
}

std::pair<float, float> intersect_aabb(const Eigen::Vector3f& origin, const Eigen::Vector3f& dir,
                                       const Aabb& box) {
    float t0 = 0.0f;
    float t1 = std::numeric_limits<float>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (dir[a] == 0.0f) {
            if (origin[a] < box.min[a] || origin[a] > box.max[a]) return {0.0f, 0.0f};
            continue;
        }
        const float inv = 1.0f / dir[a];
        float ta = (box.min[a] - origin[a]) * inv;
        float tb = (box.max[a] - origin[a]) * inv;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (!(t1 > t0)) return {t0, t0};
    return {t0, t1};
}

Ray generate_ray(const Camera& camera, int u, int v, const Aabb& bounds) {
    MNGP_EXPECTS(u >= 0 && u < camera.width && v >= 0 && v < camera.height, "pixel outside the image");
    const Eigen::Vector3f local((u + 0.5f - camera.width * 0.5f) / camera.focal,
                                -(v + 0.5f - camera.height * 0.5f) / camera.focal, -1.0f);
    Ray ray;
    ray.origin = camera.position();
    ray.direction = (camera.rotation() * local).normalized();
    const auto [tn, tf] = intersect_aabb(ray.origin, ray.direction, bounds);
    ray.t_near = tn;
    ray.t_far = tf;
    return ray;
}

PartitionMode parse_partition_mode(const std::string& s) {
    if (s == "iid" || s == "IID") return PartitionMode::iid;
    if (s == "non-iid" || s == "non_iid" || s == "noniid" || s == "non-IID") return PartitionMode::non_iid;
    throw ConfigError("unknown partition mode '" + s + "' (expected iid or non-iid)");
}

std::string to_string(PartitionMode m) { return m == PartitionMode::iid ? "iid" : "non-iid"; }

std::vector<int> PartitionPlan::client_frames(int client) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (clients[i] == client) out.push_back(frames[i]);
    }
    return out;
}

float camera_azimuth(const Camera& camera, const Aabb& bounds) {
    const Eigen::Vector3f rel = camera.position() - 0.5f * (bounds.min + bounds.max);
    return std::atan2(rel.y(), rel.x());
}

PartitionPlan partition(const Scene& scene, int n_clients, PartitionMode mode, std::uint64_t seed) {
    std::vector<int> train = scene.frames(Split::train);
    if (n_clients < 1) throw ConfigError("need at least one client");
    if (static_cast<std::size_t>(n_clients) > train.size()) {
        throw ConfigError("more clients (" + std::to_string(n_clients) + ") than training frames (" +
                          std::to_string(train.size()) + ")");
    }
    PartitionPlan plan;
    plan.mode = mode;
    plan.n_clients = n_clients;
    const int n = static_cast<int>(train.size());

    if (mode == PartitionMode::iid) {
        Rng rng(seed);
        std::shuffle(train.begin(), train.end(), rng);
        for (int i = 0; i < n; ++i) {
            plan.frames.push_back(train[i]);
            plan.clients.push_back(i % n_clients);
        }
    } else {
        std::vector<std::pair<float, int>> keyed;
        keyed.reserve(train.size());
        for (int f : train) keyed.emplace_back(camera_azimuth(scene.cameras[f], scene.bounds), f);
        std::sort(keyed.begin(), keyed.end());
        // Contiguous equal-count sectors; the first (n % k) clients get one extra frame.
        const int base = n / n_clients;
        const int extra = n % n_clients;
        int pos = 0;
        for (int c = 0; c < n_clients; ++c) {
            const int size = base + (c < extra ? 1 : 0);
            for (int i = 0; i < size; ++i, ++pos) {
                plan.frames.push_back(keyed[pos].second);
                plan.clients.push_back(c);
            }
        }
    }
    return plan;
}

void write_partition(const fs::path& path, const PartitionPlan& plan) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << "# mode=" << to_string(plan.mode) << " clients=" << plan.n_clients << "\n";
    std::vector<std::size_t> order(plan.frames.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return plan.frames[a] < plan.frames[b]; });
    for (auto i : order) out << plan.frames[i] << " " << plan.clients[i] << "\n";
}

std::vector<PixelSample> sample_training_pixels(const Scene& scene, std::span<const int> frames, Rng& rng,
                                                int n_rays, int img_per_step) {
    MNGP_EXPECTS(!frames.empty(), "no frames to sample from");
    MNGP_EXPECTS(img_per_step >= 1, "img_per_step must be >= 1");
    std::vector<PixelSample> out;
    if (n_rays <= 0) return out;

    // Partial Fisher-Yates over a copy selects distinct frames.
    std::vector<int> pool(frames.begin(), frames.end());
    const int k = std::min<int>(img_per_step, static_cast<int>(pool.size()));
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, static_cast<int>(pool.size()) - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }

    out.reserve(static_cast<std::size_t>(n_rays));
    std::uniform_int_distribution<int> which(0, k - 1);
    for (int r = 0; r < n_rays; ++r) {
        const int frame = pool[k == 1 ? 0 : which(rng)];
        const Image& img = scene.images[frame];
        std::uniform_int_distribution<int> du(0, img.width - 1);
        std::uniform_int_distribution<int> dv(0, img.height - 1);
        PixelSample s;
        s.frame = frame;
        s.u = du(rng);
        s.v = dv(rng);
        for (int c = 0; c < img.channels; ++c) s.color[c] = img.at(s.u, s.v, c);
        out.push_back(s);
    }
    return out;
}

}  // namespace mngp
