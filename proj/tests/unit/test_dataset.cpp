// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#include "mngp/dataset.hpp"

#include "fixtures.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

using namespace mngp;
namespace fs = std::filesystem;

namespace {

/// Cameras on a ring around the unit-cube center looking inward; images are 2x2 gray.
Scene ring_scene(int n_train, std::uint64_t seed) {
    Scene s;
    Rng rng(seed);
    std::uniform_real_distribution<float> u(-std::numbers::pi_v<float>, std::numbers::pi_v<float>);
    for (int i = 0; i < n_train + 3; ++i) {
        const float az = u(rng);
        const Eigen::Vector3f pos(0.5f + std::cos(az), 0.5f + std::sin(az), 0.8f);
        const Eigen::Vector3f back = (pos - Eigen::Vector3f::Constant(0.5f)).normalized();
        const Eigen::Vector3f right = Eigen::Vector3f::UnitZ().cross(back).normalized();
        Camera c;
        c.width = c.height = 2;
        c.focal = 2.0f;
        c.pose.block<3, 1>(0, 0) = right;
        c.pose.block<3, 1>(0, 1) = back.cross(right);
        c.pose.block<3, 1>(0, 2) = back;
        c.pose.block<3, 1>(0, 3) = pos;
        s.cameras.push_back(c);
        s.images.emplace_back(2, 2, 3, static_cast<float>(i) / (n_train + 3));
        s.split.push_back(i < n_train ? Split::train : Split::test);
    }
    return s;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("focal from the field of view") {
    const float f = focal_from_fov(160, 0.6911112);
    CHECK(f == doctest::Approx(0.5 * 160 / std::tan(0.3455556)).epsilon(1e-6));
    CHECK(f == doctest::Approx(222.22).epsilon(1e-4));
}

TEST_CASE("generate_ray") {
    Camera cam;
    cam.width = 8;
    cam.height = 6;
    cam.focal = 5.0f;
    SUBCASE("on-axis pixel looks down -z") {
        // (W/2 - 0.5, H/2 - 0.5) is an integer pixel only for odd sizes.
        Camera odd = cam;
        odd.width = 7;
        odd.height = 5;
        const Ray c = generate_ray(odd, 3, 2);
        CHECK((c.direction - Eigen::Vector3f(0, 0, -1)).norm() < 1e-7f);
    }
    SUBCASE("all directions are unit length") {
        Rng rng(4);
        std::normal_distribution<float> n;
        Camera c = cam;
        c.pose.block<3, 3>(0, 0) =
            Eigen::AngleAxisf(0.7f, Eigen::Vector3f(n(rng), n(rng), n(rng)).normalized()).toRotationMatrix();
        c.pose.block<3, 1>(0, 3) = Eigen::Vector3f(0.5f, -1.5f, 2.0f);
        for (int v = 0; v < c.height; ++v) {
            for (int u = 0; u < c.width; ++u) {
                const Ray r = generate_ray(c, u, v);
                CHECK(std::abs(r.direction.norm() - 1.0f) < 1e-6f);
                CHECK(r.t_near >= 0.0f);
                CHECK(r.t_near <= r.t_far);
                CHECK((r.origin - c.position()).norm() == 0.0f);
            }
        }
    }
    SUBCASE("camera outside the cube looking away misses") {
        Camera away = cam;
        away.pose.block<3, 1>(0, 3) = Eigen::Vector3f(0.5f, 0.5f, 2.0f);
        away.pose.block<3, 3>(0, 0) = Eigen::AngleAxisf(std::numbers::pi_v<float>, Eigen::Vector3f::UnitX()).toRotationMatrix();
        const Ray r = generate_ray(away, 0, 0);
        CHECK(r.t_near == r.t_far);
        CHECK_FALSE(r.hits());
    }
    SUBCASE("out-of-range pixel is a contract violation") {
        CHECK_THROWS_AS(generate_ray(cam, 8, 0), ContractViolation);
        CHECK_THROWS_AS(generate_ray(cam, 0, -1), ContractViolation);
    }
}

TEST_CASE("intersect_aabb agrees with a dense brute-force walk") {
    Rng rng(12);
    std::uniform_real_distribution<float> u(-1.0f, 2.0f);
    std::normal_distribution<float> n;
    int hits = 0;
    for (int i = 0; i < 300; ++i) {
        const Eigen::Vector3f o(u(rng), u(rng), u(rng));
        const Eigen::Vector3f d = Eigen::Vector3f(n(rng), n(rng), n(rng)).normalized();
        const auto [t0, t1] = intersect_aabb(o, d, Aabb{});
        // March in small steps and record the inside interval.
        double first = -1.0, last = -1.0;
        const double step = 1e-3;
        for (double t = 0.0; t < 6.0; t += step) {
            const Eigen::Vector3d p = o.cast<double>() + t * d.cast<double>();
            if ((p.array() >= 0.0).all() && (p.array() <= 1.0).all()) {
                if (first < 0.0) first = t;
                last = t;
            }
        }
        if (first < 0.0) {
            CHECK(t1 - t0 < 2e-3f);
        } else {
            ++hits;
            CHECK(std::abs(t0 - first) < 2e-3);
            CHECK(std::abs(t1 - last) < 2e-3);
        }
    }
    CHECK(hits > 30);
}

TEST_CASE("load_scene on a procedural scene") {
    const Scene& s = testing::small_scene();
    CHECK(s.frames(Split::train).size() == 12);
    CHECK(s.frames(Split::test).size() == 4);
    CHECK(s.channels == 3);
    for (std::size_t f = 0; f < s.frame_count(); ++f) {
        const Camera& c = s.cameras[f];
        CHECK(c.width == 32);
        CHECK(s.images[f].width == 32);
        CHECK(s.images[f].channels == 3);
        CHECK(c.focal == doctest::Approx(focal_from_fov(32, 0.6911112070083618)));
        CHECK_NOTHROW(c.validate());
        for (float v : s.images[f].data) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
    SUBCASE("camera orbits land inside the normalized frame") {
        for (const auto& c : s.cameras) {
            const float r = (c.position() - Eigen::Vector3f::Constant(0.5f)).norm();
            CHECK(r == doctest::Approx(4.031128857175551 / 3.0).epsilon(1e-4));
        }
    }
    SUBCASE("transparent background becomes white") {
        const Image& img = s.images[0];
        CHECK(img.at(0, 0, 0) == 1.0f);
        CHECK(img.at(0, 0, 2) == 1.0f);
    }
    SUBCASE("grayscale load uses luminance of the RGB load") {
        const Scene& g = testing::small_scene(1);
        REQUIRE(g.frame_count() == s.frame_count());
        CHECK(g.channels == 1);
        for (std::size_t p = 0; p < g.images[3].pixel_count(); ++p) {
            const float* rgb = &s.images[3].data[p * 3];
            CHECK(g.images[3].data[p] == doctest::Approx(0.299f * rgb[0] + 0.587f * rgb[1] + 0.114f * rgb[2]).epsilon(1e-5));
        }
    }
}

TEST_CASE("downscaling by box filter preserves mean brightness") {
    LoadOptions half;
    half.target_resolution = 16;
    half.max_train_frames = 3;
    half.max_test_frames = 1;
    const Scene small = load_scene(testing::small_scene_dir(), half);
    const Scene& full = testing::small_scene();
    REQUIRE(small.frame_count() == 4);
    CHECK(small.cameras[0].focal == doctest::Approx(full.cameras[0].focal / 2.0f));
    for (int f = 0; f < 3; ++f) {
        double a = 0.0, b = 0.0;
        for (float v : small.images[f].data) a += v;
        for (float v : full.images[f].data) b += v;
        CHECK(std::abs(a / small.images[f].data.size() - b / full.images[f].data.size()) < 1.0 / 255.0);
        CHECK(small.images[f].at(3, 5, 1) ==
              doctest::Approx((full.images[f].at(6, 10, 1) + full.images[f].at(7, 10, 1) + full.images[f].at(6, 11, 1) +
                               full.images[f].at(7, 11, 1)) / 4.0f));
    }
    LoadOptions odd;
    odd.target_resolution = 12;
    CHECK_THROWS_AS(load_scene(testing::small_scene_dir(), odd), FormatError);
}

TEST_CASE("preprocess_image composites alpha on white") {
    Rgba8Image src;
    src.width = src.height = 2;
    src.rgba = {255, 0, 0, 255, 0, 0, 0, 0, 0, 0, 255, 128, 0, 255, 0, 255};
    const Image rgb = preprocess_image(src, 1, 3);
    CHECK(rgb.at(0, 0, 0) == 1.0f);
    CHECK(rgb.at(0, 0, 1) == 0.0f);
    CHECK(rgb.at(1, 0, 0) == 1.0f);
    CHECK(rgb.at(1, 0, 2) == 1.0f);
    const float a = 128.0f / 255.0f;
    CHECK(rgb.at(0, 1, 0) == doctest::Approx(1.0f - a));
    CHECK(rgb.at(0, 1, 2) == doctest::Approx(1.0f));
    const Image box = preprocess_image(src, 2, 3);
    CHECK(box.width == 1);
    CHECK(box.at(0, 0, 0) == doctest::Approx((1.0f + 1.0f + (1.0f - a) + 0.0f) / 4.0f));
    const Image gray = preprocess_image(src, 1, 1);
    CHECK(gray.at(0, 0, 0) == doctest::Approx(0.299f));
    CHECK(gray.at(1, 1, 0) == doctest::Approx(0.587f));
}

TEST_CASE("loader errors name the offending file") {
    testing::TempDir dir("badscene");
    const fs::path& root = dir.path();
    SUBCASE("missing transforms file") {
        try {
            load_scene(root, {});
            FAIL("expected a load error");
        } catch (const LoadError& e) {
            CHECK(std::string(e.what()).find("transforms_train.json") != std::string::npos);
        }
    }
    SUBCASE("non-4x4 transform") {
        write_text(root / "transforms_train.json",
                   R"({"camera_angle_x": 0.7, "frames": [{"file_path": "./a", "transform_matrix": [[1,0,0],[0,1,0],[0,0,1]]}]})");
        CHECK_THROWS_AS(load_scene(root, {}), FormatError);
    }
    SUBCASE("missing image") {
        write_text(root / "transforms_train.json",
                   R"({"camera_angle_x": 0.7, "frames": [{"file_path": "./nothere", "transform_matrix": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}]})");
        try {
            load_scene(root, {});
            FAIL("expected a load error");
        } catch (const LoadError& e) {
            CHECK(std::string(e.what()).find("nothere") != std::string::npos);
        }
    }
    SUBCASE("corrupt image") {
        write_text(root / "bad.png", "not a png at all");
        write_text(root / "transforms_train.json",
                   R"({"camera_angle_x": 0.7, "frames": [{"file_path": "./bad.png", "transform_matrix": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}]})");
        try {
            load_scene(root, {});
            FAIL("expected a load error");
        } catch (const LoadError& e) {
            CHECK(std::string(e.what()).find("bad.png") != std::string::npos);
        }
    }
    SUBCASE("malformed JSON") {
        write_text(root / "transforms_train.json", "{ nope");
        CHECK_THROWS_AS(load_scene(root, {}), LoadError);
    }
}

TEST_CASE("camera validation") {
    Camera c;
    c.width = c.height = 4;
    c.focal = 1.0f;
    CHECK_NOTHROW(c.validate());
    c.pose(0, 0) = 1.01f;
    CHECK_THROWS_AS(c.validate(), FormatError);
    c.pose(0, 0) = 1.0f;
    c.focal = 0.0f;
    CHECK_THROWS_AS(c.validate(), FormatError);
}

TEST_CASE("partition") {
    const Scene s = ring_scene(100, 5);
    for (PartitionMode mode : {PartitionMode::iid, PartitionMode::non_iid}) {
        INFO(to_string(mode));
        const PartitionPlan p = partition(s, 4, mode, 42);
        std::set<int> seen;
        for (int c = 0; c < 4; ++c) {
            const auto f = p.client_frames(c);
            CHECK(f.size() == 25);
            for (int id : f) {
                CHECK(s.split[id] == Split::train);
                CHECK(seen.insert(id).second);
            }
        }
        CHECK(seen.size() == 100);
        const PartitionPlan again = partition(s, 4, mode, 42);
        CHECK(again.frames == p.frames);
        CHECK(again.clients == p.clients);
        const PartitionPlan one = partition(s, 1, mode, 42);
        CHECK(one.client_frames(0).size() == 100);
    }
    SUBCASE("uneven split differs by at most one") {
        const Scene t = ring_scene(10, 6);
        for (PartitionMode mode : {PartitionMode::iid, PartitionMode::non_iid}) {
            const PartitionPlan p = partition(t, 3, mode, 1);
            std::size_t lo = 100, hi = 0;
            for (int c = 0; c < 3; ++c) {
                lo = std::min(lo, p.client_frames(c).size());
                hi = std::max(hi, p.client_frames(c).size());
            }
            CHECK(hi - lo <= 1);
        }
    }
    SUBCASE("non-IID sectors are disjoint contiguous arcs") {
        const PartitionPlan p = partition(s, 4, PartitionMode::non_iid, 42);
        std::vector<std::pair<double, double>> arcs;
        for (int c = 0; c < 4; ++c) {
            double lo = 10.0, hi = -10.0;
            for (int id : p.client_frames(c)) {
                const Eigen::Vector3f pos = s.cameras[id].position();
                const double az = std::atan2(pos.y() - 0.5, pos.x() - 0.5);
                lo = std::min(lo, az);
                hi = std::max(hi, az);
            }
            arcs.emplace_back(lo, hi);
        }
        for (int a = 0; a < 4; ++a) {
            for (int b = 0; b < 4; ++b) {
                if (a == b) continue;
                // No frame of client b falls inside client a's arc.
                for (int id : p.client_frames(b)) {
                    const Eigen::Vector3f pos = s.cameras[id].position();
                    const double az = std::atan2(pos.y() - 0.5, pos.x() - 0.5);
                    CHECK_FALSE((az > arcs[a].first && az < arcs[a].second));
                }
            }
        }
    }
    SUBCASE("IID depends on the seed") {
        CHECK(partition(s, 4, PartitionMode::iid, 1).frames != partition(s, 4, PartitionMode::iid, 2).frames);
    }
    SUBCASE("configuration errors") {
        const Scene t = ring_scene(3, 1);
        CHECK_THROWS_AS(partition(t, 4, PartitionMode::iid, 1), ConfigError);
        CHECK_THROWS_AS(partition(t, 0, PartitionMode::iid, 1), ConfigError);
        CHECK_THROWS_AS(parse_partition_mode("sideways"), ConfigError);
        CHECK(parse_partition_mode("non-iid") == PartitionMode::non_iid);
    }
    SUBCASE("plan file lists frame and client per line") {
        testing::TempDir dir("plan");
        const PartitionPlan p = partition(s, 4, PartitionMode::iid, 3);
        write_partition(dir.path() / "p.txt", p);
        std::ifstream in(dir.path() / "p.txt");
        std::string header;
        std::getline(in, header);
        CHECK(header.find("clients=4") != std::string::npos);
        int frame = 0, client = 0, lines = 0;
        while (in >> frame >> client) {
            CHECK(p.clients[std::find(p.frames.begin(), p.frames.end(), frame) - p.frames.begin()] == client);
            ++lines;
        }
        CHECK(lines == 100);
    }
}

TEST_CASE("sample_training_pixels") {
    const Scene& s = testing::small_scene();
    const std::vector<int> frames = s.frames(Split::train);
    SUBCASE("one image per step shares a frame id") {
        Rng rng(1);
        const auto px = sample_training_pixels(s, frames, rng, 200, 1);
        CHECK(px.size() == 200);
        for (const auto& p : px) {
            CHECK(p.frame == px.front().frame);
            CHECK(p.u >= 0);
            CHECK(p.u < 32);
            CHECK(p.color[1] == s.images[p.frame].at(p.u, p.v, 1));
        }
    }
    SUBCASE("several images per step stay within the chosen set") {
        Rng rng(2);
        const auto px = sample_training_pixels(s, frames, rng, 500, 3);
        std::set<int> used;
        for (const auto& p : px) used.insert(p.frame);
        CHECK(used.size() <= 3);
        CHECK(used.size() >= 2);
    }
    SUBCASE("zero rays") {
        Rng rng(3);
        CHECK(sample_training_pixels(s, frames, rng, 0, 1).empty());
    }
    SUBCASE("deterministic under a fixed seed") {
        Rng a(9), b(9);
        const auto pa = sample_training_pixels(s, frames, a, 64, 1);
        const auto pb = sample_training_pixels(s, frames, b, 64, 1);
        for (std::size_t i = 0; i < pa.size(); ++i) {
            CHECK(pa[i].frame == pb[i].frame);
            CHECK(pa[i].u == pb[i].u);
            CHECK(pa[i].v == pb[i].v);
        }
    }
    SUBCASE("only owned frames are read") {
        Rng rng(4);
        const std::vector<int> owned = {frames[2], frames[5]};
        for (int k = 0; k < 20; ++k) {
            for (const auto& p : sample_training_pixels(s, owned, rng, 16, 1)) {
                CHECK((p.frame == owned[0] || p.frame == owned[1]));
            }
        }
    }
    SUBCASE("empty frame set is a contract violation") {
        Rng rng(5);
        CHECK_THROWS_AS(sample_training_pixels(s, std::vector<int>{}, rng, 4, 1), ContractViolation);
    }
}
