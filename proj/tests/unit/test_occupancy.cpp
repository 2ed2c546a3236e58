// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#include "mngp/field.hpp"
#include "mngp/occupancy.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace mngp;

namespace {

DensityFn constant_density(float k) {
    return [k](const Eigen::Matrix3Xf& p, Eigen::VectorXf& s) { s = Eigen::VectorXf::Constant(p.cols(), k); };
}

OccupancyConfig small(int res) {
    OccupancyConfig c;
    c.resolution = res;
    c.storage16 = false;
    return c;
}

}  // namespace

TEST_CASE("starts fully occupied with zero EMA") {
    const OccupancyGrid g(small(8));
    CHECK(g.cell_count() == 512);
    CHECK(g.occupied_count() == 512);
    for (float v : g.density_ema()) CHECK(v == 0.0f);
}

TEST_CASE("threshold rule uses one march step of alpha") {
    const OccupancyGrid g(small(4));
    const float edge = 0.01f / kMarchStep;
    CHECK(edge == doctest::Approx(5.912).epsilon(1e-3));
    CHECK(g.threshold_rule(edge * 1.001f));
    CHECK_FALSE(g.threshold_rule(edge * 0.999f));
    CHECK_FALSE(g.threshold_rule(0.0f));
}

TEST_CASE("near-zero density model leaves every cell unoccupied") {
    FieldConfig fc;
    fc.grid.levels = 2;
    fc.grid.base_resolution = 4;
    fc.grid.finest_resolution = 8;
    FieldModel model(fc);
    model.initialize(3);
    const MlpLayout& d = model.density_mlp();
    auto p = model.params();
    for (std::size_t i = d.weight_offset(1); i < d.bias_offset(1); ++i) p[i] = 0.0f;
    p[d.bias_offset(1)] = -kDensityClamp;
    OccupancyGrid g(small(16));
    Rng rng(1);
    update_grid(g, model, rng);
    CHECK(g.occupied_count() == 0);
}

TEST_CASE("zero density decays the EMA geometrically") {
    OccupancyGrid g(small(4));
    Rng rng(2);
    g.update(constant_density(100.0f), rng);
    for (int k = 1; k <= 5; ++k) {
        g.update(constant_density(0.0f), rng);
        const float expect = 100.0f * std::pow(0.95f, static_cast<float>(k));
        for (float v : g.density_ema()) CHECK(v == doctest::Approx(expect).epsilon(1e-5));
    }
}

TEST_CASE("constant density field is the EMA fixed point") {
    OccupancyGrid g(small(8));
    Rng rng(3);
    std::vector<float> start(g.cell_count());
    for (std::size_t i = 0; i < start.size(); ++i) start[i] = (i % 3 == 0) ? 50.0f : 0.0f;
    g.set_density_ema(start);
    const float k = 7.5f;
    for (int it = 0; it < 200; ++it) g.update(constant_density(k), rng);
    for (float v : g.density_ema()) CHECK(v == doctest::Approx(k).epsilon(1e-5));
    CHECK(g.occupied_count() == g.cell_count());
}

TEST_CASE("EMA never decreases when the queried density does not") {
    OccupancyGrid g(small(4));
    Rng rng(4);
    std::vector<float> prev = g.density_ema();
    for (float k : {0.5f, 2.0f, 2.0f, 9.0f}) {
        g.update(constant_density(k), rng);
        for (std::size_t i = 0; i < prev.size(); ++i) CHECK(g.density_ema()[i] >= prev[i]);
        prev = g.density_ema();
    }
}

TEST_CASE("update queries one jittered point inside every cell") {
    OccupancyGrid g(small(4));
    Rng rng(5);
    std::vector<int> hits(g.cell_count(), 0);
    g.update(
        [&](const Eigen::Matrix3Xf& p, Eigen::VectorXf& s) {
            s.resize(p.cols());
            for (Eigen::Index i = 0; i < p.cols(); ++i) {
                int c[3];
                for (int a = 0; a < 3; ++a) c[a] = std::min(3, static_cast<int>(std::floor(p(a, i) * 4)));
                ++hits[g.cell_index(c[0], c[1], c[2])];
                s(i) = static_cast<float>(g.cell_index(c[0], c[1], c[2]));
            }
        },
        rng);
    for (std::size_t i = 0; i < hits.size(); ++i) {
        CHECK(hits[i] == 1);
        CHECK(g.density_ema()[i] == static_cast<float>(i));
    }
}

TEST_CASE("bits follow the threshold rule exactly after any update") {
    OccupancyGrid g(small(8));
    Rng rng(6);
    std::uniform_real_distribution<float> u(0.0f, 12.0f);
    for (int round = 0; round < 3; ++round) {
        g.update([&](const Eigen::Matrix3Xf& p, Eigen::VectorXf& s) {
            s.resize(p.cols());
            for (Eigen::Index i = 0; i < p.cols(); ++i) s(i) = u(rng);
        }, rng);
        double mean = 0.0;
        for (float v : g.density_ema()) mean += v;
        mean /= static_cast<double>(g.cell_count());
        const float threshold = std::min(0.01f, static_cast<float>(mean) * kMarchStep);
        CHECK(g.effective_threshold() == threshold);
        std::size_t mismatches = 0;
        for (std::size_t c = 0; c < g.cell_count(); ++c) {
            mismatches += g.occupied_cell(c) != (g.density_ema()[c] * kMarchStep > threshold);
        }
        CHECK(mismatches == 0);
    }
}

TEST_CASE("a weak field keeps its denser cells occupied") {
    OccupancyGrid g(small(8));
    Rng rng(7);
    g.update(
        [](const Eigen::Matrix3Xf& p, Eigen::VectorXf& s) {
            s = (0.5f + 0.2f * p.row(0).array()).matrix().transpose();
        },
        rng);
    CHECK(g.effective_threshold() < 0.01f);
    CHECK(g.occupied_count() > 0);
    CHECK(g.occupied_count() < g.cell_count());
    for (int z = 0; z < 8; ++z) {
        CHECK(g.occupied_cell(g.cell_index(7, 0, z)));
        CHECK_FALSE(g.occupied_cell(g.cell_index(0, 0, z)));
    }
}

TEST_CASE("16-bit EMA storage rounds through half precision") {
    OccupancyConfig c;
    c.resolution = 2;
    OccupancyGrid g(c);
    g.set_density_ema(std::vector<float>(8, 0.1f));
    for (float v : g.density_ema()) CHECK(v == round_to_half(0.1f));
}

TEST_CASE("is_occupied lookups") {
    OccupancyGrid g(small(8));
    SUBCASE("all set") {
        Rng rng(1);
        std::uniform_real_distribution<float> u(0.0f, 1.0f);
        for (int i = 0; i < 100; ++i) CHECK(g.is_occupied(Eigen::Vector3f(u(rng), u(rng), u(rng))));
    }
    SUBCASE("upper boundary reads the last cell") {
        g.fill(false);
        g.set_cell(g.cell_index(7, 7, 7), true);
        CHECK(g.is_occupied(Eigen::Vector3f(1.0f, 1.0f, 1.0f)));
        CHECK_FALSE(g.is_occupied(Eigen::Vector3f(0.0f, 0.0f, 0.0f)));
        CHECK(g.occupied_count() == 1);
    }
    SUBCASE("random grid against a direct bit lookup") {
        Rng rng(2);
        std::vector<bool> bits(g.cell_count());
        for (std::size_t c = 0; c < bits.size(); ++c) {
            bits[c] = (rng() & 1u) != 0;
            g.set_cell(c, bits[c]);
        }
        std::uniform_real_distribution<float> u(0.0f, 1.0f);
        for (int i = 0; i < 500; ++i) {
            const Eigen::Vector3f x(u(rng), u(rng), u(rng));
            int c[3];
            for (int a = 0; a < 3; ++a) c[a] = std::min(7, static_cast<int>(std::floor(x[a] * 8)));
            CHECK(g.is_occupied(x) == bits[c[0] + 8 * (c[1] + 8 * c[2])]);
        }
    }
}

TEST_CASE("default grid byte size at 16 bits") {
    const OccupancyGrid g;
    CHECK(g.cell_count() * 2 == 4194304u);
}
