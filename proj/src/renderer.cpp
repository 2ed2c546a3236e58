// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#include "mngp/renderer.hpp"

#include "mngp/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace mngp {

void SampleBatch::clear() {
    positions.clear();
    directions.clear();
    dt.clear();
    ray_id.clear();
    rays.clear();
}

void SampleBatch::reserve(std::size_t samples, std::size_t n_rays) {
    positions.reserve(samples * 3);
    directions.reserve(samples * 3);
    dt.reserve(samples);
    ray_id.reserve(samples);
    rays.reserve(n_rays);
}

void SampleBatch::append(const SampleBatch& other) {
    const auto sample_base = static_cast<std::uint32_t>(size());
    const auto ray_base = static_cast<std::uint32_t>(rays.size());
    positions.insert(positions.end(), other.positions.begin(), other.positions.end());
    directions.insert(directions.end(), other.directions.begin(), other.directions.end());
    dt.insert(dt.end(), other.dt.begin(), other.dt.end());
    for (auto id : other.ray_id) ray_id.push_back(id + ray_base);
    for (auto r : other.rays) rays.push_back({r.offset + sample_base, r.count});
}

namespace {

/// Marches from step `k` until `budget` samples are emitted or the ray leaves the volume.
/// Returns the number emitted; `k` is left at the next unvisited step.
std::uint32_t march_steps(const Ray& ray, const OccupancyGrid& grid, int& k, std::uint32_t budget,
                          std::uint32_t ray_index, SampleBatch& out) {
    const float dt = kMarchStep;
    std::uint32_t count = 0;
    if (!ray.hits()) return 0;
    for (; count < budget; ++k) {
        const float t0 = ray.t_near + static_cast<float>(k) * dt;
        if (t0 + dt > ray.t_far) break;
        const Eigen::Vector3f p = (ray.origin + (t0 + 0.5f * dt) * ray.direction).cwiseMax(0.0f).cwiseMin(1.0f);
        if (!grid.is_occupied(p)) continue;
        out.positions.insert(out.positions.end(), {p.x(), p.y(), p.z()});
        out.directions.insert(out.directions.end(), {ray.direction.x(), ray.direction.y(), ray.direction.z()});
        out.dt.push_back(dt);
        out.ray_id.push_back(ray_index);
        ++count;
    }
    return count;
}

}  // namespace

int march_ray(const Ray& ray, const OccupancyGrid& grid, int max_samples, SampleBatch& out) {
    const auto ray_index = static_cast<std::uint32_t>(out.rays.size());
    RaySpan span{static_cast<std::uint32_t>(out.size()), 0};
    int k = 0;
    span.count = march_steps(ray, grid, k, static_cast<std::uint32_t>(std::max(max_samples, 0)), ray_index, out);
    out.rays.push_back(span);
    return static_cast<int>(span.count);
}

RenderResult composite(const Eigen::Ref<const Eigen::VectorXf>& sigma, const Eigen::Ref<const Eigen::MatrixXf>& color,
                       const SampleBatch& batch, const Eigen::Ref<const Eigen::VectorXf>& background) {
    const auto n = static_cast<Eigen::Index>(batch.size());
    const Eigen::Index channels = background.size();
    MNGP_EXPECTS(sigma.size() == n && color.cols() == n && color.rows() == channels,
                 "composite inputs do not match the sample batch");
    RenderResult res;
    const auto n_rays = static_cast<Eigen::Index>(batch.ray_count());
    res.color.resize(channels, n_rays);
    res.opacity.resize(n_rays);
    res.weights = Eigen::VectorXf::Zero(n);
    res.cache.transmittance = Eigen::VectorXf::Zero(n);
    res.cache.used.assign(batch.ray_count(), 0);

    std::uint32_t expected_offset = 0;
    for (Eigen::Index r = 0; r < n_rays; ++r) {
        const RaySpan span = batch.rays[r];
        MNGP_EXPECTS(span.offset == expected_offset, "ray samples must be contiguous and in order");
        expected_offset += span.count;
        float transmittance = 1.0f;
        Eigen::VectorXf acc = Eigen::VectorXf::Zero(channels);
        float opacity = 0.0f;
        std::uint32_t used = 0;
        for (std::uint32_t k = 0; k < span.count; ++k) {
            if (transmittance < kTransmittanceCutoff) break;
            const Eigen::Index i = span.offset + k;
            const float alpha = 1.0f - std::exp(-sigma[i] * batch.dt[i]);
            const float w = transmittance * alpha;
            res.cache.transmittance[i] = transmittance;
            res.weights[i] = w;
            acc += w * color.col(i);
            opacity += w;
            transmittance *= 1.0f - alpha;
            ++used;
        }
        res.cache.used[r] = used;
        res.opacity[r] = opacity;
        res.color.col(r) = acc + (1.0f - opacity) * background;
    }
    MNGP_EXPECTS(expected_offset == n, "ray spans do not cover the sample batch");
    return res;
}

CompositeGrad composite_backward(const Eigen::Ref<const Eigen::VectorXf>& sigma,
                                 const Eigen::Ref<const Eigen::MatrixXf>& color, const SampleBatch& batch,
                                 const Eigen::Ref<const Eigen::VectorXf>& background, const RenderResult& forward,
                                 const Eigen::Ref<const Eigen::MatrixXf>& d_ray_color) {
    const auto n = static_cast<Eigen::Index>(batch.size());
    MNGP_EXPECTS(forward.cache.used.size() == batch.ray_count() && forward.weights.size() == n,
                 "missing or mismatched composite cache");
    MNGP_EXPECTS(d_ray_color.cols() == static_cast<Eigen::Index>(batch.ray_count()) &&
                     d_ray_color.rows() == background.size(),
                 "ray colour gradient shape mismatch");
    CompositeGrad g;
    g.d_sigma = Eigen::VectorXf::Zero(n);
    g.d_color = Eigen::MatrixXf::Zero(color.rows(), n);

    for (std::size_t r = 0; r < batch.ray_count(); ++r) {
        const RaySpan span = batch.rays[r];
        const std::uint32_t used = forward.cache.used[r];
        const auto grad = d_ray_color.col(static_cast<Eigen::Index>(r));
        // d C / d sigma_k = dt_k * (T_{k+1} <c_k - bg, g> - sum_{i>k} w_i <c_i - bg, g>)
        float suffix = 0.0f;
        for (std::uint32_t k = used; k-- > 0;) {
            const Eigen::Index i = span.offset + k;
            const float w = forward.weights[i];
            const float proj = (color.col(i) - background).dot(grad);
            const float t_next = forward.cache.transmittance[i] * std::exp(-sigma[i] * batch.dt[i]);
            g.d_sigma[i] = batch.dt[i] * (t_next * proj - suffix);
            g.d_color.col(i) = w * grad;
            suffix += w * proj;
        }
    }
    return g;
}

Eigen::VectorXf default_background(int channels) {
    return Eigen::VectorXf::Ones(channels);
}

namespace {

struct LiveRay {
    Ray ray;
    std::size_t pixel = 0;
    int step = 0;
    std::uint32_t samples = 0;
    float transmittance = 1.0f;
    float opacity = 0.0f;
    Eigen::VectorXf acc;
    bool exhausted = false;
};

bool finished(const LiveRay& r, int max_samples) {
    return r.exhausted || r.transmittance < kTransmittanceCutoff ||
           r.samples >= static_cast<std::uint32_t>(max_samples);
}

}  // namespace

RenderedImage render_image(const FieldModel& model, const OccupancyGrid& grid, const Camera& camera,
                           const Eigen::Ref<const Eigen::VectorXf>& background, const Aabb& bounds,
                           const RenderOptions& options) {
    MNGP_EXPECTS(background.size() == model.channels(), "background must match the model's channel count");
    MNGP_EXPECTS(options.tile >= 1, "tile size must be positive");
    RenderedImage out;
    out.image = Image(camera.width, camera.height, model.channels());
    out.stats.pixels = out.image.pixel_count();
    const Eigen::Index channels = background.size();
    const std::size_t n_pixels = out.image.pixel_count();
    const auto max_samples = static_cast<std::uint32_t>(std::max(options.max_samples, 0));
    std::vector<LiveRay> live;
    std::size_t next_pixel = 0;
    SampleBatch batch;
    Eigen::VectorXf sigma;
    Eigen::MatrixXf color;

    auto write_pixel = [&](const LiveRay& r) {
        const Eigen::VectorXf c = r.acc + (1.0f - r.opacity) * background;
        for (Eigen::Index ch = 0; ch < channels; ++ch) out.image.data[r.pixel * channels + ch] = c[ch];
    };

    while (next_pixel < n_pixels || !live.empty()) {
        while (live.size() < static_cast<std::size_t>(kRaysInFlight) && next_pixel < n_pixels) {
            LiveRay r;
            r.pixel = next_pixel++;
            const int u = static_cast<int>(r.pixel % camera.width), v = static_cast<int>(r.pixel / camera.width);
            r.ray = generate_ray(camera, u, v, bounds);
            r.acc = Eigen::VectorXf::Zero(channels);
            r.exhausted = !r.ray.hits();
            if (finished(r, options.max_samples)) {
                write_pixel(r);
                continue;
            }
            live.push_back(std::move(r));
        }
        if (live.empty()) break;

        // Few live rays march further per round so the field still sees full tiles.
        const auto per_round = static_cast<std::uint32_t>(
            std::clamp<std::size_t>((static_cast<std::size_t>(options.tile) + live.size() - 1) / live.size(), 1,
                                    kMaxStepsPerRound));
        batch.clear();
        for (std::size_t i = 0; i < live.size(); ++i) {
            LiveRay& r = live[i];
            const std::uint32_t want = std::min(per_round, max_samples - r.samples);
            const RaySpan span{static_cast<std::uint32_t>(batch.size()),
                               march_steps(r.ray, grid, r.step, want, static_cast<std::uint32_t>(i), batch)};
            if (span.count < want) r.exhausted = true;
            batch.rays.push_back(span);
        }

        const std::size_t n = batch.size();
        sigma.resize(static_cast<Eigen::Index>(n));
        color.resize(channels, static_cast<Eigen::Index>(n));
        const auto pos = batch.position_matrix();
        const auto dir = batch.direction_matrix();
        for (std::size_t begin = 0; begin < n; begin += static_cast<std::size_t>(options.tile)) {
            const std::size_t count = std::min(n - begin, static_cast<std::size_t>(options.tile));
            parallel_for(count, options.threads, [&](std::size_t b, std::size_t e) {
                const auto nb = static_cast<Eigen::Index>(begin + b), ne = static_cast<Eigen::Index>(e - b);
                FieldOutput fo = field_forward(model, pos.middleCols(nb, ne), dir.middleCols(nb, ne));
                sigma.segment(nb, ne) = fo.sigma;
                color.middleCols(nb, ne) = fo.color;
            });
            ++out.stats.tiles;
        }
        out.stats.evaluated_samples += n;

        // Same arithmetic as composite(), one ray segment at a time.
        std::size_t kept = 0;
        for (std::size_t i = 0; i < live.size(); ++i) {
            LiveRay& r = live[i];
            const RaySpan span = batch.rays[i];
            for (std::uint32_t k = 0; k < span.count; ++k) {
                if (r.transmittance < kTransmittanceCutoff) break;
                const Eigen::Index s = span.offset + k;
                const float alpha = 1.0f - std::exp(-sigma[s] * batch.dt[s]);
                const float w = r.transmittance * alpha;
                r.acc += w * color.col(s);
                r.opacity += w;
                r.transmittance *= 1.0f - alpha;
                ++out.stats.total_samples;
            }
            r.samples += span.count;
            if (finished(r, options.max_samples)) {
                write_pixel(r);
            } else {
                if (kept != i) live[kept] = std::move(r);
                ++kept;
            }
        }
        live.resize(kept);
    }
    return out;
}

}  // namespace mngp
