// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#include "mngp/trainer.hpp"

#include "mngp/checkpoint.hpp"
#include "mngp/metrics.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>

namespace mngp {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
    if (steps < 0) throw ConfigError("steps must be >= 0");
    if (tile < 1) throw ConfigError("tile must be >= 1");
    if (batch < tile || batch % tile != 0) throw ConfigError("batch must be a positive multiple of tile");
    if (img_per_step < 1) throw ConfigError("img_per_step must be >= 1");
    if (!(huber_delta > 0.0f)) throw ConfigError("huber_delta must be positive");
    if (grid_update_every < 0) throw ConfigError("grid_update_every must be >= 0");
    if (max_samples < 1) throw ConfigError("max_samples must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
}

HuberResult huber_loss(const Eigen::Ref<const Eigen::MatrixXf>& pred, const Eigen::Ref<const Eigen::MatrixXf>& target,
                       float delta, double normalizer) {
    MNGP_EXPECTS(pred.rows() == target.rows() && pred.cols() == target.cols(), "Huber loss shape mismatch");
    const double count = normalizer > 0.0 ? normalizer : static_cast<double>(pred.size());
    HuberResult res;
    res.d_pred.resize(pred.rows(), pred.cols());
    if (pred.size() == 0) return res;
    const float scale = static_cast<float>(1.0 / count);
    double sum = 0.0;
    for (Eigen::Index j = 0; j < pred.cols(); ++j) {
        for (Eigen::Index i = 0; i < pred.rows(); ++i) {
            const float e = pred(i, j) - target(i, j);
            const float a = std::abs(e);
            if (a <= delta) {
                sum += 0.5 * static_cast<double>(e) * e;
                res.d_pred(i, j) = e * scale;
            } else {
                sum += static_cast<double>(delta) * (a - 0.5 * delta);
                res.d_pred(i, j) = (e > 0.0f ? delta : -delta) * scale;
            }
        }
    }
    res.loss = sum / count;
    return res;
}

int SampleBudget::rays_for_tile(int tile_size) const {
    // At least one sample per ray, so an emptied grid cannot demand more rays than the tile holds.
    const float est = std::max(mean_samples_per_ray, 1.0f);
    return std::max(1, static_cast<int>(std::floor(static_cast<float>(tile_size) / est)));
}

TrainingTile build_tile(const Scene& scene, std::span<const int> frames, const OccupancyGrid& grid, Rng& rng,
                        int tile_size, int img_per_step, SampleBudget& budget, int max_samples) {
    const int n_rays = budget.rays_for_tile(tile_size);
    const auto pixels = sample_training_pixels(scene, frames, rng, n_rays, img_per_step);
    TrainingTile tile;
    tile.batch.reserve(static_cast<std::size_t>(tile_size), pixels.size());
    std::vector<std::size_t> kept;
    SampleBatch scratch;
    std::size_t marched_samples = 0;
    bool full = false;
    for (std::size_t r = 0; r < pixels.size(); ++r) {
        const auto& px = pixels[r];
        scratch.clear();
        const int count = march_ray(generate_ray(scene.cameras[px.frame], px.u, px.v, scene.bounds), grid,
                                    max_samples, scratch);
        marched_samples += static_cast<std::size_t>(count);
        if (full) continue;
        if (tile.batch.size() + static_cast<std::size_t>(count) > static_cast<std::size_t>(tile_size)) {
            full = true;
            continue;
        }
        tile.batch.append(scratch);
        kept.push_back(r);
    }
    if (!pixels.empty()) budget.update(static_cast<float>(marched_samples) / static_cast<float>(pixels.size()));

    tile.targets.resize(scene.channels, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k) {
        for (int c = 0; c < scene.channels; ++c) tile.targets(c, static_cast<Eigen::Index>(k)) = pixels[kept[k]].color[c];
    }
    return tile;
}

TrainingTile merge_tiles(std::span<const TrainingTile> tiles) {
    TrainingTile out;
    Eigen::Index cols = 0;
    const Eigen::Index rows = tiles.empty() ? 0 : tiles.front().targets.rows();
    for (const auto& t : tiles) cols += t.targets.cols();
    out.targets.resize(rows, cols);
    Eigen::Index at = 0;
    for (const auto& t : tiles) {
        out.batch.append(t.batch);
        out.targets.middleCols(at, t.targets.cols()) = t.targets;
        at += t.targets.cols();
    }
    return out;
}

double accumulate_tile_gradient(const FieldModel& model, const TrainingTile& tile,
                                const Eigen::Ref<const Eigen::VectorXf>& background, float huber_delta,
                                double normalizer, std::span<float> grad) {
    const SampleBatch& batch = tile.batch;
    if (batch.size() == 0) {
        const RenderResult rendered =
            composite(Eigen::VectorXf(0), Eigen::MatrixXf(background.size(), 0), batch, background);
        return huber_loss(rendered.color, tile.targets, huber_delta, normalizer).loss;
    }
    FieldOutput field = field_forward(model, batch.position_matrix(), batch.direction_matrix());
    const RenderResult rendered = composite(field.sigma, field.color, batch, background);
    const HuberResult loss = huber_loss(rendered.color, tile.targets, huber_delta, normalizer);
    const CompositeGrad cg = composite_backward(field.sigma, field.color, batch, background, rendered, loss.d_pred);
    field_backward(model, field.cache, cg.d_sigma, cg.d_color, grad);
    return loss.loss;
}

Trainer::Trainer(const Scene& scene, std::vector<int> frames, const TrainConfig& config, std::uint64_t seed)
    : Trainer(scene, std::move(frames), config, seed, FieldModel(config.field), OccupancyGrid(config.occupancy)) {
    model_.initialize(seed);
    adam_ = AdamState(model_);
}

Trainer::Trainer(const Scene& scene, std::vector<int> frames, const TrainConfig& config, std::uint64_t seed,
                 FieldModel model, OccupancyGrid grid)
    : scene_(scene),
      frames_(std::move(frames)),
      config_(config),
      model_(std::move(model)),
      grid_(std::move(grid)),
      adam_(model_),
      rng_(seed ^ 0x9E3779B97F4A7C15ull),
      background_(default_background(scene.channels)) {
    config_.validate();
    MNGP_EXPECTS(!frames_.empty(), "trainer needs at least one frame");
    MNGP_EXPECTS(model_.channels() == scene.channels, "model and scene channel counts differ");
    grad_.assign(model_.param_count(), 0.0f);
}

void Trainer::refresh_grid() { update_grid(grid_, model_, rng_, config_.threads); }

void Trainer::receive_parameters(std::span<const float> params) {
    MNGP_EXPECTS(params.size() == model_.param_count(), "parameter count mismatch");
    auto stored = model_.params();
    for (std::size_t i = 0; i < stored.size(); ++i) {
        const float v = model_.storage_round(params[i]);
        // An unchanged stored value keeps its higher-precision master copy.
        if (v != stored[i]) {
            stored[i] = v;
            adam_.master[i] = params[i];
        }
    }
}

double Trainer::step() {
    if (config_.grid_update_every > 0 && steps_done_ > 0 &&
        steps_done_ % static_cast<std::uint64_t>(config_.grid_update_every) == 0) {
        refresh_grid();
    }
    const int n_tiles = config_.accumulation();
    std::vector<TrainingTile> tiles;
    tiles.reserve(static_cast<std::size_t>(n_tiles));
    double elements = 0.0;
    for (int t = 0; t < n_tiles; ++t) {
        tiles.push_back(build_tile(scene_, frames_, grid_, rng_, config_.tile, config_.img_per_step, budget_,
                                   config_.max_samples));
        elements += static_cast<double>(tiles.back().targets.size());
    }
    std::fill(grad_.begin(), grad_.end(), 0.0f);
    double loss = 0.0;
    if (elements > 0.0) {
        for (const auto& tile : tiles) {
            loss += accumulate_tile_gradient(model_, tile, background_, config_.huber_delta, elements, grad_);
        }
        adam_step(adam_, model_, grad_, config_.adam);
    }
    ++steps_done_;
    return loss;
}

std::vector<int> spaced_subset(const std::vector<int>& frames, int count) {
    if (count <= 0 || static_cast<std::size_t>(count) >= frames.size()) return frames;
    std::vector<int> out;
    for (int i = 0; i < count; ++i) {
        out.push_back(frames[static_cast<std::size_t>(i) * frames.size() / static_cast<std::size_t>(count)]);
    }
    return out;
}

EvalResult evaluate(const FieldModel& model, const OccupancyGrid& grid, const Scene& scene,
                    const std::vector<int>& frames, int threads) {
    EvalResult res;
    if (frames.empty()) return res;
    const Eigen::VectorXf bg = default_background(scene.channels);
    RenderOptions opt;
    opt.threads = threads;
    double samples = 0.0;
    for (int f : frames) {
        const RenderedImage r = render_image(model, grid, scene.cameras[f], bg, scene.bounds, opt);
        res.psnr += psnr(r.image, scene.images[f]);
        res.ssim += ssim(r.image, scene.images[f]);
        samples += r.stats.mean_samples_per_pixel();
    }
    res.images = static_cast<int>(frames.size());
    res.psnr /= res.images;
    res.ssim /= res.images;
    res.mean_samples_per_pixel = samples / res.images;
    return res;
}

void TrainLog::write_csv(const fs::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << "step,loss,psnr,elapsed_ms\n";
    out << std::setprecision(9);
    for (const auto& e : entries) {
        out << e.step << "," << e.loss << ",";
        if (e.psnr) out << *e.psnr;
        out << "," << e.elapsed_ms << "\n";
    }
}

TrainResult train(const Scene& scene, const TrainConfig& config, std::optional<std::vector<int>> frames,
                  const std::optional<fs::path>& out_dir) {
    config.validate();
    std::vector<int> owned = frames ? std::move(*frames) : scene.frames(Split::train);
    Trainer trainer(scene, owned, config, config.seed);
    TrainLog log;
    const std::vector<int> eval_frames = spaced_subset(scene.frames(Split::test), config.eval_images);

    std::ofstream render_log;
    if (out_dir) {
        fs::create_directories(*out_dir / "renders");
        render_log.open(*out_dir / "render_stats.csv");
        render_log << "step,psnr,mean_samples_per_pixel\n";
    }

    const auto start = std::chrono::steady_clock::now();
    for (int s = 1; s <= config.steps; ++s) {
        TrainLogEntry entry;
        entry.loss = trainer.step();
        entry.step = trainer.steps_done();
        const bool last = s == config.steps;
        if (!eval_frames.empty() && ((config.eval_every > 0 && s % config.eval_every == 0) || last)) {
            const EvalResult ev = evaluate(trainer.model(), trainer.grid(), scene, eval_frames, config.threads);
            entry.psnr = ev.psnr;
            if (out_dir) {
                render_log << s << "," << ev.psnr << "," << ev.mean_samples_per_pixel << "\n";
                render_log.flush();
                const RenderedImage r = render_image(trainer.model(), trainer.grid(), scene.cameras[eval_frames.front()],
                                                     default_background(scene.channels), scene.bounds);
                char name[64];
                std::snprintf(name, sizeof(name), "step_%06d.png", s);
                write_png(*out_dir / "renders" / name, r.image);
            }
        }
        if (out_dir && config.checkpoint_every > 0 && s % config.checkpoint_every == 0) {
            char name[64];
            std::snprintf(name, sizeof(name), "step_%06d.tdnf", s);
            save_checkpoint(*out_dir / name, trainer.model(), trainer.grid(), &trainer.adam());
        }
        entry.elapsed_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        log.entries.push_back(entry);
    }
    if (out_dir) {
        save_checkpoint(*out_dir / "final.tdnf", trainer.model(), trainer.grid(), &trainer.adam());
        log.write_csv(*out_dir / "train_log.csv");
    }
    return TrainResult{trainer.model(), trainer.grid(), trainer.adam(), std::move(log)};
}

}  // namespace mngp
