// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#include "mngp/budget.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace mngp {

namespace fs = std::filesystem;

std::uint64_t BudgetReport::total_bytes() const {
    return hash_bytes + mlp_bytes + optimizer_bytes + gradient_bytes + grid_bytes + activation_bytes + image_bytes;
}

std::string BudgetReport::to_text() const {
    std::ostringstream os;
    auto line = [&](const char* name, double bytes) {
        os << std::left << std::setw(22) << name << std::right << std::setw(14) << std::fixed << std::setprecision(0)
           << bytes << " B  " << std::setw(10) << std::setprecision(3) << bytes / 1e6 << " MB\n";
    };
    line("hash tables", static_cast<double>(hash_bytes));
    line("mlp parameters", static_cast<double>(mlp_bytes));
    line("optimizer state", static_cast<double>(optimizer_bytes));
    line("gradients", static_cast<double>(gradient_bytes));
    line("occupancy grid", static_cast<double>(grid_bytes));
    line("activations", static_cast<double>(activation_bytes));
    line("stored images", static_cast<double>(image_bytes));
    line("total", static_cast<double>(total_bytes()));
    line("images per step", static_cast<double>(image_step_bytes));
    line("  at 800x800 RGBA", static_cast<double>(source_image_step_bytes));
    os << std::left << std::setw(22) << "ops per step" << std::right << std::setw(14) << std::setprecision(3)
       << ops_per_step / 1e9 << " GOps\n";
    return os.str();
}

std::size_t activation_elements_per_sample(const FieldModel& model) {
    const auto& grid = model.grid().config();
    std::size_t n = 0;
    n += static_cast<std::size_t>(grid.levels) * 8 * 2;  // corner indices and trilinear weights
    for (int d : model.density_mlp().dims()) n += static_cast<std::size_t>(d);
    for (int d : model.color_mlp().dims()) n += static_cast<std::size_t>(d);
    n += 1;          // sigma
    n += 3 + 3 + 2;  // position, direction, dt, transmittance
    return n;
}

double macs_per_sample(const FieldModel& model) {
    const auto& grid = model.grid().config();
    const double mlp = static_cast<double>(model.density_mlp().macs_per_sample() + model.color_mlp().macs_per_sample());
    const double encoding = static_cast<double>(grid.levels) * 8.0 * grid.features;
    const double composite = static_cast<double>(model.channels()) + 4.0;
    return 3.0 * mlp + 2.0 * encoding + 2.0 * composite;
}

double ops_per_step(const FieldModel& model, int batch) { return 2.0 * macs_per_sample(model) * batch; }

BudgetReport memory_footprint(const FieldConfig& field, const OccupancyConfig& occupancy, int batch,
                              const SceneSpec& scene) {
    MNGP_EXPECTS(batch >= 0, "batch must be non-negative");
    const FieldModel model(field);
    const std::uint64_t value_bytes = field.precision == Precision::mixed16 ? 2 : 4;
    const std::uint64_t hash_params = model.grid().param_count();
    const std::uint64_t mlp_params = model.param_count() - hash_params;
    const std::uint64_t all = model.param_count();
    const auto res = static_cast<std::uint64_t>(occupancy.resolution);
    const std::uint64_t pixel_bytes = static_cast<std::uint64_t>(scene.width) * scene.height * scene.channels;

    BudgetReport r;
    r.hash_bytes = hash_params * value_bytes;
    r.mlp_bytes = mlp_params * value_bytes;
    r.optimizer_bytes = all * 3 * 4;
    r.gradient_bytes = all * 4;
    r.grid_bytes = res * res * res * 2;
    r.activation_bytes = activation_elements_per_sample(model) * 2 * static_cast<std::uint64_t>(batch);
    r.image_bytes = static_cast<std::uint64_t>(scene.frames) * pixel_bytes;
    r.image_step_bytes = static_cast<std::uint64_t>(scene.img_per_step) * pixel_bytes;
    r.source_image_step_bytes = static_cast<std::uint64_t>(scene.img_per_step) * 800 * 800 * 4;
    r.ops_per_step = ops_per_step(model, batch);
    return r;
}

std::vector<SweepPoint> default_sweep_points() {
    std::vector<SweepPoint> pts;
    for (int b : {2048, 4096, 8192, 16384}) {
        for (int t = 12; t <= 15; ++t) pts.push_back({b, t});
    }
    return pts;
}

std::vector<SweepRow> sweep(const Scene& scene, const std::vector<SweepPoint>& points, const TrainConfig& base,
                            int eval_images) {
    const std::vector<int> eval_frames = spaced_subset(scene.frames(Split::test), eval_images);
    const std::vector<int> train_frames = scene.frames(Split::train);
    MNGP_EXPECTS(!train_frames.empty(), "sweep needs training frames");
    SceneSpec spec;
    spec.frames = static_cast<int>(train_frames.size());
    spec.width = scene.cameras[train_frames.front()].width;
    spec.height = scene.cameras[train_frames.front()].height;
    spec.channels = scene.channels;
    spec.img_per_step = base.img_per_step;

    std::vector<SweepRow> rows;
    for (const auto& p : points) {
        TrainConfig cfg = base;
        cfg.batch = p.batch;
        cfg.tile = std::min(base.tile, p.batch);
        cfg.field.grid.log2_table_size = p.log2_table_size;
        cfg.field.channels = scene.channels;
        cfg.validate();

        SweepRow row;
        row.point = p;
        row.budget = memory_footprint(cfg.field, cfg.occupancy, p.batch, spec);
        row.selected = p.batch == kSelectedPoint.batch && p.log2_table_size == kSelectedPoint.log2_table_size;
        Trainer tr(scene, train_frames, cfg, cfg.seed);
        for (int s = 0; s < cfg.steps; ++s) tr.step();
        if (!eval_frames.empty()) {
            const EvalResult ev = evaluate(tr.model(), tr.grid(), scene, eval_frames, cfg.threads);
            row.psnr = ev.psnr;
            row.ssim = ev.ssim;
        }
        rows.push_back(row);
    }
    return rows;
}

void write_sweep_csv(const fs::path& path, const std::vector<SweepRow>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << "B,T_log2,mem_bytes_total,mem_bytes_hash,mem_bytes_grid,mem_bytes_act,mem_bytes_opt,mem_bytes_img,"
           "gops_per_step,psnr,ssim,mem_bytes_mlp,mem_bytes_grad,selected\n";
    out << std::setprecision(9);
    for (const auto& r : rows) {
        const auto& b = r.budget;
        out << r.point.batch << "," << r.point.log2_table_size << "," << b.total_bytes() << "," << b.hash_bytes << ","
            << b.grid_bytes << "," << b.activation_bytes << "," << b.optimizer_bytes << "," << b.image_bytes << ","
            << b.ops_per_step / 1e9 << "," << r.psnr << "," << r.ssim << "," << b.mlp_bytes << "," << b.gradient_bytes
            << "," << (r.selected ? 1 : 0) << "\n";
    }
}

}  // namespace mngp
