// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#include "mngp/budget.hpp"
#include "mngp/checkpoint.hpp"
#include "mngp/config.hpp"
#include "mngp/federated.hpp"
#include "mngp/metrics.hpp"
#include "mngp/trainer.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>

namespace fs = std::filesystem;
using namespace mngp;

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

struct Common {
    std::string config_file;
    std::vector<std::string> overrides;
    std::string out;
    std::string scene;
};

class Command {
public:
    Command(CLI::App& app, const std::string& name, const std::string& help) : sub_(app.add_subcommand(name, help)) {
        sub_->add_option("--config", common_.config_file, "key=value config file");
        sub_->add_option("--set", common_.overrides, "override one key (key=value), repeatable");
        const char* env = std::getenv("TDN_OUT");
        common_.out = env && *env ? env : "runs/" + name;
        sub_->add_option("--out", common_.out, "output directory")->capture_default_str();
    }

    CLI::App* app() { return sub_; }
    Common& common() { return common_; }

    void scene_option(bool required) {
        auto* o = sub_->add_option("--scene", common_.scene, "scene directory with transforms_*.json");
        if (required) o->required();
    }

    /// Exposes a config key as --flag.
    void key_flag(const std::string& flag, const std::string& key) {
        keyed_.push_back({key, std::make_shared<std::string>()});
        sub_->add_option("--" + flag, *keyed_.back().second, "sets config key '" + key + "'");
    }

    RunConfig resolve() const {
        RunConfig cfg;
        if (!common_.config_file.empty()) cfg.load_file(common_.config_file);
        for (const auto& [key, value] : keyed_) {
            if (!value->empty()) cfg.set(key, *value);
        }
        for (const auto& kv : common_.overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        return cfg;
    }

    fs::path prepare_out(const RunConfig& cfg) const {
        const fs::path out(common_.out);
        fs::create_directories(out);
        cfg.write(out / "config.txt");
        return out;
    }

private:
    CLI::App* sub_;
    Common common_;
    std::vector<std::pair<std::string, std::shared_ptr<std::string>>> keyed_;
};

void add_training_flags(Command& c) {
    c.key_flag("steps", "steps");
    c.key_flag("batch", "batch");
    c.key_flag("seed", "seed");
    c.key_flag("threads", "threads");
    c.key_flag("resolution", "resolution");
    c.key_flag("precision", "precision");
    c.key_flag("log2-t", "log2_table_size");
    c.key_flag("channels", "channels");
}

Scene load(const std::string& dir, const RunConfig& cfg, int channels) {
    LoadOptions opt = cfg.load_options();
    opt.channels = channels;
    return load_scene(dir, opt);
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    throw ConfigError("split must be train or test, got '" + s + "'");
}

void print_eval(std::ostream& os, const EvalResult& ev) {
    os << std::fixed << std::setprecision(4) << "images " << ev.images << "  psnr " << ev.psnr << " dB  ssim "
       << ev.ssim << "  samples/pixel " << std::setprecision(2) << ev.mean_samples_per_pixel << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"microngp: memory-shrunk hash-grid NeRF training, federation and budgeting"};
    app.require_subcommand(1);

    Command train_cmd(app, "train", "train a radiance field on one scene");
    train_cmd.scene_option(true);
    add_training_flags(train_cmd);

    Command render_cmd(app, "render", "render a checkpoint at one pose or a whole split");
    render_cmd.scene_option(true);
    std::string ckpt_path;
    std::string split_name = "test";
    int frame = -1;
    render_cmd.app()->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    render_cmd.app()->add_option("--split", split_name, "split to render")->capture_default_str();
    render_cmd.app()->add_option("--frame", frame, "single frame index within the split");
    render_cmd.key_flag("threads", "threads");
    render_cmd.key_flag("resolution", "resolution");

    Command eval_cmd(app, "eval", "evaluate a checkpoint (mean PSNR / SSIM)");
    eval_cmd.scene_option(true);
    eval_cmd.app()->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    eval_cmd.app()->add_option("--split", split_name, "split to evaluate")->capture_default_str();
    eval_cmd.key_flag("threads", "threads");
    eval_cmd.key_flag("resolution", "resolution");

    Command fed_cmd(app, "federate", "simulate federated training");
    fed_cmd.scene_option(true);
    add_training_flags(fed_cmd);
    fed_cmd.key_flag("clients", "clients");
    fed_cmd.key_flag("partition", "partition");
    fed_cmd.key_flag("payload", "payload");
    fed_cmd.key_flag("rounds", "rounds");
    fed_cmd.key_flag("pretrain-steps", "pretrain_steps");
    fed_cmd.key_flag("local-steps", "local_steps");

    Command sweep_cmd(app, "sweep", "train and evaluate a (B, T) grid");
    sweep_cmd.scene_option(true);
    add_training_flags(sweep_cmd);
    sweep_cmd.key_flag("batches", "sweep_batches");
    sweep_cmd.key_flag("log2-ts", "sweep_log2_t");

    Command part_cmd(app, "partition", "write a frame-to-client partition plan");
    part_cmd.scene_option(true);
    part_cmd.key_flag("clients", "clients");
    part_cmd.key_flag("partition", "partition");
    part_cmd.key_flag("seed", "seed");
    part_cmd.key_flag("resolution", "resolution");

    Command budget_cmd(app, "budget", "print the memory and operations budget");
    add_training_flags(budget_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        if (train_cmd.app()->parsed()) {
            const RunConfig cfg = train_cmd.resolve();
            const TrainConfig tc = cfg.train();
            const fs::path out = train_cmd.prepare_out(cfg);
            const Scene scene = load(train_cmd.common().scene, cfg, tc.field.channels);
            const TrainResult res = train(scene, tc, std::nullopt, out);
            for (const auto& e : res.log.entries) {
                if (e.psnr) std::cout << "step " << e.step << "  loss " << e.loss << "  psnr " << *e.psnr << "\n";
            }
            std::cout << "wrote " << (out / "final.tdnf").string() << "\n";
        } else if (render_cmd.app()->parsed() || eval_cmd.app()->parsed()) {
            Command& cmd = render_cmd.app()->parsed() ? render_cmd : eval_cmd;
            const RunConfig cfg = cmd.resolve();
            const fs::path out = cmd.prepare_out(cfg);
            const Checkpoint ck = load_checkpoint(ckpt_path);
            const Scene scene = load(cmd.common().scene, cfg, ck.model.channels());
            std::vector<int> frames = scene.frames(parse_split(split_name));
            if (frame >= 0) {
                if (frame >= static_cast<int>(frames.size())) throw ConfigError("--frame is out of range");
                frames = {frames[frame]};
            }
            const int threads = cfg.get_int("threads");
            if (render_cmd.app()->parsed()) {
                RenderOptions ro;
                ro.threads = threads;
                for (std::size_t i = 0; i < frames.size(); ++i) {
                    const RenderedImage r = render_image(ck.model, ck.grid, scene.cameras[frames[i]],
                                                         default_background(scene.channels), scene.bounds, ro);
                    char name[64];
                    std::snprintf(name, sizeof(name), "%s_%04d.png", split_name.c_str(), frame >= 0 ? frame : static_cast<int>(i));
                    write_png(out / name, r.image);
                }
                std::cout << "rendered " << frames.size() << " image(s) into " << out.string() << "\n";
            } else {
                const EvalResult ev = evaluate(ck.model, ck.grid, scene, frames, threads);
                print_eval(std::cout, ev);
                std::ofstream csv(out / "eval.csv");
                csv << "split,images,psnr,ssim,mean_samples_per_pixel\n"
                    << split_name << "," << ev.images << "," << std::setprecision(9) << ev.psnr << "," << ev.ssim << ","
                    << ev.mean_samples_per_pixel << "\n";
            }
        } else if (fed_cmd.app()->parsed()) {
            const RunConfig cfg = fed_cmd.resolve();
            const TrainConfig tc = cfg.train();
            const FederationConfig fc = cfg.federation();
            const fs::path out = fed_cmd.prepare_out(cfg);
            const Scene scene = load(fed_cmd.common().scene, cfg, tc.field.channels);
            const FederationResult res = run_federation(scene, tc, fc, out);
            for (std::size_t r = 0; r < res.global_psnr.size(); ++r) {
                std::cout << "round " << r << "  global psnr " << res.global_psnr[r] << "\n";
            }
            for (std::size_t c = 0; c < res.independent_psnr.size(); ++c) {
                std::cout << "client " << c << " alone  psnr " << res.independent_psnr[c] << "\n";
            }
            if (res.centralized_psnr) std::cout << "centralized  psnr " << *res.centralized_psnr << "\n";
            std::cout << "communication " << res.ledger.total_bytes() << " bytes, " << res.ledger.total_seconds()
                      << " s\n";
        } else if (sweep_cmd.app()->parsed()) {
            const RunConfig cfg = sweep_cmd.resolve();
            const TrainConfig tc = cfg.train();
            const fs::path out = sweep_cmd.prepare_out(cfg);
            const Scene scene = load(sweep_cmd.common().scene, cfg, tc.field.channels);
            const auto rows = sweep(scene, cfg.sweep_points(), tc, tc.eval_images);
            write_sweep_csv(out / "sweep.csv", rows);
            std::cout << "wrote " << (out / "sweep.csv").string() << "\n";
        } else if (part_cmd.app()->parsed()) {
            const RunConfig cfg = part_cmd.resolve();
            const fs::path out = part_cmd.prepare_out(cfg);
            const Scene scene = load(part_cmd.common().scene, cfg, cfg.get_int("channels"));
            const PartitionPlan plan = partition(scene, cfg.get_int("clients"), parse_partition_mode(cfg.get("partition")),
                                                 cfg.get_u64("seed"));
            write_partition(out / "partition.txt", plan);
            std::cout << "wrote " << (out / "partition.txt").string() << "\n";
        } else if (budget_cmd.app()->parsed()) {
            const RunConfig cfg = budget_cmd.resolve();
            const TrainConfig tc = cfg.train();
            const fs::path out = budget_cmd.prepare_out(cfg);
            const BudgetReport rep = memory_footprint(tc.field, tc.occupancy, tc.batch, cfg.scene_spec());
            std::cout << rep.to_text();
            std::ofstream(out / "budget.txt") << rep.to_text();
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return 0;
}
