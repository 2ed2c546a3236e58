// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#include "mngp/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace mngp {

namespace fs = std::filesystem;

const std::vector<ConfigKey>& RunConfig::keys() {
    static const std::vector<ConfigKey> k = {
        {"seed", "42", "seed for initialization, sampling and partitioning"},
        {"threads", "1", "worker threads (1 is fully deterministic)"},
        {"steps", "10000", "training steps"},
        {"batch", "8192", "effective batch B in samples"},
        {"tile", "1024", "samples per computation tile"},
        {"img_per_step", "1", "training images sampled per step"},
        {"lr", "0.01", "Adam learning rate"},
        {"beta1", "0.9", "Adam beta1"},
        {"beta2", "0.99", "Adam beta2"},
        {"eps", "1e-15", "Adam epsilon"},
        {"weight_decay", "1e-6", "L2 weight decay on MLP parameters"},
        {"huber_delta", "0.1", "Huber loss transition point"},
        {"grid_update_every", "256", "steps between occupancy grid updates"},
        {"max_samples", "1024", "samples per ray cap"},
        {"eval_every", "1000", "steps between evaluations"},
        {"eval_images", "8", "test frames per periodic evaluation (0 = all)"},
        {"checkpoint_every", "1000", "steps between checkpoints"},
        {"levels", "16", "hash grid levels L"},
        {"log2_table_size", "13", "log2 of the per-level table cap T"},
        {"features", "2", "features per level F"},
        {"base_resolution", "16", "coarsest grid resolution"},
        {"finest_resolution", "2048", "finest grid resolution"},
        {"channels", "3", "image channels (3 = RGB, 1 = grayscale)"},
        {"precision", "mixed16", "full32 or mixed16"},
        {"occ_resolution", "128", "occupancy grid cells per axis"},
        {"occ_decay", "0.95", "occupancy EMA decay"},
        {"occ_threshold", "0.01", "occupancy opacity threshold"},
        {"resolution", "160", "training image width after downscaling"},
        {"max_train_frames", "0", "cap on training frames (0 = all)"},
        {"max_test_frames", "0", "cap on test frames (0 = all)"},
        {"clients", "4", "federated clients"},
        {"pretrain_steps", "10000", "coordinator pre-training steps"},
        {"local_steps", "1000", "local steps per round"},
        {"rounds", "20", "communication rounds"},
        {"payload", "params_only", "with_grid or params_only"},
        {"partition", "iid", "iid or non-iid"},
        {"bandwidth", "15000000", "link bandwidth in bits per second"},
        {"fed_eval_images", "0", "test frames for federated evaluation (0 = all)"},
        {"run_independent", "true", "train the per-client baselines"},
        {"run_centralized", "true", "train the centralized baseline"},
        {"baseline_steps", "-1", "steps per independent client (-1 = pretrain + rounds * local)"},
        {"centralized_steps", "-1", "centralized steps (-1 = pretrain + rounds * local)"},
        {"budget_frames", "100", "stored images counted by the budget"},
        {"sweep_batches", "2048,4096,8192,16384", "batch sizes for the sweep"},
        {"sweep_log2_t", "12,13,14,15", "log2(T) values for the sweep"},
    };
    return k;
}

bool RunConfig::known(const std::string& key) {
    const auto& k = keys();
    return std::any_of(k.begin(), k.end(), [&](const ConfigKey& c) { return c.name == key; });
}

RunConfig::RunConfig() {
    for (const auto& k : keys()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!known(key)) throw ConfigError("unknown config key '" + key + "'");
    values_[key] = value;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

void RunConfig::parse_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (!known(key)) throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown config key '" + key + "'");
        values_[key] = trim(line.substr(eq + 1));
    }
}

void RunConfig::load_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    parse_text(ss.str(), path.string());
}

const std::string& RunConfig::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& s) {
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError("config key '" + key + "' expects a number, got '" + s + "'");
    }
    return v;
}

}  // namespace

int RunConfig::get_int(const std::string& key) const { return parse_number<int>(key, get(key)); }

std::uint64_t RunConfig::get_u64(const std::string& key) const { return parse_number<std::uint64_t>(key, get(key)); }

double RunConfig::get_double(const std::string& key) const {
    const std::string& s = get(key);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw ConfigError("config key '" + key + "' expects a number, got '" + s + "'");
    return v;
}

bool RunConfig::get_bool(const std::string& key) const {
    const std::string& s = get(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("config key '" + key + "' expects true or false, got '" + s + "'");
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
    std::vector<int> out;
    std::istringstream in(get(key));
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_number<int>(key, item));
    }
    return out;
}

std::string RunConfig::to_text() const {
    std::ostringstream os;
    for (const auto& k : keys()) os << k.name << " = " << values_.at(k.name) << "\n";
    return os.str();
}

void RunConfig::write(const fs::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << to_text();
}

TrainConfig RunConfig::train() const {
    TrainConfig c;
    c.steps = get_int("steps");
    c.batch = get_int("batch");
    c.tile = get_int("tile");
    c.img_per_step = get_int("img_per_step");
    c.adam.lr = static_cast<float>(get_double("lr"));
    c.adam.beta1 = static_cast<float>(get_double("beta1"));
    c.adam.beta2 = static_cast<float>(get_double("beta2"));
    c.adam.eps = static_cast<float>(get_double("eps"));
    c.adam.weight_decay_mlp = static_cast<float>(get_double("weight_decay"));
    c.huber_delta = static_cast<float>(get_double("huber_delta"));
    c.grid_update_every = get_int("grid_update_every");
    c.seed = get_u64("seed");
    c.max_samples = get_int("max_samples");
    c.threads = get_int("threads");
    c.eval_every = get_int("eval_every");
    c.eval_images = get_int("eval_images");
    c.checkpoint_every = get_int("checkpoint_every");
    c.field.grid.levels = get_int("levels");
    c.field.grid.log2_table_size = get_int("log2_table_size");
    c.field.grid.features = get_int("features");
    c.field.grid.base_resolution = get_int("base_resolution");
    c.field.grid.finest_resolution = get_int("finest_resolution");
    c.field.channels = get_int("channels");
    c.field.precision = parse_precision(get("precision"));
    c.occupancy.resolution = get_int("occ_resolution");
    c.occupancy.decay = static_cast<float>(get_double("occ_decay"));
    c.occupancy.threshold = static_cast<float>(get_double("occ_threshold"));
    c.field.grid.validate();
    c.validate();
    return c;
}

FederationConfig RunConfig::federation() const {
    FederationConfig f;
    f.n_clients = get_int("clients");
    f.pretrain_steps = get_int("pretrain_steps");
    f.local_steps = get_int("local_steps");
    f.rounds = get_int("rounds");
    f.payload = parse_payload_mode(get("payload"));
    f.partition = parse_partition_mode(get("partition"));
    f.bandwidth_bps = get_double("bandwidth");
    f.seed = get_u64("seed");
    f.eval_images = get_int("fed_eval_images");
    f.run_independent = get_bool("run_independent");
    f.run_centralized = get_bool("run_centralized");
    f.baseline_steps = get_int("baseline_steps");
    f.centralized_steps = get_int("centralized_steps");
    f.validate();
    return f;
}

LoadOptions RunConfig::load_options() const {
    LoadOptions o;
    o.target_resolution = get_int("resolution");
    o.channels = get_int("channels");
    o.max_train_frames = get_int("max_train_frames");
    o.max_test_frames = get_int("max_test_frames");
    return o;
}

SceneSpec RunConfig::scene_spec() const {
    SceneSpec s;
    s.frames = get_int("budget_frames");
    s.width = s.height = get_int("resolution");
    s.channels = get_int("channels");
    s.img_per_step = get_int("img_per_step");
    return s;
}

std::vector<SweepPoint> RunConfig::sweep_points() const {
    std::vector<SweepPoint> pts;
    for (int b : get_int_list("sweep_batches")) {
        for (int t : get_int_list("sweep_log2_t")) pts.push_back({b, t});
    }
    return pts;
}

}  // namespace mngp
