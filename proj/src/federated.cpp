// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#include "mngp/federated.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>

namespace mngp {

namespace fs = std::filesystem;

PayloadMode parse_payload_mode(const std::string& s) {
    if (s == "with_grid" || s == "with-grid") return PayloadMode::with_grid;
    if (s == "params_only" || s == "params-only") return PayloadMode::params_only;
    throw ConfigError("unknown payload mode '" + s + "' (expected with_grid or params_only)");
}

std::string to_string(PayloadMode m) { return m == PayloadMode::with_grid ? "with_grid" : "params_only"; }

void FederationConfig::validate() const {
    if (n_clients < 1) throw ConfigError("clients must be >= 1");
    if (pretrain_steps < 0) throw ConfigError("pretrain steps must be >= 0");
    if (local_steps < 0) throw ConfigError("local steps must be >= 0");
    if (rounds < 0) throw ConfigError("rounds must be >= 0");
    if (!(bandwidth_bps > 0.0)) throw ConfigError("bandwidth must be positive");
}

std::size_t Payload::bytes() const {
    std::size_t total = 0;
    for (const auto& t : tensors) total += t.payload_bytes();
    return total;
}

Payload make_payload(const FieldModel& model, const OccupancyGrid& grid, PayloadMode mode) {
    Payload p;
    p.tensors = model_tensors(model);
    if (mode == PayloadMode::with_grid) {
        NamedTensor ema;
        ema.name = "occ.density_ema";
        const auto r = static_cast<std::uint64_t>(grid.resolution());
        ema.dims = {r, r, r};
        ema.data = grid.density_ema();
        p.tensors.push_back(std::move(ema));
    }
    for (auto& t : p.tensors) {
        t.dtype = DType::f16;
        for (float& v : t.data) v = round_to_half(v);
    }
    return p;
}

std::size_t payload_bytes(const FieldModel& model, PayloadMode mode, const OccupancyConfig& occupancy) {
    std::size_t bytes = model.param_count() * 2;
    if (mode == PayloadMode::with_grid) {
        const auto r = static_cast<std::size_t>(occupancy.resolution);
        bytes += r * r * r * 2;
    }
    return bytes;
}

std::vector<NamedTensor> fedavg(const std::vector<std::vector<NamedTensor>>& sets, std::vector<double> weights) {
    if (sets.empty()) throw AggregationError("no parameter sets to aggregate");
    if (weights.size() != sets.size()) throw AggregationError("one weight per parameter set is required");
    double wsum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw AggregationError("aggregation weights must be non-negative");
        wsum += w;
    }
    if (!(wsum > 0.0)) throw AggregationError("aggregation weights sum to zero");
    for (double& w : weights) w /= wsum;

    const auto& ref = sets.front();
    for (const auto& s : sets) {
        if (s.size() != ref.size()) throw AggregationError("parameter sets differ in tensor count");
        for (std::size_t t = 0; t < s.size(); ++t) {
            if (s[t].name != ref[t].name || s[t].dims != ref[t].dims || s[t].data.size() != ref[t].data.size()) {
                throw AggregationError("tensor '" + s[t].name + "' does not match '" + ref[t].name + "'");
            }
        }
    }

    std::vector<NamedTensor> out = ref;
    std::vector<double> acc;
    for (std::size_t t = 0; t < ref.size(); ++t) {
        acc.assign(ref[t].data.size(), 0.0);
        for (std::size_t s = 0; s < sets.size(); ++s) {
            const auto& d = sets[s][t].data;
            for (std::size_t i = 0; i < d.size(); ++i) acc[i] += weights[s] * static_cast<double>(d[i]);
        }
        auto& dst = out[t].data;
        for (std::size_t i = 0; i < dst.size(); ++i) {
            const float v = static_cast<float>(acc[i]);
            dst[i] = out[t].dtype == DType::f16 ? round_to_half(v) : v;
        }
    }
    return out;
}

double round_seconds(double payload_bytes, int n_clients, double bandwidth_bps) {
    return 2.0 * n_clients * payload_bytes * 8.0 / bandwidth_bps;
}

const CommLedger::Entry& CommLedger::record(int round, std::uint64_t bytes) {
    Entry e;
    e.round = round;
    e.bytes = bytes;
    e.seconds = static_cast<double>(bytes) * 8.0 / bandwidth_bps;
    e.cumulative_bytes = total_bytes() + bytes;
    e.cumulative_seconds = total_seconds() + e.seconds;
    entries.push_back(e);
    return entries.back();
}

namespace {

const NamedTensor* find(const std::vector<NamedTensor>& ts, const std::string& name) {
    for (const auto& t : ts) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

std::vector<float> flatten(const FieldModel& model, const std::vector<NamedTensor>& ts) {
    std::vector<float> flat(model.param_count());
    for (const auto& info : model.tensors()) {
        const NamedTensor* t = find(ts, info.name);
        if (!t || t->data.size() != info.count) throw AggregationError("payload lacks tensor '" + info.name + "'");
        std::copy(t->data.begin(), t->data.end(), flat.begin() + static_cast<std::ptrdiff_t>(info.offset));
    }
    return flat;
}

std::uint64_t client_seed(std::uint64_t base, int client) {
    return client == 0 ? base : base + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(client);
}

}  // namespace

void apply_payload(Client& client, const std::vector<NamedTensor>& tensors, PayloadMode mode) {
    Trainer& tr = *client.trainer;
    tr.receive_parameters(flatten(tr.model(), tensors));
    if (mode == PayloadMode::with_grid) {
        const NamedTensor* ema = find(tensors, "occ.density_ema");
        if (!ema || ema->data.size() != tr.grid().cell_count()) throw AggregationError("payload lacks occ.density_ema");
        tr.grid().set_density_ema(ema->data);
    }
}

RoundResult run_round(std::vector<Client>& clients, int coordinator, const FederationConfig& config,
                      CommLedger& ledger, int round) {
    MNGP_EXPECTS(!clients.empty(), "a round needs clients");
    MNGP_EXPECTS(coordinator >= 0 && coordinator < static_cast<int>(clients.size()), "coordinator out of range");
    for (auto& c : clients) {
        for (int s = 0; s < config.local_steps; ++s) c.trainer->step();
    }

    std::vector<std::vector<NamedTensor>> uploads;
    std::vector<double> weights;
    std::size_t bytes = 0;
    for (const auto& c : clients) {
        Payload p = make_payload(c.trainer->model(), c.trainer->grid(), config.payload);
        bytes = p.bytes();
        uploads.push_back(std::move(p.tensors));
        weights.push_back(static_cast<double>(c.frames.size()));
    }

    RoundResult res;
    res.global = fedavg(uploads, weights);
    for (auto& c : clients) apply_payload(c, res.global, config.payload);
    res.ledger = ledger.record(round, 2ull * clients.size() * bytes);
    return res;
}

double FederationResult::best_independent() const {
    return independent_psnr.empty() ? 0.0 : *std::max_element(independent_psnr.begin(), independent_psnr.end());
}

void write_report(const fs::path& path, const std::vector<ReportRow>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << "round,client_id,psnr,payload_bytes,cumulative_comm_seconds\n" << std::setprecision(9);
    for (const auto& r : rows) {
        out << r.round << "," << r.client_id << "," << r.psnr << "," << r.payload_bytes << ","
            << r.cumulative_comm_seconds << "\n";
    }
}

FederationResult run_federation(const Scene& scene, const TrainConfig& train, const FederationConfig& config,
                                const std::optional<fs::path>& out_dir) {
    config.validate();
    train.validate();
    const PartitionPlan plan = partition(scene, config.n_clients, config.partition, config.seed);
    const std::vector<int> eval_frames = spaced_subset(scene.frames(Split::test), config.eval_images);
    const int threads = train.threads;

    std::vector<Client> clients(static_cast<std::size_t>(config.n_clients));
    for (int c = 0; c < config.n_clients; ++c) {
        clients[c].id = c;
        clients[c].frames = plan.client_frames(c);
        MNGP_EXPECTS(!clients[c].frames.empty(), "every client needs at least one training frame");
        clients[c].trainer = std::make_unique<Trainer>(scene, clients[c].frames, train, client_seed(train.seed, c));
    }
    Trainer& coord = *clients.front().trainer;

    CommLedger ledger;
    ledger.bandwidth_bps = config.bandwidth_bps;
    std::vector<ReportRow> rows;
    std::vector<double> curve;
    auto eval_global = [&](int round) {
        const double p = evaluate(coord.model(), coord.grid(), scene, eval_frames, threads).psnr;
        curve.push_back(p);
        rows.push_back({round, "global", p, payload_bytes(coord.model(), config.payload, coord.grid().config()),
                        ledger.total_seconds()});
    };

    for (int s = 0; s < config.pretrain_steps; ++s) coord.step();
    {
        const Payload init = make_payload(coord.model(), coord.grid(), config.payload);
        for (std::size_t c = 1; c < clients.size(); ++c) {
            apply_payload(clients[c], init.tensors, config.payload);
            // Receivers without a transmitted grid build their own from the received model.
            if (config.payload == PayloadMode::params_only) clients[c].trainer->refresh_grid();
        }
        ledger.record(0, (clients.size() - 1) * init.bytes());
    }
    eval_global(0);

    for (int r = 1; r <= config.rounds; ++r) {
        run_round(clients, 0, config, ledger, r);
        eval_global(r);
    }

    FederationResult res{coord.model(), coord.grid(), curve, {}, std::nullopt, ledger, {}, plan};

    const int total_steps = config.pretrain_steps + config.rounds * config.local_steps;
    if (config.run_independent) {
        const int steps = config.baseline_steps >= 0 ? config.baseline_steps : total_steps;
        for (int c = 0; c < config.n_clients; ++c) {
            Trainer solo(scene, clients[c].frames, train, client_seed(train.seed, c));
            for (int s = 0; s < steps; ++s) solo.step();
            const double p = evaluate(solo.model(), solo.grid(), scene, eval_frames, threads).psnr;
            res.independent_psnr.push_back(p);
            rows.push_back({config.rounds, std::to_string(c), p, 0, 0.0});
        }
    }
    if (config.run_centralized) {
        const int steps = config.centralized_steps >= 0 ? config.centralized_steps : total_steps;
        Trainer central(scene, scene.frames(Split::train), train, train.seed);
        for (int s = 0; s < steps; ++s) central.step();
        const double p = evaluate(central.model(), central.grid(), scene, eval_frames, threads).psnr;
        res.centralized_psnr = p;
        rows.push_back({config.rounds, "centralized", p, 0, 0.0});
    }
    res.report = std::move(rows);

    if (out_dir) {
        fs::create_directories(*out_dir);
        write_report(*out_dir / "federation.csv", res.report);
        write_partition(*out_dir / "partition.txt", plan);
        save_checkpoint(*out_dir / "global.tdnf", res.global_model, res.global_grid);
    }
    return res;
}

}  // namespace mngp
