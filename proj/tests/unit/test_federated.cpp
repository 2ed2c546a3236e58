// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#include "mngp/federated.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <fstream>
#include <random>

using namespace mngp;

namespace {

NamedTensor tensor(const std::string& name, std::vector<float> data, DType dtype = DType::f32) {
    NamedTensor t;
    t.name = name;
    t.dtype = dtype;
    t.dims = {data.size()};
    t.data = std::move(data);
    return t;
}

std::vector<NamedTensor> set_of(std::vector<float> a, std::vector<float> b) {
    return {tensor("a", std::move(a)), tensor("b", std::move(b))};
}

std::vector<Client> make_clients(const Scene& scene, const TrainConfig& cfg, const std::vector<std::vector<int>>& parts) {
    std::vector<Client> clients(parts.size());
    for (std::size_t c = 0; c < parts.size(); ++c) {
        clients[c].id = static_cast<int>(c);
        clients[c].frames = parts[c];
        clients[c].trainer = std::make_unique<Trainer>(scene, parts[c], cfg, 100 + c);
    }
    return clients;
}

std::vector<std::vector<int>> split_train(const Scene& scene, std::size_t first) {
    const auto train = scene.frames(Split::train);
    return {std::vector<int>(train.begin(), train.begin() + static_cast<std::ptrdiff_t>(first)),
            std::vector<int>(train.begin() + static_cast<std::ptrdiff_t>(first), train.end())};
}

}  // namespace

TEST_CASE("fedavg examples") {
    SUBCASE("single set is the identity") {
        const auto s = set_of({1.0f, -2.0f}, {0.25f});
        const auto out = fedavg({s}, {3.0});
        CHECK(out[0].data == s[0].data);
        CHECK(out[1].data == s[1].data);
    }
    SUBCASE("equal weights give the arithmetic mean") {
        const auto out = fedavg({set_of({1.0f, 2.0f}, {4.0f}), set_of({3.0f, 6.0f}, {0.0f})}, {1.0, 1.0});
        CHECK(out[0].data == std::vector<float>{2.0f, 4.0f});
        CHECK(out[1].data == std::vector<float>{2.0f});
    }
    SUBCASE("weights are normalized") {
        const auto out = fedavg({set_of({0.0f}, {0.0f}), set_of({1.0f}, {1.0f})}, {25.0, 75.0});
        CHECK(out[0].data[0] == 0.75f);
    }
    SUBCASE("half tensors are rounded after averaging") {
        const std::vector<NamedTensor> a{tensor("h", {0.0f}, DType::f16)};
        const std::vector<NamedTensor> b{tensor("h", {0.1f}, DType::f16)};
        const auto out = fedavg({a, b}, {1.0, 2.0});
        CHECK(out[0].data[0] == round_to_half(static_cast<float>(0.1f * 2.0 / 3.0)));
    }
}

TEST_CASE("fedavg is linear in its inputs") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    auto rand_set = [&] {
        std::vector<float> a(16), b(4);
        for (auto& v : a) v = u(rng);
        for (auto& v : b) v = u(rng);
        return set_of(a, b);
    };
    const auto x = rand_set(), y = rand_set(), z = rand_set();
    const std::vector<double> w{0.2, 0.5, 0.3};
    const auto avg = fedavg({x, y, z}, w);
    for (std::size_t t = 0; t < 2; ++t) {
        for (std::size_t i = 0; i < x[t].data.size(); ++i) {
            const double expect = 0.2 * x[t].data[i] + 0.5 * y[t].data[i] + 0.3 * z[t].data[i];
            CHECK(avg[t].data[i] == doctest::Approx(expect).epsilon(1e-6));
        }
    }
    // Scaling every weight leaves the result unchanged.
    const auto scaled = fedavg({x, y, z}, {2.0, 5.0, 3.0});
    for (std::size_t t = 0; t < 2; ++t) CHECK(scaled[t].data == avg[t].data);
}

TEST_CASE("fedavg rejects malformed input") {
    const auto s = set_of({1.0f}, {2.0f});
    CHECK_THROWS_AS(fedavg({}, {}), AggregationError);
    CHECK_THROWS_AS(fedavg({s, s}, {1.0}), AggregationError);
    CHECK_THROWS_AS(fedavg({s, s}, {1.0, -1.0}), AggregationError);
    CHECK_THROWS_AS(fedavg({s, s}, {0.0, 0.0}), AggregationError);
    CHECK_THROWS_AS(fedavg({s, s}, {1.0, std::nan("")}), AggregationError);
    CHECK_THROWS_AS(fedavg({s, {s[0]}}, {1.0, 1.0}), AggregationError);
    CHECK_THROWS_AS(fedavg({s, set_of({1.0f, 2.0f}, {2.0f})}, {1.0, 1.0}), AggregationError);
    auto renamed = s;
    renamed[1].name = "c";
    CHECK_THROWS_AS(fedavg({s, renamed}, {1.0, 1.0}), AggregationError);
}

TEST_CASE("payload sizes for the default model") {
    const FieldModel model(FieldConfig{});
    const std::size_t params = payload_bytes(model, PayloadMode::params_only);
    const std::size_t grid = payload_bytes(model, PayloadMode::with_grid);
    CHECK(params == 530282u);
    CHECK(grid == 4724586u);
    const double share = static_cast<double>(grid - params) / static_cast<double>(grid);
    CHECK(share == doctest::Approx(0.8878).epsilon(1e-3));
    CHECK(share >= 0.85);
    CHECK(share <= 0.92);

    const OccupancyGrid occ;
    CHECK(make_payload(model, occ, PayloadMode::params_only).bytes() == params);
    CHECK(make_payload(model, occ, PayloadMode::with_grid).bytes() == grid);
}

TEST_CASE("payload contents") {
    FieldConfig fc;
    fc.precision = Precision::full32;
    FieldModel model(fc);
    model.initialize(5);
    OccupancyConfig oc;
    oc.resolution = 8;
    OccupancyGrid occ(oc);
    std::vector<float> ema(occ.cell_count());
    for (std::size_t i = 0; i < ema.size(); ++i) ema[i] = 0.37f * static_cast<float>(i);
    occ.set_density_ema(ema);

    const Payload lean = make_payload(model, occ, PayloadMode::params_only);
    for (const auto& t : lean.tensors) {
        CHECK(t.name.rfind("occ.", 0) != 0);
        CHECK(t.dtype == DType::f16);
        for (float v : t.data) REQUIRE(v == round_to_half(v));
    }
    const Payload full = make_payload(model, occ, PayloadMode::with_grid);
    CHECK(full.tensors.size() == lean.tensors.size() + 1);
    CHECK(full.tensors.back().name == "occ.density_ema");
    CHECK(full.tensors.back().data.size() == 512);
    CHECK(full.bytes() == lean.bytes() + 512 * 2);
}

TEST_CASE("round time model") {
    CHECK(round_seconds(0.52e6, 4, 15e6) == doctest::Approx(2.2187).epsilon(1e-4));
    CHECK(round_seconds(4.7e6, 4, 15e6) == doctest::Approx(20.053).epsilon(1e-4));
    CHECK(std::abs(round_seconds(0.52e6, 4, 15e6) / 2.24 - 1.0) < 0.05);
    CHECK(std::abs(round_seconds(4.7e6, 4, 15e6) / 20.16 - 1.0) < 0.05);
    CHECK(round_seconds(1000.0, 2, 8000.0) == 4.0);
}

TEST_CASE("ledger accumulates exactly") {
    CommLedger ledger;
    ledger.bandwidth_bps = 8e3;
    CHECK(ledger.total_bytes() == 0);
    ledger.record(0, 1000);
    ledger.record(1, 3000);
    const auto& e = ledger.record(2, 500);
    CHECK(e.seconds == 0.5);
    CHECK(e.cumulative_bytes == 4500u);
    CHECK(e.cumulative_seconds == 4.5);
    CHECK(ledger.total_seconds() == 4.5);
}

TEST_CASE("config validation") {
    CHECK(parse_payload_mode("with_grid") == PayloadMode::with_grid);
    CHECK(parse_payload_mode("params-only") == PayloadMode::params_only);
    CHECK_THROWS_AS(parse_payload_mode("grid"), ConfigError);
    FederationConfig c;
    c.validate();
    c.n_clients = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.local_steps = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.bandwidth_bps = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("round with no local steps leaves synchronized clients unchanged") {
    const Scene& scene = testing::small_scene(3);
    const TrainConfig cfg = testing::tiny_train_config();
    auto clients = make_clients(scene, cfg, split_train(scene, 5));
    for (int s = 0; s < 3; ++s) clients[0].trainer->step();
    const Payload init = make_payload(clients[0].trainer->model(), clients[0].trainer->grid(), PayloadMode::params_only);
    for (auto& c : clients) apply_payload(c, init.tensors, PayloadMode::params_only);
    const std::vector<float> before(clients[1].trainer->model().params().begin(),
                                    clients[1].trainer->model().params().end());

    FederationConfig fc;
    fc.local_steps = 0;
    CommLedger ledger;
    run_round(clients, 0, fc, ledger, 1);
    for (const auto& c : clients) {
        const auto p = c.trainer->model().params();
        CHECK(std::equal(p.begin(), p.end(), before.begin()));
    }
    CHECK(ledger.entries.size() == 1);
    CHECK(ledger.entries[0].bytes == 2u * 2u * init.bytes());
}

TEST_CASE("round averages local updates weighted by frame count") {
    const Scene& scene = testing::small_scene(3);
    const TrainConfig cfg = testing::tiny_train_config();
    FederationConfig fc;
    fc.local_steps = 2;
    fc.payload = PayloadMode::with_grid;

    auto clients = make_clients(scene, cfg, split_train(scene, 3));
    auto twins = make_clients(scene, cfg, split_train(scene, 3));
    std::vector<std::vector<NamedTensor>> uploads;
    for (auto& t : twins) {
        for (int s = 0; s < fc.local_steps; ++s) t.trainer->step();
        uploads.push_back(make_payload(t.trainer->model(), t.trainer->grid(), fc.payload).tensors);
    }
    const auto expect = fedavg(uploads, {3.0, 9.0});

    CommLedger ledger;
    const RoundResult res = run_round(clients, 0, fc, ledger, 1);
    REQUIRE(res.global.size() == expect.size());
    for (std::size_t t = 0; t < expect.size(); ++t) CHECK(res.global[t].data == expect[t].data);
    for (const auto& c : clients) {
        const auto p = c.trainer->model().params();
        const auto& info = c.trainer->model().tensors().front();
        CHECK(std::equal(expect.front().data.begin(), expect.front().data.end(),
                         p.begin() + static_cast<std::ptrdiff_t>(info.offset)));
        CHECK(c.trainer->grid().density_ema() == expect.back().data);
    }
}

TEST_CASE("local training does not leak between clients") {
    const Scene& scene = testing::small_scene(3);
    const TrainConfig cfg = testing::tiny_train_config();
    auto clients = make_clients(scene, cfg, split_train(scene, 6));
    const std::vector<float> before(clients[1].trainer->model().params().begin(),
                                    clients[1].trainer->model().params().end());
    const auto ema_before = clients[1].trainer->grid().density_ema();
    for (int s = 0; s < 6; ++s) clients[0].trainer->step();
    const auto after = clients[1].trainer->model().params();
    CHECK(std::equal(after.begin(), after.end(), before.begin()));
    CHECK(clients[1].trainer->grid().density_ema() == ema_before);
}

TEST_CASE("run_federation end to end") {
    const Scene& scene = testing::small_scene(3);
    const TrainConfig cfg = testing::tiny_train_config();
    FederationConfig fc;
    fc.n_clients = 2;
    fc.pretrain_steps = 3;
    fc.local_steps = 2;
    fc.rounds = 2;
    fc.eval_images = 1;
    fc.bandwidth_bps = 1e6;
    testing::TempDir dir("fed");
    const FederationResult res = run_federation(scene, cfg, fc, dir.path());

    const std::uint64_t bytes = payload_bytes(res.global_model, fc.payload, cfg.occupancy);
    REQUIRE(res.ledger.entries.size() == 3);
    CHECK(res.ledger.entries[0].bytes == bytes);
    CHECK(res.ledger.entries[1].bytes == 4 * bytes);
    CHECK(res.ledger.total_bytes() == 9 * bytes);
    CHECK(res.ledger.total_seconds() == doctest::Approx(9.0 * bytes * 8.0 / 1e6));
    CHECK(res.global_psnr.size() == 3);
    CHECK(res.independent_psnr.size() == 2);
    CHECK(res.centralized_psnr.has_value());
    CHECK(res.best_independent() >= res.independent_psnr[0]);
    CHECK(res.plan.client_frames(0).size() + res.plan.client_frames(1).size() == 12);

    CHECK(std::filesystem::exists(dir.path() / "federation.csv"));
    CHECK(std::filesystem::exists(dir.path() / "partition.txt"));
    CHECK(std::filesystem::exists(dir.path() / "global.tdnf"));
    std::ifstream in(dir.path() / "federation.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "round,client_id,psnr,payload_bytes,cumulative_comm_seconds");
    int rows = 0;
    for (std::string line; std::getline(in, line);) rows += !line.empty();
    CHECK(rows == 3 + 2 + 1);
}

TEST_CASE("single client federation reduces to local training") {
    const Scene& scene = testing::small_scene(3);
    const TrainConfig cfg = testing::tiny_train_config();
    FederationConfig fc;
    fc.n_clients = 1;
    fc.pretrain_steps = 2;
    fc.local_steps = 1;
    fc.rounds = 1;
    fc.eval_images = 1;
    fc.run_independent = false;
    fc.run_centralized = false;
    const FederationResult res = run_federation(scene, cfg, fc);
    CHECK(res.ledger.entries.front().bytes == 0);
    CHECK(res.global_psnr.size() == 2);
    CHECK(res.plan.client_frames(0).size() == 12);
}
