// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mngp/checkpoint.hpp"
#include "mngp/dataset.hpp"
#include "mngp/trainer.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace mngp {

enum class PayloadMode { with_grid, params_only };

PayloadMode parse_payload_mode(const std::string& s);
std::string to_string(PayloadMode m);

struct FederationConfig {
    int n_clients = 4;
    int pretrain_steps = 10000;
    int local_steps = 1000;
    int rounds = 20;
    PayloadMode payload = PayloadMode::params_only;
    PartitionMode partition = PartitionMode::iid;
    double bandwidth_bps = 15e6;
    std::uint64_t seed = 42;

    /// Test frames used for every evaluation (0 = the whole test split).
    int eval_images = 0;
    bool run_independent = true;
    bool run_centralized = true;
    /// Steps for each baseline; negative means pretrain_steps + rounds * local_steps.
    int baseline_steps = -1;
    int centralized_steps = -1;

    void validate() const;
};

/// Named tensors sent over the link, always encoded at 16 bits.
struct Payload {
    std::vector<NamedTensor> tensors;
    std::size_t bytes() const;
};

/// Snapshot of a client's model (and, with_grid, its density EMA) rounded to the wire encoding.
Payload make_payload(const FieldModel& model, const OccupancyGrid& grid, PayloadMode mode);

/// Wire size: every model tensor at 2 bytes per value, plus res^3 * 2 for the grid in with_grid mode.
std::size_t payload_bytes(const FieldModel& model, PayloadMode mode, const OccupancyConfig& occupancy = {});

class AggregationError : public Error {
public:
    using Error::Error;
};

/// Weighted elementwise mean in double precision. Weights are normalized to sum to one.
/// Results are rounded to each tensor's dtype.
std::vector<NamedTensor> fedavg(const std::vector<std::vector<NamedTensor>>& sets, std::vector<double> weights);

/// Seconds for one round in which each of `n_clients` uploads and downloads `bytes`.
double round_seconds(double payload_bytes, int n_clients, double bandwidth_bps);

struct CommLedger {
    struct Entry {
        int round = 0;
        std::uint64_t bytes = 0;
        double seconds = 0.0;
        std::uint64_t cumulative_bytes = 0;
        double cumulative_seconds = 0.0;
    };
    double bandwidth_bps = 15e6;
    std::vector<Entry> entries;

    const Entry& record(int round, std::uint64_t bytes);
    std::uint64_t total_bytes() const { return entries.empty() ? 0 : entries.back().cumulative_bytes; }
    double total_seconds() const { return entries.empty() ? 0.0 : entries.back().cumulative_seconds; }
};

struct Client {
    int id = 0;
    std::vector<int> frames;
    std::unique_ptr<Trainer> trainer;
};

/// Installs an aggregated payload on a client. with_grid payloads also replace the density EMA.
void apply_payload(Client& client, const std::vector<NamedTensor>& tensors, PayloadMode mode);

struct RoundResult {
    std::vector<NamedTensor> global;
    CommLedger::Entry ledger;
};

/// One synchronous round: local training, upload, FedAvg weighted by frame counts, broadcast.
RoundResult run_round(std::vector<Client>& clients, int coordinator, const FederationConfig& config,
                      CommLedger& ledger, int round);

struct ReportRow {
    int round = 0;
    std::string client_id;
    double psnr = 0.0;
    std::uint64_t payload_bytes = 0;
    double cumulative_comm_seconds = 0.0;
};

struct FederationResult {
    FieldModel global_model;
    OccupancyGrid global_grid;
    /// Global test PSNR after pre-training (index 0) and after each round.
    std::vector<double> global_psnr;
    std::vector<double> independent_psnr;
    std::optional<double> centralized_psnr;
    CommLedger ledger;
    std::vector<ReportRow> report;
    PartitionPlan plan;

    double best_independent() const;
};

void write_report(const std::filesystem::path& path, const std::vector<ReportRow>& rows);

/// Coordinator (client 0) pre-trains on its partition, then `rounds` FedAvg rounds follow. The
/// global model is evaluated with the coordinator's occupancy grid after every round.
FederationResult run_federation(const Scene& scene, const TrainConfig& train, const FederationConfig& config,
                                const std::optional<std::filesystem::path>& out_dir = std::nullopt);

}  // namespace mngp
