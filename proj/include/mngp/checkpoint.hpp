// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mngp/field.hpp"
#include "mngp/occupancy.hpp"
#include "mngp/optimizer.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mngp {

enum class DType : std::uint8_t { f32 = 0, f16 = 1, u8_bitfield = 2 };

/// A named tensor as it appears on disk. Values are held as floats in memory regardless of
/// dtype; bitfields hold 0/1.
struct NamedTensor {
    std::string name;
    DType dtype = DType::f32;
    std::vector<std::uint64_t> dims;
    std::vector<float> data;

    std::size_t element_count() const;
    std::size_t payload_bytes() const;
};

/// File layout: "TDNF" | u32 version | u32 tensor count | per tensor:
/// u32 name length, name bytes, u8 dtype, u32 rank, u64 dims[rank], little-endian payload
/// (f32: 4 bytes, f16: 2 bytes, bitfield: ceil(n/8) bytes, LSB first).
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_tensors(const std::filesystem::path& path);

/// grid.level{l}, mlp.density.w{i}/b{i}, mlp.color.w{i}/b{i} at the model's storage dtype.
std::vector<NamedTensor> model_tensors(const FieldModel& model);
/// occ.density_ema (f16 when stored at 16 bits) and occ.bits.
std::vector<NamedTensor> occupancy_tensors(const OccupancyGrid& grid);

/// Copies named tensors back into the model; every model tensor must be present with a matching size.
void assign_model_tensors(FieldModel& model, const std::vector<NamedTensor>& tensors);

struct Checkpoint {
    FieldModel model;
    OccupancyGrid grid;
    std::optional<AdamState> adam;
};

void save_checkpoint(const std::filesystem::path& path, const FieldModel& model, const OccupancyGrid& grid,
                     const AdamState* adam = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mngp
