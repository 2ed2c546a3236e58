// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#include "mngp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace mngp {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace fs = std::filesystem;

std::size_t NamedTensor::element_count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= static_cast<std::size_t>(d);
    return n;
}

std::size_t NamedTensor::payload_bytes() const {
    const std::size_t n = element_count();
    switch (dtype) {
        case DType::f32: return n * 4;
        case DType::f16: return n * 2;
        case DType::u8_bitfield: return (n + 7) / 8;
    }
    return 0;
}

namespace {

constexpr char kMagic[4] = {'T', 'D', 'N', 'F'};

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const fs::path& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw FormatError("truncated checkpoint '" + path.string() + "'");
    return v;
}

}  // namespace

void write_tensors(const fs::path& path, const std::vector<NamedTensor>& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out.write(kMagic, 4);
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        MNGP_EXPECTS(t.data.size() == t.element_count(), "tensor '" + t.name + "' data does not match its dims");
        put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        put<std::uint8_t>(out, static_cast<std::uint8_t>(t.dtype));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
        for (auto d : t.dims) put<std::uint64_t>(out, d);
        switch (t.dtype) {
            case DType::f32:
                out.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * 4));
                break;
            case DType::f16: {
                std::vector<std::uint16_t> raw(t.data.size());
                for (std::size_t i = 0; i < raw.size(); ++i) {
                    raw[i] = Eigen::numext::bit_cast<std::uint16_t>(Eigen::half(t.data[i]));
                }
                out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 2));
                break;
            }
            case DType::u8_bitfield: {
                std::vector<std::uint8_t> raw(t.payload_bytes(), 0);
                for (std::size_t i = 0; i < t.data.size(); ++i) {
                    if (t.data[i] != 0.0f) raw[i >> 3] |= static_cast<std::uint8_t>(1u << (i & 7));
                }
                out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
                break;
            }
        }
    }
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::vector<NamedTensor> read_tensors(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open checkpoint '" + path.string() + "'");
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw FormatError("'" + path.string() + "' is not a TDNF checkpoint");
    const auto version = get<std::uint32_t>(in, path);
    if (version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto count = get<std::uint32_t>(in, path);
    std::vector<NamedTensor> tensors;
    tensors.reserve(count);
    for (std::uint32_t k = 0; k < count; ++k) {
        NamedTensor t;
        const auto name_len = get<std::uint32_t>(in, path);
        if (name_len > 4096) throw FormatError("implausible tensor name length in '" + path.string() + "'");
        t.name.resize(name_len);
        in.read(t.name.data(), name_len);
        const auto code = get<std::uint8_t>(in, path);
        if (code > 2) throw FormatError("unknown dtype code " + std::to_string(code) + " for '" + t.name + "'");
        t.dtype = static_cast<DType>(code);
        const auto rank = get<std::uint32_t>(in, path);
        if (rank > 8) throw FormatError("implausible rank for '" + t.name + "'");
        for (std::uint32_t r = 0; r < rank; ++r) t.dims.push_back(get<std::uint64_t>(in, path));
        const std::size_t n = t.element_count();
        t.data.resize(n);
        switch (t.dtype) {
            case DType::f32:
                in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(n * 4));
                break;
            case DType::f16: {
                std::vector<std::uint16_t> raw(n);
                in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * 2));
                for (std::size_t i = 0; i < n; ++i) {
                    t.data[i] = static_cast<float>(Eigen::numext::bit_cast<Eigen::half>(raw[i]));
                }
                break;
            }
            case DType::u8_bitfield: {
                std::vector<std::uint8_t> raw(t.payload_bytes());
                in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
                for (std::size_t i = 0; i < n; ++i) t.data[i] = (raw[i >> 3] >> (i & 7)) & 1u ? 1.0f : 0.0f;
                break;
            }
        }
        if (!in) throw FormatError("truncated checkpoint '" + path.string() + "'");
        tensors.push_back(std::move(t));
    }
    return tensors;
}

std::vector<NamedTensor> model_tensors(const FieldModel& model) {
    std::vector<NamedTensor> out;
    const DType dtype = model.precision() == Precision::mixed16 ? DType::f16 : DType::f32;
    const auto params = model.params();
    for (const auto& info : model.tensors()) {
        NamedTensor t;
        t.name = info.name;
        t.dtype = dtype;
        t.dims = info.dims;
        t.data.assign(params.begin() + static_cast<std::ptrdiff_t>(info.offset),
                      params.begin() + static_cast<std::ptrdiff_t>(info.offset + info.count));
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<NamedTensor> occupancy_tensors(const OccupancyGrid& grid) {
    const auto r = static_cast<std::uint64_t>(grid.resolution());
    NamedTensor ema{"occ.density_ema", grid.config().storage16 ? DType::f16 : DType::f32, {r, r, r},
                    grid.density_ema()};
    NamedTensor bits{"occ.bits", DType::u8_bitfield, {r, r, r}, std::vector<float>(grid.cell_count())};
    for (std::size_t i = 0; i < grid.cell_count(); ++i) bits.data[i] = grid.occupied_cell(i) ? 1.0f : 0.0f;
    return {std::move(ema), std::move(bits)};
}

void assign_model_tensors(FieldModel& model, const std::vector<NamedTensor>& tensors) {
    auto params = model.params();
    for (const auto& info : model.tensors()) {
        const NamedTensor* found = nullptr;
        for (const auto& t : tensors) {
            if (t.name == info.name) found = &t;
        }
        if (!found) throw FormatError("missing tensor '" + info.name + "'");
        if (found->data.size() != info.count) throw FormatError("tensor '" + info.name + "' has the wrong size");
        std::copy(found->data.begin(), found->data.end(), params.begin() + static_cast<std::ptrdiff_t>(info.offset));
    }
    model.quantize_to_storage();
}

namespace {

NamedTensor meta_tensor(const FieldModel& model, const OccupancyGrid& grid) {
    const auto& c = model.config();
    const auto& o = grid.config();
    std::vector<float> v = {static_cast<float>(c.grid.levels),
                            static_cast<float>(c.grid.log2_table_size),
                            static_cast<float>(c.grid.features),
                            static_cast<float>(c.grid.base_resolution),
                            static_cast<float>(c.grid.finest_resolution),
                            static_cast<float>(c.channels),
                            c.precision == Precision::mixed16 ? 1.0f : 0.0f,
                            static_cast<float>(c.hidden_width),
                            static_cast<float>(c.geo_features),
                            static_cast<float>(o.resolution),
                            o.decay,
                            o.threshold,
                            o.storage16 ? 1.0f : 0.0f};
    return {"meta.config", DType::f32, {v.size()}, v};
}

const NamedTensor& require(const std::vector<NamedTensor>& ts, const std::string& name) {
    for (const auto& t : ts) {
        if (t.name == name) return t;
    }
    throw FormatError("checkpoint lacks tensor '" + name + "'");
}

const NamedTensor* optional_tensor(const std::vector<NamedTensor>& ts, const std::string& name) {
    for (const auto& t : ts) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

}  // namespace

void save_checkpoint(const fs::path& path, const FieldModel& model, const OccupancyGrid& grid, const AdamState* adam) {
    std::vector<NamedTensor> ts;
    ts.push_back(meta_tensor(model, grid));
    for (auto& t : model_tensors(model)) ts.push_back(std::move(t));
    for (auto& t : occupancy_tensors(grid)) ts.push_back(std::move(t));
    if (adam) {
        const std::uint64_t n = adam->m.size();
        ts.push_back({"adam.m", DType::f32, {n}, adam->m});
        ts.push_back({"adam.v", DType::f32, {n}, adam->v});
        ts.push_back({"adam.master", DType::f32, {n}, adam->master});
        // Step counters split into 24-bit halves so they survive f32 storage exactly.
        auto split = [](std::uint64_t x) {
            return std::vector<float>{static_cast<float>(x & 0xFFFFFF), static_cast<float>(x >> 24)};
        };
        ts.push_back({"adam.step", DType::f32, {2}, split(adam->step)});
        ts.push_back({"adam.skipped", DType::f32, {2}, split(adam->skipped)});
    }
    write_tensors(path, ts);
}

Checkpoint load_checkpoint(const fs::path& path) {
    const auto ts = read_tensors(path);
    const auto& meta = require(ts, "meta.config").data;
    if (meta.size() < 13) throw FormatError("meta.config is too short");
    FieldConfig fc;
    fc.grid.levels = static_cast<int>(meta[0]);
    fc.grid.log2_table_size = static_cast<int>(meta[1]);
    fc.grid.features = static_cast<int>(meta[2]);
    fc.grid.base_resolution = static_cast<int>(meta[3]);
    fc.grid.finest_resolution = static_cast<int>(meta[4]);
    fc.channels = static_cast<int>(meta[5]);
    fc.precision = meta[6] != 0.0f ? Precision::mixed16 : Precision::full32;
    fc.hidden_width = static_cast<int>(meta[7]);
    fc.geo_features = static_cast<int>(meta[8]);
    OccupancyConfig oc;
    oc.resolution = static_cast<int>(meta[9]);
    oc.decay = meta[10];
    oc.threshold = meta[11];
    oc.storage16 = meta[12] != 0.0f;

    Checkpoint ck{FieldModel(fc), OccupancyGrid(oc), std::nullopt};
    assign_model_tensors(ck.model, ts);

    const auto& ema = require(ts, "occ.density_ema").data;
    const auto& bits = require(ts, "occ.bits").data;
    if (ema.size() != ck.grid.cell_count() || bits.size() != ck.grid.cell_count()) {
        throw FormatError("occupancy tensors do not match the grid resolution");
    }
    ck.grid.set_density_ema(ema);
    // Bits are restored verbatim: a freshly initialised grid is all-occupied with zero EMA.
    for (std::size_t i = 0; i < bits.size(); ++i) ck.grid.set_cell(i, bits[i] != 0.0f);

    if (const NamedTensor* m = optional_tensor(ts, "adam.m")) {
        AdamState a;
        a.m = m->data;
        a.v = require(ts, "adam.v").data;
        a.master = require(ts, "adam.master").data;
        auto join = [](const std::vector<float>& v) {
            return static_cast<std::uint64_t>(v[0]) | (static_cast<std::uint64_t>(v[1]) << 24);
        };
        a.step = join(require(ts, "adam.step").data);
        a.skipped = join(require(ts, "adam.skipped").data);
        if (a.m.size() != ck.model.param_count() || a.v.size() != a.m.size() || a.master.size() != a.m.size()) {
            throw FormatError("optimizer tensors do not match the model");
        }
        ck.adam = std::move(a);
    }
    return ck;
}

}  // namespace mngp
