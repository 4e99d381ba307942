// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "axegen/perf_oracle.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "axegen/error.hpp"

namespace axe {

namespace {

constexpr std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
    return (a + b - 1) / b;
}

void check_loop(const HWConfig& hw) {
    if (hw.loop != LoopOrder::MNK && hw.loop != LoopOrder::NMK) {
        throw ConfigError("loop order " + std::string(to_string(hw.loop)) +
                          " is reserved and not modelled");
    }
}

std::int64_t output_stall(const HWConfig& hw, const TileCounts& tiles, const CostParams& cp) {
    const std::int64_t tile_bytes = hw.r * hw.c * cp.acc_bytes;
    if (tile_bytes <= hw.op_bytes) {
        return 0;
    }
    return tiles.row_tiles * tiles.col_tiles * ceil_div(tile_bytes, hw.bw);
}

PerfRecord evaluate(const HWConfig& hw, const Workload& w, const CostParams& cp) {
    check_loop(hw);
    const TileCounts tiles = tile_counts(hw, w);
    const std::int64_t tile_pairs = tiles.row_tiles * tiles.col_tiles;
    const std::int64_t drain = hw.loop == LoopOrder::MNK ? hw.r : hw.c;
    const std::int64_t compute = tile_pairs * (w.k + hw.r + hw.c + drain - 2);

    const DramTraffic traffic = dram_traffic(hw, w, cp);
    const std::int64_t dram = traffic.total();
    const std::int64_t mem = ceil_div(dram, hw.bw);
    const std::int64_t cycles = std::max(compute, mem) + output_stall(hw, tiles, cp);

    const double sram_in = static_cast<double>(tile_pairs * w.k * hw.r * cp.elem_bytes);
    const double sram_wt = static_cast<double>(tile_pairs * w.k * hw.c * cp.elem_bytes);
    const double sram_out = static_cast<double>(tile_pairs * hw.r * hw.c * cp.acc_bytes);
    const double buffer_kb = static_cast<double>(hw.ip_bytes + hw.wt_bytes + hw.op_bytes) / 1024.0;

    const double e = cp.e_mac * static_cast<double>(hw.r * hw.c) * static_cast<double>(compute) +
                     cp.e_sram * (sram_in + sram_wt + sram_out) +
                     cp.e_dram * static_cast<double>(dram) +
                     cp.leak_per_kb_cycle * buffer_kb * static_cast<double>(cycles);

    PerfRecord rec;
    rec.runtime_cycles = cycles;
    rec.dram_bytes = dram;
    rec.energy_pj = e;
    const double seconds = static_cast<double>(cycles) / (cp.clock_ghz * 1e9);
    rec.power_w = e * 1e-12 / seconds;
    rec.edp = e * 1e-6 * static_cast<double>(cycles);
    return rec;
}

void check_sizes(std::size_t in, std::size_t out) {
    if (in != out) {
        throw Error("perf batch size mismatch: " + std::to_string(in) + " configs, " +
                    std::to_string(out) + " outputs");
    }
}

}  // namespace

void CostParams::validate() const {
    if (elem_bytes <= 0 || acc_bytes <= 0 || !(e_mac > 0) || !(e_sram > 0) || !(e_dram > 0) ||
        !(leak_per_kb_cycle > 0) || !(clock_ghz > 0)) {
        throw ConfigError("cost parameters must all be strictly positive");
    }
}

nlohmann::json CostParams::to_json() const {
    return {{"id", id},
            {"elem_bytes", elem_bytes},
            {"acc_bytes", acc_bytes},
            {"e_mac", e_mac},
            {"e_sram", e_sram},
            {"e_dram", e_dram},
            {"leak_per_kb_cycle", leak_per_kb_cycle},
            {"clock_ghz", clock_ghz}};
}

CostParams CostParams::from_json(const nlohmann::json& doc) {
    CostParams cp;
    cp.id = doc.value("id", cp.id);
    cp.elem_bytes = doc.value("elem_bytes", cp.elem_bytes);
    cp.acc_bytes = doc.value("acc_bytes", cp.acc_bytes);
    cp.e_mac = doc.value("e_mac", cp.e_mac);
    cp.e_sram = doc.value("e_sram", cp.e_sram);
    cp.e_dram = doc.value("e_dram", cp.e_dram);
    cp.leak_per_kb_cycle = doc.value("leak_per_kb_cycle", cp.leak_per_kb_cycle);
    cp.clock_ghz = doc.value("clock_ghz", cp.clock_ghz);
    cp.validate();
    return cp;
}

TileCounts tile_counts(const HWConfig& hw, const Workload& w) {
    return {ceil_div(w.m, hw.r), ceil_div(w.n, hw.c)};
}

std::int64_t compute_cycles(const HWConfig& hw, const Workload& w) {
    check_loop(hw);
    const TileCounts tiles = tile_counts(hw, w);
    const std::int64_t drain = hw.loop == LoopOrder::MNK ? hw.r : hw.c;
    return tiles.row_tiles * tiles.col_tiles * (w.k + hw.r + hw.c + drain - 2);
}

DramTraffic dram_traffic(const HWConfig& hw, const Workload& w, const CostParams& cp) {
    check_loop(hw);
    const TileCounts tiles = tile_counts(hw, w);
    const std::int64_t eb = cp.elem_bytes;
    std::int64_t in_refetch = 1;
    std::int64_t wt_refetch = 1;
    if (hw.loop == LoopOrder::MNK) {
        // A row tile of inputs is reused across all column tiles if it fits;
        // the full weight matrix is reused across row tiles if it fits.
        in_refetch = (hw.r * w.k * eb <= hw.ip_bytes) ? 1 : tiles.col_tiles;
        wt_refetch = (w.k * w.n * eb <= hw.wt_bytes) ? 1 : tiles.row_tiles;
    } else {
        wt_refetch = (w.k * hw.c * eb <= hw.wt_bytes) ? 1 : tiles.row_tiles;
        in_refetch = (w.m * w.k * eb <= hw.ip_bytes) ? 1 : tiles.col_tiles;
    }
    DramTraffic t;
    t.in_bytes = w.m * w.k * eb * in_refetch;
    t.wt_bytes = w.k * w.n * eb * wt_refetch;
    t.out_bytes = w.m * w.n * cp.acc_bytes;
    return t;
}

std::int64_t runtime(const HWConfig& hw, const Workload& w, const CostParams& cp) {
    return evaluate(hw, w, cp).runtime_cycles;
}

double energy(const HWConfig& hw, const Workload& w, const CostParams& cp) {
    return evaluate(hw, w, cp).energy_pj;
}

PerfRecord perf(const HWConfig& hw, const Workload& w, const CostParams& cp) {
    return evaluate(hw, w, cp);
}

void perf_batch(std::span<const HWConfig> configs, const Workload& w, const CostParams& cp,
                std::span<PerfRecord> out) {
    check_sizes(configs.size(), out.size());
    const auto n = static_cast<std::int64_t>(configs.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = evaluate(configs[static_cast<std::size_t>(i)], w, cp);
    }
}

void perf_grid(const DesignGrid& grid, const Workload& w, const CostParams& cp,
               std::span<PerfRecord> out) {
    const std::uint64_t total = grid.size();
    check_sizes(static_cast<std::size_t>(total), out.size());
    const auto n = static_cast<std::int64_t>(total);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = evaluate(grid.at(static_cast<std::uint64_t>(i)), w, cp);
    }
}

namespace reference {

void perf_batch(std::span<const HWConfig> configs, const Workload& w, const CostParams& cp,
                std::span<PerfRecord> out) {
    check_sizes(configs.size(), out.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
        out[i] = evaluate(configs[i], w, cp);
    }
}

void perf_grid(const DesignGrid& grid, const Workload& w, const CostParams& cp,
               std::span<PerfRecord> out) {
    check_sizes(static_cast<std::size_t>(grid.size()), out.size());
    grid.for_each([&](std::uint64_t i, const HWConfig& hw) { out[i] = evaluate(hw, w, cp); });
}

}  // namespace reference

}  // namespace axe
