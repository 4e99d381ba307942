// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "axegen/design_space.hpp"

namespace axe {

// Energy and width constants of the analytical cost model. Defaults are the
// "cost_model_v1" calibration; any field may be overridden from JSON.
struct CostParams {
    std::int64_t elem_bytes = 1;       // operand width
    std::int64_t acc_bytes = 4;        // accumulator / output width
    double e_mac = 0.2;                // pJ per PE per compute cycle
    double e_sram = 2.0;               // pJ per buffer byte
    double e_dram = 50.0;              // pJ per DRAM byte
    double leak_per_kb_cycle = 0.0002; // pJ per kB of buffer per cycle
    double clock_ghz = 1.0;
    std::string id = "cost_model_v1";

    void validate() const;
    nlohmann::json to_json() const;
    // Missing fields keep their defaults.
    static CostParams from_json(const nlohmann::json& doc);
};

struct DramTraffic {
    std::int64_t in_bytes = 0;
    std::int64_t wt_bytes = 0;
    std::int64_t out_bytes = 0;

    std::int64_t total() const { return in_bytes + wt_bytes + out_bytes; }
};

struct PerfRecord {
    std::int64_t runtime_cycles = 0;
    std::int64_t dram_bytes = 0;
    double energy_pj = 0.0;
    double power_w = 0.0;
    double edp = 0.0;  // uJ * cycles

    bool operator==(const PerfRecord&) const = default;
};

struct TileCounts {
    std::int64_t row_tiles = 0;  // ceil(M / R)
    std::int64_t col_tiles = 0;  // ceil(N / C)
};

TileCounts tile_counts(const HWConfig& hw, const Workload& w);

// Output-stationary compute cycles: every (row tile, col tile) pair streams K
// partial products plus fill and drain of the full array. The drain runs along
// the array axis that holds the outer loop dimension (R for MNK, C for NMK).
std::int64_t compute_cycles(const HWConfig& hw, const Workload& w);

DramTraffic dram_traffic(const HWConfig& hw, const Workload& w, const CostParams& cp = {});

// Roofline of compute and DRAM transfer, plus a non-overlapped drain stall
// when one output tile does not fit the output buffer.
std::int64_t runtime(const HWConfig& hw, const Workload& w, const CostParams& cp = {});

double energy(const HWConfig& hw, const Workload& w, const CostParams& cp = {});

PerfRecord perf(const HWConfig& hw, const Workload& w, const CostParams& cp = {});

// Batch evaluation. `out[i]` receives perf(configs[i], w, cp). The parallel
// kernel splits the batch across OpenMP threads; results are bit-identical to
// the serial reference for any thread count.
void perf_batch(std::span<const HWConfig> configs, const Workload& w, const CostParams& cp,
                std::span<PerfRecord> out);
// Evaluate every point of an enumerable grid in lexicographic order.
void perf_grid(const DesignGrid& grid, const Workload& w, const CostParams& cp,
               std::span<PerfRecord> out);

namespace reference {
void perf_batch(std::span<const HWConfig> configs, const Workload& w, const CostParams& cp,
                std::span<PerfRecord> out);
void perf_grid(const DesignGrid& grid, const Workload& w, const CostParams& cp,
               std::span<PerfRecord> out);
}  // namespace reference

}  // namespace axe
