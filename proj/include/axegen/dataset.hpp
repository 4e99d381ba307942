// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "axegen/design_space.hpp"
#include "axegen/perf_oracle.hpp"
#include "axegen/provenance.hpp"

namespace axe {

namespace nn {
class Pcg32;
}

struct DatasetRow {
    HWConfig hw;
    Workload w;
    PerfRecord perf;
};

// Labelled (HWConfig, Workload) -> PerfRecord table plus its normalization
// statistics. Rows are ordered by suite index, then by grid index.
struct Dataset {
    DesignGrid grid;
    CostParams cost;
    std::vector<Workload> suite;
    std::vector<DatasetRow> rows;
    std::vector<std::uint32_t> row_workload;  // suite index of each row
    Normalizer normalizer;
    Provenance provenance;
    std::string workload_sampling = "log_uniform";

    std::size_t size() const { return rows.size(); }
    std::size_t workload_index(const Workload& w) const;
    const WorkloadStats& stats_of_row(std::size_t row) const {
        return normalizer.workloads()[row_workload[row]];
    }
};

inline constexpr std::array<std::int64_t, 3> kWorkloadDimMin = {1, 1, 1};

// Log-uniform draws per dimension within [1, kWorkloadDimMax], deduplicated,
// in draw order.
std::vector<Workload> sample_workloads(std::size_t count, nn::Pcg32& rng);

// Labels every (workload, grid point) pair with the oracle. Workloads are
// evaluated in parallel; the result does not depend on the thread count.
Dataset generate(std::vector<Workload> suite, const DesignGrid& grid, const CostParams& cp,
                 const Provenance& prov);

Normalizer compute_normalizer(const DesignGrid& grid, const std::vector<Workload>& suite,
                              const std::vector<DatasetRow>& rows,
                              const std::vector<std::uint32_t>& row_workload);

inline constexpr std::string_view kDatasetHeader =
    "r,c,ip_bytes,wt_bytes,op_bytes,bw,loop,m,k,n,runtime_cycles,dram_bytes,energy_pj,power_w,edp";

// Writes DIR/dataset.csv and the DIR/dataset.json sidecar. Partial files are
// removed if either write fails.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

// Row-level split stratified by workload: each workload contributes
// round(val_fraction * rows) validation rows. Index lists are ascending.
Split split(const Dataset& ds, double val_fraction, nn::Pcg32& rng);

}  // namespace axe
