// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "axegen/conditioning.hpp"
#include "axegen/diffusion.hpp"
#include "axegen/dse.hpp"
#include "axegen/perf_oracle.hpp"
#include "axegen/phase1.hpp"

namespace axe {

// Everything that determines a pipeline run. Missing JSON fields take the
// defaults below; unknown top-level keys are rejected.
//
//   {
//     "seed": 1,
//     "grid": "training",
//     "workloads": {"count": 8} | {"list": ["64,768,768", ...]},
//     "cost_params": {...},
//     "phase1": {"mode": "runtime", "hyper": {...}},
//     "phase2": {"cond": "runtime", "profile": "desk", "hyper": {...}},
//     "classes": {"n_power": 3, "n_perf": 3, "n_edp": 10},
//     "experiments": {...},
//     "paths": {"root": "runs/desk"},
//     "workers": 0
//   }
struct RunConfig {
    std::uint64_t seed = 1;
    std::string grid = "training";
    std::size_t workload_count = 8;
    std::vector<Workload> workloads;  // explicit suite; overrides workload_count
    CostParams cost;
    Phase1Mode phase1_mode = Phase1Mode::Runtime;
    Phase1Hyper phase1;
    CondMode cond = CondMode::Runtime;
    DiffusionProfile profile = DiffusionProfile::Desk;
    Phase2Hyper phase2;
    ClassCounts classes;
    ExperimentSettings experiments;
    std::filesystem::path root = "runs/desk";
    int workers = 0;  // 0 = OpenMP default

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& doc);
    static RunConfig load(const std::filesystem::path& path);

    // FNV-1a of the canonical JSON without paths, worker count and the
    // per-invocation mode selections, so one config file hashes the same for
    // every stage and every model it trains.
    std::string hash() const;

    std::filesystem::path dataset_dir() const { return root / "dataset"; }
    std::filesystem::path phase1_dir(Phase1Mode mode) const;
    std::filesystem::path phase2_dir(CondMode cond) const;
    std::filesystem::path reports_dir() const { return root / "reports"; }
};

}  // namespace axe
