// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "axegen/conditioning.hpp"
#include "axegen/dataset.hpp"
#include "axegen/perf_oracle.hpp"
#include "axegen/phase1.hpp"
#include "axegen/provenance.hpp"

namespace axe {

// (t_gen - t_target) / t_target; throws ConfigError for t_target <= 0.
double error_gen(double t_gen, double t_target);

double median(std::vector<double> values);

// ---- baselines ---------------------------------------------------------------

enum class SearchObjective { MinEdp, MinRuntime, TargetRuntime };

// Lower is better. TargetRuntime scores |error_gen| against `target`.
double objective_value(const PerfRecord& perf, SearchObjective objective, double target = 0.0);

struct SearchResult {
    HWConfig best;
    PerfRecord perf;
    double objective = 0.0;
    std::size_t evaluations = 0;
};

// Best of `budget` uniform grid samples (first best wins ties). When the
// budget covers an enumerable grid the whole grid is scanned instead.
SearchResult random_search_baseline(const DesignGrid& grid, std::size_t budget, const Workload& w,
                                    SearchObjective objective, double target, const CostParams& cp,
                                    nn::Pcg32& rng);

struct LatentGdOptions {
    int steps = 50;
    double lr = 0.1;
    int max_restarts = 5;

    nlohmann::json to_json() const;
    static LatentGdOptions from_json(const nlohmann::json& doc);
};

struct LatentGdResult {
    HWConfig design;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    int restarts = 0;
};

// Gradient descent on (g(v, w) - p*)^2 over the latent v, starting from the
// encoding of a random training-grid design. A step that raises the loss is
// rejected and halves the step size; a loss above 10x the initial one restarts
// from a fresh design.
LatentGdResult latent_gd_baseline(const Phase1Model& phase1, double target_runtime_cycles,
                                  const Workload& w, const DesignGrid& grid,
                                  const LatentGdOptions& options, nn::Pcg32& rng);

// ---- experiments -------------------------------------------------------------

enum class TargetSpacing { Log, Linear };
std::string_view to_string(TargetSpacing s);
TargetSpacing parse_target_spacing(std::string_view text);

// `count` targets evenly spaced over [min, max] observed runtime, endpoints
// included; Log spaces them in normalized log runtime, Linear in cycles.
std::vector<double> runtime_targets(const WorkloadStats& stats, std::size_t count,
                                    TargetSpacing spacing);

struct ExperimentSettings {
    std::size_t targets_per_workload = 20;
    std::size_t designs_per_target = 50;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::size_t n_config = 100;  // designs per class in the DSE experiments
    std::string grid = "target";
    TargetSpacing target_spacing = TargetSpacing::Log;
    LatentGdOptions latent_gd;

    nlohmann::json to_json() const;
    static ExperimentSettings from_json(const nlohmann::json& doc);
};

// Deterministic outputs of one experiment plus its wall-clock timings, which
// are kept in a separate file.
struct ExperimentReport {
    std::string name;
    nlohmann::json summary;
    std::string workloads_csv;
    std::vector<std::pair<std::string, std::string>> plots;  // file name, contents
    nlohmann::json timing;
};

void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

// Runtime-targeted generation: diffusion vs untrained diffusion, equal-budget
// random search and latent-space GD.
ExperimentReport run_perf_generation_experiment(const Phase1Model& phase1, const Phase2Model& phase2,
                                                const Dataset& ds,
                                                const ExperimentSettings& settings,
                                                const Provenance& prov);

// Power-performance class DSE scored by minimum EDP against random search.
ExperimentReport run_edp_dse(const Phase1Model& phase1, const Phase2Model& phase2, const Dataset& ds,
                             const ExperimentSettings& settings, const Provenance& prov);

// Lowest-EDP-class generation scored by best runtime.
ExperimentReport run_perf_dse(const Phase1Model& phase1, const Phase2Model& phase2, const Dataset& ds,
                              const ExperimentSettings& settings, const Provenance& prov);

}  // namespace axe
