// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "axegen/dataset.hpp"
#include "axegen/dse.hpp"
#include "axegen/provenance.hpp"
#include "axegen/run_config.hpp"

namespace axe {

using LogSink = std::function<void(const std::string&)>;

// Pipeline stages shared by the command line and the acceptance runner. Each
// stage writes its artifacts under `out` and returns the deterministic part of
// what it recorded.
namespace pipeline {

Provenance provenance(const RunConfig& cfg);

Dataset gen_dataset(const RunConfig& cfg, const std::filesystem::path& out, const LogSink& log);

// Returns the checkpoint manifest (history, validation metrics, lineage).
nlohmann::json train_phase1(const RunConfig& cfg, const std::filesystem::path& dataset,
                            const std::filesystem::path& out, const LogSink& log);

nlohmann::json train_phase2(const RunConfig& cfg, const std::filesystem::path& dataset,
                            const std::filesystem::path& phase1, const std::filesystem::path& out,
                            const LogSink& log);

enum class Experiment { EvalGen, DseEdp, DsePerf };
CondMode experiment_cond(Experiment e);

ExperimentReport run_experiment(Experiment e, const RunConfig& cfg,
                                const std::filesystem::path& dataset,
                                const std::filesystem::path& phase1,
                                const std::filesystem::path& phase2,
                                const std::filesystem::path& out, const LogSink& log);

// Merges experiment summaries found in `dirs`; throws ConfigError when their
// config hashes differ.
nlohmann::json merge_reports(const std::vector<std::filesystem::path>& dirs,
                             const std::filesystem::path& out);

// Throws ConfigError unless the artifact's manifest carries `expected`.
void require_hash(const std::filesystem::path& artifact, const std::string& found,
                  const std::string& expected);

}  // namespace pipeline

// Entry point of the axegen executable; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace axe
