// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "axegen/dataset.hpp"
#include "axegen/diffusion.hpp"
#include "axegen/phase1.hpp"

namespace axe {

// What the diffusion model is conditioned on.
//   runtime           scalar normalized log runtime
//   power_perf_class  one-hot of class_power + n_power * class_perf
//   edp_class         one-hot of the EDP percentile bin
enum class CondMode { Runtime, PowerPerfClass, EdpClass };

std::string_view to_string(CondMode mode);
CondMode parse_cond_mode(std::string_view text);
// Phase-1 supervision that matches each conditioning mode.
Phase1Mode phase1_mode_for(CondMode mode);

// class = power_bin + n_power * perf_bin
int class_label(int power_bin, int perf_bin, int n_power);

struct ClassCounts {
    int n_power = 3;
    int n_perf = 3;
    int n_edp = 10;

    nlohmann::json to_json() const;
    static ClassCounts from_json(const nlohmann::json& doc);
};

// Per-workload percentile bins. Bin 0 holds the lowest values (lowest power,
// fastest runtime, lowest EDP). Rows are ranked by value with ties broken by
// row order, and rank r of n goes to bin floor(r * N / n), so every bin holds
// n/N rows up to one.
class ClassBinner {
public:
    static ClassBinner fit(const Dataset& ds, const ClassCounts& counts);

    const ClassCounts& counts() const { return counts_; }
    int power_bin(std::size_t row) const { return power_[row]; }
    int perf_bin(std::size_t row) const { return perf_[row]; }
    int edp_bin(std::size_t row) const { return edp_[row]; }
    int power_perf_class(std::size_t row) const {
        return class_label(power_[row], perf_[row], counts_.n_power);
    }

    // Upper edge (largest member value) of each bin but the last, per workload.
    const std::vector<std::vector<double>>& power_cuts() const { return power_cuts_; }
    const std::vector<std::vector<double>>& perf_cuts() const { return perf_cuts_; }
    const std::vector<std::vector<double>>& edp_cuts() const { return edp_cuts_; }

    nlohmann::json to_json() const;

private:
    ClassCounts counts_;
    std::vector<int> power_;
    std::vector<int> perf_;
    std::vector<int> edp_;
    std::vector<std::vector<double>> power_cuts_;
    std::vector<std::vector<double>> perf_cuts_;
    std::vector<std::vector<double>> edp_cuts_;
};

// Width of the cond_p input for a mode.
std::size_t cond_width(CondMode mode, const ClassCounts& counts);
std::size_t class_count(CondMode mode, const ClassCounts& counts);

// Trained conditional generator: denoiser, schedule and latent standardization.
class Phase2Model {
public:
    Phase2Model(CondMode mode, ClassCounts counts, DiffusionProfile profile, std::uint64_t seed);

    CondMode mode() const { return mode_; }
    const ClassCounts& counts() const { return counts_; }
    DiffusionProfile profile() const { return profile_; }
    std::size_t n_classes() const { return class_count(mode_, counts_); }

    Denoiser& denoiser() { return denoiser_; }
    const Denoiser& denoiser() const { return denoiser_; }
    const NoiseSchedule& schedule() const { return schedule_; }

    // Per-dimension statistics of phase-1 latents; the diffusion model works on
    // (v - mean) / std.
    const nn::Tensor& latent_mean() const { return mean_.value; }
    const nn::Tensor& latent_std() const { return std_.value; }
    void set_standardization(const nn::Tensor& latents);
    void standardize(nn::Tensor& latents) const;
    void destandardize(nn::Tensor& latents) const;
    void copy_standardization(const Phase2Model& other);
    // Per-dimension range of the standardized training latents; the sampler
    // clips its clean-sample estimate to this box. Unbounded until
    // set_standardization runs.
    const nn::Tensor& latent_lo() const { return lo_.value; }
    const nn::Tensor& latent_hi() const { return hi_.value; }

    // Condition rows for a runtime target (normalized) or class id.
    nn::Tensor runtime_condition(std::span<const float> normalized) const;
    nn::Tensor class_condition(std::span<const int> class_ids) const;

    void save(const std::filesystem::path& dir, nlohmann::json extra) const;
    static Phase2Model load(const std::filesystem::path& dir);

private:
    CondMode mode_;
    ClassCounts counts_;
    DiffusionProfile profile_;
    std::uint64_t seed_;
    Denoiser denoiser_;
    NoiseSchedule schedule_;
    nn::Parameter mean_;
    nn::Parameter std_;
    nn::Parameter lo_;
    nn::Parameter hi_;
};

// Latents of every dataset row (from the frozen phase-1 encoder) with their
// conditions. Sets the model's standardization from the latents.
Phase2Data build_phase2_data(Phase2Model& model, const Phase1Model& phase1, const Dataset& ds);

}  // namespace axe
