// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "axegen/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>

#include "axegen/error.hpp"
#include "axegen/nn/checkpoint.hpp"

namespace axe {

using nn::Tensor;

std::string_view to_string(CondMode mode) {
    switch (mode) {
        case CondMode::Runtime: return "runtime";
        case CondMode::PowerPerfClass: return "power_perf_class";
        case CondMode::EdpClass: return "edp_class";
    }
    return "runtime";
}

CondMode parse_cond_mode(std::string_view text) {
    if (text == "runtime") return CondMode::Runtime;
    if (text == "power_perf_class") return CondMode::PowerPerfClass;
    if (text == "edp_class") return CondMode::EdpClass;
    throw ConfigError("unknown conditioning '" + std::string(text) +
                      "' (expected runtime, power_perf_class or edp_class)");
}

Phase1Mode phase1_mode_for(CondMode mode) {
    switch (mode) {
        case CondMode::Runtime: return Phase1Mode::Runtime;
        case CondMode::PowerPerfClass: return Phase1Mode::PowerPerf;
        case CondMode::EdpClass: return Phase1Mode::Edp;
    }
    return Phase1Mode::Runtime;
}

int class_label(int power_bin, int perf_bin, int n_power) { return power_bin + n_power * perf_bin; }

nlohmann::json ClassCounts::to_json() const {
    return {{"n_power", n_power}, {"n_perf", n_perf}, {"n_edp", n_edp}};
}

ClassCounts ClassCounts::from_json(const nlohmann::json& doc) {
    ClassCounts c;
    c.n_power = doc.value("n_power", c.n_power);
    c.n_perf = doc.value("n_perf", c.n_perf);
    c.n_edp = doc.value("n_edp", c.n_edp);
    if (c.n_power < 1 || c.n_perf < 1 || c.n_edp < 1) {
        throw ConfigError("class counts must be positive");
    }
    return c;
}

namespace {

// Rank-based bins for one workload's rows; returns the per-bin upper edges.
std::vector<double> bin_rows(const std::vector<std::size_t>& rows,
                             const std::function<double(std::size_t)>& value, int n_bins,
                             std::vector<int>& out) {
    std::vector<std::size_t> order = rows;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
    const std::size_t n = order.size();
    std::vector<double> cuts(static_cast<std::size_t>(std::max(n_bins - 1, 0)),
                             -std::numeric_limits<double>::infinity());
    for (std::size_t rank = 0; rank < n; ++rank) {
        const auto bin = static_cast<int>(rank * static_cast<std::size_t>(n_bins) / n);
        out[order[rank]] = bin;
        if (bin < n_bins - 1) {
            cuts[static_cast<std::size_t>(bin)] = value(order[rank]);
        }
    }
    return cuts;
}

}  // namespace

ClassBinner ClassBinner::fit(const Dataset& ds, const ClassCounts& counts) {
    ClassBinner b;
    b.counts_ = counts;
    b.power_.assign(ds.size(), 0);
    b.perf_.assign(ds.size(), 0);
    b.edp_.assign(ds.size(), 0);
    std::vector<std::vector<std::size_t>> strata(ds.suite.size());
    for (std::size_t r = 0; r < ds.size(); ++r) {
        strata[ds.row_workload[r]].push_back(r);
    }
    for (const auto& rows : strata) {
        b.power_cuts_.push_back(bin_rows(
            rows, [&](std::size_t r) { return ds.rows[r].perf.power_w; }, counts.n_power, b.power_));
        b.perf_cuts_.push_back(bin_rows(
            rows,
            [&](std::size_t r) {
                return normalize_runtime(static_cast<double>(ds.rows[r].perf.runtime_cycles),
                                         ds.stats_of_row(r));
            },
            counts.n_perf, b.perf_));
        b.edp_cuts_.push_back(bin_rows(
            rows, [&](std::size_t r) { return ds.rows[r].perf.edp; }, counts.n_edp, b.edp_));
    }
    return b;
}

nlohmann::json ClassBinner::to_json() const {
    return {{"counts", counts_.to_json()},
            {"power_cuts", power_cuts_},
            {"perf_cuts", perf_cuts_},
            {"edp_cuts", edp_cuts_}};
}

std::size_t class_count(CondMode mode, const ClassCounts& counts) {
    switch (mode) {
        case CondMode::Runtime: return 0;
        case CondMode::PowerPerfClass:
            return static_cast<std::size_t>(counts.n_power * counts.n_perf);
        case CondMode::EdpClass: return static_cast<std::size_t>(counts.n_edp);
    }
    return 0;
}

std::size_t cond_width(CondMode mode, const ClassCounts& counts) {
    return mode == CondMode::Runtime ? 1 : class_count(mode, counts);
}

// ---- Phase2Model -------------------------------------------------------------

namespace {

constexpr std::string_view kArchitecture = "axegen.phase2.ddpm_mlp_unet.v1";

DiffusionSettings settings_for(CondMode mode, const ClassCounts& counts, DiffusionProfile profile) {
    return profile_settings(profile, cond_width(mode, counts));
}

}  // namespace

Phase2Model::Phase2Model(CondMode mode, ClassCounts counts, DiffusionProfile profile,
                         std::uint64_t seed)
    : mode_(mode),
      counts_(counts),
      profile_(profile),
      seed_(seed),
      denoiser_(settings_for(mode, counts, profile).shape, seed),
      schedule_([&] {
          const auto s = settings_for(mode, counts, profile);
          return NoiseSchedule::linear(s.steps, s.beta_1, s.beta_T);
      }()),
      mean_("latent.mean", 1, kLatentDim),
      std_("latent.std", 1, kLatentDim),
      lo_("latent.lo", 1, kLatentDim),
      hi_("latent.hi", 1, kLatentDim) {
    std_.value.fill(1.0f);
    lo_.value.fill(-std::numeric_limits<float>::max());
    hi_.value.fill(std::numeric_limits<float>::max());
}

void Phase2Model::set_standardization(const Tensor& latents) {
    AXE_CHECK(latents.cols() == kLatentDim && latents.rows() > 0, "standardization needs latents");
    std::vector<double> sum(kLatentDim, 0.0);
    std::vector<double> sq(kLatentDim, 0.0);
    for (std::size_t i = 0; i < latents.rows(); ++i) {
        const auto row = latents.row(i);
        for (std::size_t j = 0; j < kLatentDim; ++j) {
            sum[j] += row[j];
        }
    }
    const auto n = static_cast<double>(latents.rows());
    for (std::size_t j = 0; j < kLatentDim; ++j) {
        sum[j] /= n;
    }
    for (std::size_t i = 0; i < latents.rows(); ++i) {
        const auto row = latents.row(i);
        for (std::size_t j = 0; j < kLatentDim; ++j) {
            const double d = row[j] - sum[j];
            sq[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < kLatentDim; ++j) {
        mean_.value(0, j) = static_cast<float>(sum[j]);
        std_.value(0, j) = static_cast<float>(std::max(std::sqrt(sq[j] / n), 1e-6));
        lo_.value(0, j) = std::numeric_limits<float>::max();
        hi_.value(0, j) = -std::numeric_limits<float>::max();
    }
    for (std::size_t i = 0; i < latents.rows(); ++i) {
        const auto row = latents.row(i);
        for (std::size_t j = 0; j < kLatentDim; ++j) {
            const float z = (row[j] - mean_.value(0, j)) / std_.value(0, j);
            lo_.value(0, j) = std::min(lo_.value(0, j), z);
            hi_.value(0, j) = std::max(hi_.value(0, j), z);
        }
    }
}

void Phase2Model::standardize(Tensor& latents) const {
    for (std::size_t i = 0; i < latents.rows(); ++i) {
        auto row = latents.row(i);
        for (std::size_t j = 0; j < kLatentDim; ++j) {
            row[j] = (row[j] - mean_.value(0, j)) / std_.value(0, j);
        }
    }
}

void Phase2Model::destandardize(Tensor& latents) const {
    for (std::size_t i = 0; i < latents.rows(); ++i) {
        auto row = latents.row(i);
        for (std::size_t j = 0; j < kLatentDim; ++j) {
            row[j] = row[j] * std_.value(0, j) + mean_.value(0, j);
        }
    }
}

void Phase2Model::copy_standardization(const Phase2Model& other) {
    mean_.value = other.mean_.value;
    std_.value = other.std_.value;
    lo_.value = other.lo_.value;
    hi_.value = other.hi_.value;
}

Tensor Phase2Model::runtime_condition(std::span<const float> normalized) const {
    if (mode_ != CondMode::Runtime) {
        throw ConfigError("model is conditioned on " + std::string(to_string(mode_)) +
                          ", not on runtime");
    }
    Tensor c(normalized.size(), 1);
    std::copy(normalized.begin(), normalized.end(), c.data());
    return c;
}

Tensor Phase2Model::class_condition(std::span<const int> class_ids) const {
    if (mode_ == CondMode::Runtime) {
        throw ConfigError("model is conditioned on runtime, not on a class label");
    }
    const std::size_t k = n_classes();
    Tensor c(class_ids.size(), k);
    for (std::size_t i = 0; i < class_ids.size(); ++i) {
        if (class_ids[i] < 0 || static_cast<std::size_t>(class_ids[i]) >= k) {
            throw ConfigError("class id " + std::to_string(class_ids[i]) + " outside [0, " +
                              std::to_string(k) + ")");
        }
        c(i, static_cast<std::size_t>(class_ids[i])) = 1.0f;
    }
    return c;
}

void Phase2Model::save(const std::filesystem::path& dir, nlohmann::json extra) const {
    extra["architecture"] = kArchitecture;
    extra["cond"] = to_string(mode_);
    extra["classes"] = counts_.to_json();
    extra["profile"] = to_string(profile_);
    extra["init_seed"] = seed_;
    extra["shape"] = denoiser_.shape().to_json();
    extra["schedule"] = schedule_.to_json();
    auto params = denoiser_.parameters();
    params.push_back(&mean_);
    params.push_back(&std_);
    params.push_back(&lo_);
    params.push_back(&hi_);
    nn::save_checkpoint(dir, std::move(extra), params);
}

Phase2Model Phase2Model::load(const std::filesystem::path& dir) {
    const auto manifest = nn::read_manifest(dir);
    if (manifest.value("architecture", "") != kArchitecture) {
        throw Error(dir.string() + " is not a phase-2 checkpoint");
    }
    Phase2Model model(parse_cond_mode(manifest.at("cond").get<std::string>()),
                      ClassCounts::from_json(manifest.at("classes")),
                      parse_profile(manifest.at("profile").get<std::string>()),
                      manifest.at("init_seed").get<std::uint64_t>());
    auto params = model.denoiser_.parameters();
    params.push_back(&model.mean_);
    params.push_back(&model.std_);
    params.push_back(&model.lo_);
    params.push_back(&model.hi_);
    nn::load_checkpoint(dir, params);
    return model;
}

Phase2Data build_phase2_data(Phase2Model& model, const Phase1Model& phase1, const Dataset& ds) {
    if (phase1.mode() != phase1_mode_for(model.mode())) {
        throw ConfigError("phase-2 conditioning " + std::string(to_string(model.mode())) +
                          " needs a phase-1 model trained in mode " +
                          std::string(to_string(phase1_mode_for(model.mode()))) + ", got " +
                          std::string(to_string(phase1.mode())));
    }
    const std::size_t n = ds.size();
    Phase2Data data{Tensor(n, kLatentDim), Tensor(n, cond_width(model.mode(), model.counts())),
                    Tensor(n, 3)};

    constexpr std::size_t kChunk = 4096;
    const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t ci = 0; ci < static_cast<std::int64_t>(n_chunks); ++ci) {
        const std::size_t begin = static_cast<std::size_t>(ci) * kChunk;
        const std::size_t end = std::min(n, begin + kChunk);
        std::vector<HWConfig> configs(end - begin);
        for (std::size_t r = begin; r < end; ++r) {
            configs[r - begin] = ds.rows[r].hw;
        }
        const Tensor v = phase1.encode(configs);
        std::memcpy(data.latents.data() + begin * kLatentDim, v.data(), v.size() * sizeof(float));
    }
    model.set_standardization(data.latents);
    model.standardize(data.latents);

    std::vector<std::array<float, 3>> wvec(ds.suite.size());
    for (std::size_t i = 0; i < ds.suite.size(); ++i) {
        wvec[i] = normalize_workload(ds.suite[i]);
    }
    std::optional<ClassBinner> binner;
    if (model.mode() != CondMode::Runtime) {
        binner = ClassBinner::fit(ds, model.counts());
    }
    for (std::size_t r = 0; r < n; ++r) {
        const auto& w = wvec[ds.row_workload[r]];
        std::copy(w.begin(), w.end(), data.cond_w.row(r).begin());
        switch (model.mode()) {
            case CondMode::Runtime:
                data.cond_p(r, 0) = static_cast<float>(normalize_runtime(
                    static_cast<double>(ds.rows[r].perf.runtime_cycles), ds.stats_of_row(r)));
                break;
            case CondMode::PowerPerfClass:
                data.cond_p(r, static_cast<std::size_t>(binner->power_perf_class(r))) = 1.0f;
                break;
            case CondMode::EdpClass:
                data.cond_p(r, static_cast<std::size_t>(binner->edp_bin(r))) = 1.0f;
                break;
        }
    }
    return data;
}

}  // namespace axe
