// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json_fwd.hpp>

namespace axe {

namespace nn {
class Pcg32;
}

// Tile-loop nesting order. Only MNK and NMK (the two output-stationary
// orders) are produced by the built-in grids; the rest are reserved.
enum class LoopOrder : std::uint8_t { MNK = 0, NMK, KNM, NKM, MKN, KMN };

inline constexpr std::array<LoopOrder, 6> kAllLoopOrders = {
    LoopOrder::MNK, LoopOrder::NMK, LoopOrder::KNM,
    LoopOrder::NKM, LoopOrder::MKN, LoopOrder::KMN};

std::string_view to_string(LoopOrder order);
LoopOrder parse_loop_order(std::string_view text);

// Numeric design parameters in feature order.
enum class Param : std::uint8_t { R = 0, C, IP, WT, OP, BW };
inline constexpr std::size_t kNumNumeric = 6;
std::string_view to_string(Param p);

inline constexpr std::int64_t kMinArray = 4;
inline constexpr std::int64_t kMaxArray = 128;
inline constexpr std::int64_t kMinBuffer = 4096;
inline constexpr std::int64_t kMaxBuffer = 1048576;
inline constexpr std::int64_t kBufferStep = 128;
inline constexpr std::int64_t kMinBandwidth = 2;
inline constexpr std::int64_t kMaxBandwidth = 32;

struct HWConfig {
    std::int64_t r = kMinArray;
    std::int64_t c = kMinArray;
    std::int64_t ip_bytes = kMinBuffer;
    std::int64_t wt_bytes = kMinBuffer;
    std::int64_t op_bytes = kMinBuffer;
    std::int64_t bw = kMinBandwidth;
    LoopOrder loop = LoopOrder::MNK;

    std::int64_t get(Param p) const;
    void set(Param p, std::int64_t value);
    std::array<std::int64_t, kNumNumeric> numeric() const;

    bool operator==(const HWConfig&) const = default;
};

bool is_valid(const HWConfig& hw);
// Throws axe::ConfigError naming the violated bound.
void validate(const HWConfig& hw);

struct Workload {
    std::int64_t m = 1;
    std::int64_t k = 1;
    std::int64_t n = 1;

    bool operator==(const Workload&) const = default;
    auto operator<=>(const Workload&) const = default;
};

void validate(const Workload& w);
Workload parse_workload(std::string_view text);  // "M,K,N"
std::string to_string(const Workload& w);

// Allowed values per design parameter. Every list is sorted ascending and
// de-duplicated on construction.
class DesignGrid {
public:
    DesignGrid() = default;
    DesignGrid(std::string name,
               std::array<std::vector<std::int64_t>, kNumNumeric> values,
               std::vector<LoopOrder> loops);

    const std::string& name() const { return name_; }
    const std::vector<std::int64_t>& values(Param p) const {
        return values_[static_cast<std::size_t>(p)];
    }
    const std::vector<LoopOrder>& loops() const { return loops_; }
    std::size_t loop_index(LoopOrder order) const;

    // Exact |R|·|C|·|IP|·|WT|·|OP|·|BW|·|loop|.
    boost::multiprecision::cpp_int cardinality() const;
    // Cardinality as a 64-bit count; throws if it does not fit.
    std::uint64_t size() const;

    // Mixed-radix decode of a lexicographic index (r slowest, loop fastest).
    HWConfig at(std::uint64_t index) const;
    bool contains(const HWConfig& hw) const;

    // Visit every grid point once in lexicographic order.
    void for_each(const std::function<void(std::uint64_t, const HWConfig&)>& fn) const;
    std::vector<HWConfig> enumerate() const;

    HWConfig sample_uniform(nn::Pcg32& rng) const;

    // Snap a physical value to the nearest allowed value (ties -> smaller).
    std::int64_t snap(Param p, double value) const;

    nlohmann::json to_json() const;
    static DesignGrid from_json(const nlohmann::json& doc);

private:
    std::string name_;
    std::array<std::vector<std::int64_t>, kNumNumeric> values_;
    std::vector<LoopOrder> loops_;
};

DesignGrid training_grid();
// Fine grid: integer array sizes, 128 B buffer steps, 1 B/cycle bandwidth.
DesignGrid target_grid();
DesignGrid target_grid_all_loops();
// "training", "target", or a path to a JSON grid document.
DesignGrid load_grid(std::string_view name_or_path);

struct MinMax {
    double min = 0.0;
    double max = 1.0;

    double normalize(double x) const { return (x - min) / (max - min); }
    double denormalize(double p) const { return min + p * (max - min); }
};

// Per-workload label statistics. Runtime and EDP are stored in natural-log
// space, power in watts.
struct WorkloadStats {
    Workload workload;
    MinMax log_runtime;
    MinMax power;
    MinMax log_edp;
};

struct StatsLookup {
    const WorkloadStats* stats = nullptr;
    bool exact = false;
    double distance = 0.0;  // Euclidean distance in (ln M, ln K, ln N)
};

class Normalizer {
public:
    Normalizer() = default;
    Normalizer(std::array<MinMax, kNumNumeric> features, std::vector<WorkloadStats> workloads);

    // Feature ranges spanned by a grid.
    static std::array<MinMax, kNumNumeric> feature_ranges(const DesignGrid& grid);

    const std::array<MinMax, kNumNumeric>& features() const { return features_; }
    const std::vector<WorkloadStats>& workloads() const { return workloads_; }

    const WorkloadStats* find(const Workload& w) const;
    // Exact match if present, else the training workload nearest in log space.
    StatsLookup lookup(const Workload& w) const;

    nlohmann::json to_json() const;
    static Normalizer from_json(const nlohmann::json& doc);

private:
    std::array<MinMax, kNumNumeric> features_{};
    std::vector<WorkloadStats> workloads_;
};

struct Features {
    std::array<float, kNumNumeric> numeric{};
    std::array<float, 2> loop_onehot{};
    bool clamped = false;
};

// Min-max normalise the numeric parameters; out-of-range values are clamped
// to [0,1] and flagged. Only MNK/NMK have a one-hot slot.
Features to_features(const HWConfig& hw, const std::array<MinMax, kNumNumeric>& ranges);
// Inverse of the numeric min-max map (no rounding).
std::array<double, kNumNumeric> from_features(std::span<const float> numeric,
                                              const std::array<MinMax, kNumNumeric>& ranges);

// Snap physical numerics to the grid and take the argmax loop logit over the
// grid's loop orders (ties resolve to the earlier order, i.e. MNK).
HWConfig round_to_grid(std::span<const double> raw, std::span<const float> loop_logits,
                       const DesignGrid& grid);

double normalize_runtime(double cycles, const WorkloadStats& stats);
double denormalize_runtime(double p, const WorkloadStats& stats);
double normalize_power(double watts, const WorkloadStats& stats);
double denormalize_power(double p, const WorkloadStats& stats);
double normalize_edp(double edp, const WorkloadStats& stats);
double denormalize_edp(double p, const WorkloadStats& stats);

// Conditioning vector for a workload: ln(dim) min-max scaled over the
// supported GEMM ranges M <= 1024, K <= 4096, N <= 30000.
inline constexpr std::array<std::int64_t, 3> kWorkloadDimMax = {1024, 4096, 30000};
std::array<float, 3> normalize_workload(const Workload& w);

}  // namespace axe
