// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "axegen/design_space.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "axegen/error.hpp"
#include "axegen/nn/rng.hpp"

namespace axe {

namespace {

constexpr std::array<std::string_view, 6> kLoopNames = {"mnk", "nmk", "knm", "nkm", "mkn", "kmn"};
constexpr std::array<std::string_view, kNumNumeric> kParamNames = {"r", "c", "ip", "wt", "op", "bw"};

std::vector<std::int64_t> range_values(std::int64_t lo, std::int64_t hi, std::int64_t step) {
    if (step <= 0 || hi < lo) {
        throw ConfigError("invalid range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                          "] step " + std::to_string(step));
    }
    std::vector<std::int64_t> out;
    out.reserve(static_cast<std::size_t>((hi - lo) / step + 1));
    for (std::int64_t v = lo; v <= hi; v += step) {
        out.push_back(v);
    }
    return out;
}

std::vector<std::int64_t> kb_to_bytes(std::initializer_list<std::int64_t> kb) {
    std::vector<std::int64_t> out;
    for (auto v : kb) {
        out.push_back(v * 1024);
    }
    return out;
}

bool value_in_bounds(Param p, std::int64_t v) {
    switch (p) {
        case Param::R:
        case Param::C:
            return v >= kMinArray && v <= kMaxArray;
        case Param::IP:
        case Param::WT:
        case Param::OP:
            return v >= kMinBuffer && v <= kMaxBuffer && (v - kMinBuffer) % kBufferStep == 0;
        case Param::BW:
            return v >= kMinBandwidth && v <= kMaxBandwidth;
    }
    return false;
}

double log_distance(const Workload& a, const Workload& b) {
    const double dm = std::log(static_cast<double>(a.m)) - std::log(static_cast<double>(b.m));
    const double dk = std::log(static_cast<double>(a.k)) - std::log(static_cast<double>(b.k));
    const double dn = std::log(static_cast<double>(a.n)) - std::log(static_cast<double>(b.n));
    return std::sqrt(dm * dm + dk * dk + dn * dn);
}

nlohmann::json minmax_json(const MinMax& mm) { return nlohmann::json::array({mm.min, mm.max}); }

MinMax minmax_from(const nlohmann::json& j) {
    MinMax mm{j.at(0).get<double>(), j.at(1).get<double>()};
    if (!(mm.max > mm.min)) {
        throw ConfigError("normalizer range requires max > min");
    }
    return mm;
}

}  // namespace

std::string_view to_string(LoopOrder order) {
    return kLoopNames[static_cast<std::size_t>(order)];
}

LoopOrder parse_loop_order(std::string_view text) {
    for (std::size_t i = 0; i < kLoopNames.size(); ++i) {
        std::string lower(text);
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
        if (lower == kLoopNames[i]) {
            return static_cast<LoopOrder>(i);
        }
    }
    throw ConfigError("unknown loop order '" + std::string(text) + "'");
}

std::string_view to_string(Param p) {
    return kParamNames[static_cast<std::size_t>(p)];
}

std::int64_t HWConfig::get(Param p) const {
    switch (p) {
        case Param::R: return r;
        case Param::C: return c;
        case Param::IP: return ip_bytes;
        case Param::WT: return wt_bytes;
        case Param::OP: return op_bytes;
        case Param::BW: return bw;
    }
    return 0;
}

void HWConfig::set(Param p, std::int64_t value) {
    switch (p) {
        case Param::R: r = value; break;
        case Param::C: c = value; break;
        case Param::IP: ip_bytes = value; break;
        case Param::WT: wt_bytes = value; break;
        case Param::OP: op_bytes = value; break;
        case Param::BW: bw = value; break;
    }
}

std::array<std::int64_t, kNumNumeric> HWConfig::numeric() const {
    return {r, c, ip_bytes, wt_bytes, op_bytes, bw};
}

bool is_valid(const HWConfig& hw) {
    for (std::size_t i = 0; i < kNumNumeric; ++i) {
        const auto p = static_cast<Param>(i);
        if (!value_in_bounds(p, hw.get(p))) {
            return false;
        }
    }
    return static_cast<std::size_t>(hw.loop) < kAllLoopOrders.size();
}

void validate(const HWConfig& hw) {
    for (std::size_t i = 0; i < kNumNumeric; ++i) {
        const auto p = static_cast<Param>(i);
        if (!value_in_bounds(p, hw.get(p))) {
            throw ConfigError("hardware parameter " + std::string(to_string(p)) + "=" +
                              std::to_string(hw.get(p)) + " out of bounds");
        }
    }
}

void validate(const Workload& w) {
    if (w.m < 1 || w.k < 1 || w.n < 1) {
        throw ConfigError("workload dimensions must be positive, got " + to_string(w));
    }
}

Workload parse_workload(std::string_view text) {
    std::array<std::int64_t, 3> dims{};
    std::size_t pos = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto end = (i < 2) ? text.find(',', pos) : text.size();
        if (end == std::string_view::npos) {
            throw ConfigError("workload must be M,K,N: '" + std::string(text) + "'");
        }
        const auto field = text.substr(pos, end - pos);
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), dims[i]);
        if (ec != std::errc() || ptr != field.data() + field.size()) {
            throw ConfigError("workload must be M,K,N: '" + std::string(text) + "'");
        }
        pos = end + 1;
    }
    Workload w{dims[0], dims[1], dims[2]};
    validate(w);
    return w;
}

std::string to_string(const Workload& w) {
    return std::to_string(w.m) + "," + std::to_string(w.k) + "," + std::to_string(w.n);
}

// ---------------------------------------------------------------------------
// DesignGrid

DesignGrid::DesignGrid(std::string name, std::array<std::vector<std::int64_t>, kNumNumeric> values,
                       std::vector<LoopOrder> loops)
    : name_(std::move(name)), values_(std::move(values)), loops_(std::move(loops)) {
    for (std::size_t i = 0; i < kNumNumeric; ++i) {
        auto& list = values_[i];
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
        if (list.empty()) {
            throw ConfigError("grid parameter " + std::string(kParamNames[i]) + " has no values");
        }
        for (auto v : list) {
            if (!value_in_bounds(static_cast<Param>(i), v)) {
                throw ConfigError("grid value " + std::to_string(v) + " for " +
                                  std::string(kParamNames[i]) + " violates parameter bounds");
            }
        }
    }
    std::sort(loops_.begin(), loops_.end());
    loops_.erase(std::unique(loops_.begin(), loops_.end()), loops_.end());
    if (loops_.empty()) {
        throw ConfigError("grid has no loop orders");
    }
}

std::size_t DesignGrid::loop_index(LoopOrder order) const {
    const auto it = std::find(loops_.begin(), loops_.end(), order);
    if (it == loops_.end()) {
        throw ConfigError("loop order " + std::string(to_string(order)) + " not in grid");
    }
    return static_cast<std::size_t>(it - loops_.begin());
}

boost::multiprecision::cpp_int DesignGrid::cardinality() const {
    boost::multiprecision::cpp_int total = loops_.size();
    for (const auto& list : values_) {
        total *= list.size();
    }
    return total;
}

std::uint64_t DesignGrid::size() const {
    const auto total = cardinality();
    if (total > std::numeric_limits<std::uint64_t>::max()) {
        throw ConfigError("grid '" + name_ + "' is too large to enumerate");
    }
    return total.convert_to<std::uint64_t>();
}

HWConfig DesignGrid::at(std::uint64_t index) const {
    HWConfig hw;
    hw.loop = loops_[index % loops_.size()];
    index /= loops_.size();
    for (std::size_t i = kNumNumeric; i-- > 0;) {
        const auto& list = values_[i];
        hw.set(static_cast<Param>(i), list[index % list.size()]);
        index /= list.size();
    }
    return hw;
}

bool DesignGrid::contains(const HWConfig& hw) const {
    for (std::size_t i = 0; i < kNumNumeric; ++i) {
        if (!std::binary_search(values_[i].begin(), values_[i].end(), hw.get(static_cast<Param>(i)))) {
            return false;
        }
    }
    return std::find(loops_.begin(), loops_.end(), hw.loop) != loops_.end();
}

void DesignGrid::for_each(const std::function<void(std::uint64_t, const HWConfig&)>& fn) const {
    const std::uint64_t total = size();
    for (std::uint64_t i = 0; i < total; ++i) {
        fn(i, at(i));
    }
}

std::vector<HWConfig> DesignGrid::enumerate() const {
    std::vector<HWConfig> out;
    out.reserve(static_cast<std::size_t>(size()));
    for_each([&](std::uint64_t, const HWConfig& hw) { out.push_back(hw); });
    return out;
}

HWConfig DesignGrid::sample_uniform(nn::Pcg32& rng) const {
    HWConfig hw;
    for (std::size_t i = 0; i < kNumNumeric; ++i) {
        const auto& list = values_[i];
        hw.set(static_cast<Param>(i), list[rng.below(list.size())]);
    }
    hw.loop = loops_[rng.below(loops_.size())];
    return hw;
}

std::int64_t DesignGrid::snap(Param p, double value) const {
    const auto& list = values(p);
    if (!(value > static_cast<double>(list.front()))) {  // also catches NaN
        return list.front();
    }
    if (value >= static_cast<double>(list.back())) {
        return list.back();
    }
    auto hi = std::lower_bound(list.begin(), list.end(), value,
                               [](std::int64_t a, double v) { return static_cast<double>(a) < v; });
    auto lo = hi - 1;
    const double d_lo = value - static_cast<double>(*lo);
    const double d_hi = static_cast<double>(*hi) - value;
    return d_hi < d_lo ? *hi : *lo;
}

nlohmann::json DesignGrid::to_json() const {
    nlohmann::json doc;
    doc["name"] = name_;
    for (std::size_t i = 0; i < kNumNumeric; ++i) {
        const auto p = static_cast<Param>(i);
        const bool buffer = p == Param::IP || p == Param::WT || p == Param::OP;
        doc[std::string(kParamNames[i]) + (buffer ? "_byte_values" : "")] = values_[i];
    }
    auto loops = nlohmann::json::array();
    for (auto l : loops_) {
        loops.push_back(std::string(to_string(l)));
    }
    doc["loop"] = loops;
    return doc;
}

DesignGrid DesignGrid::from_json(const nlohmann::json& doc) {
    std::array<std::vector<std::int64_t>, kNumNumeric> values;
    for (std::size_t i = 0; i < kNumNumeric; ++i) {
        const std::string key(kParamNames[i]);
        const auto p = static_cast<Param>(i);
        const bool buffer = p == Param::IP || p == Param::WT || p == Param::OP;
        auto read_range = [](const nlohmann::json& r) {
            return range_values(r.at("min").get<std::int64_t>(), r.at("max").get<std::int64_t>(),
                                r.at("step").get<std::int64_t>());
        };
        if (buffer) {
            if (doc.contains(key + "_kb_values")) {
                for (auto v : doc.at(key + "_kb_values")) {
                    values[i].push_back(v.get<std::int64_t>() * 1024);
                }
            } else if (doc.contains(key + "_byte_values")) {
                values[i] = doc.at(key + "_byte_values").get<std::vector<std::int64_t>>();
            } else if (doc.contains(key + "_byte_range")) {
                values[i] = read_range(doc.at(key + "_byte_range"));
            } else {
                throw ConfigError("grid document lacks " + key + "_kb_values / " + key +
                                  "_byte_values / " + key + "_byte_range");
            }
        } else if (doc.contains(key)) {
            values[i] = doc.at(key).get<std::vector<std::int64_t>>();
        } else if (doc.contains(key + "_range")) {
            values[i] = read_range(doc.at(key + "_range"));
        } else {
            throw ConfigError("grid document lacks " + key + " / " + key + "_range");
        }
    }
    std::vector<LoopOrder> loops;
    for (const auto& l : doc.value("loop", nlohmann::json::array({"mnk", "nmk"}))) {
        loops.push_back(parse_loop_order(l.get<std::string>()));
    }
    return DesignGrid(doc.value("name", std::string("custom")), std::move(values), std::move(loops));
}

DesignGrid training_grid() {
    const std::vector<std::int64_t> array = {4, 8, 16, 32, 64, 128};
    const auto buffers = kb_to_bytes({4, 64, 128, 256, 512, 1024});
    return DesignGrid("training", {array, array, buffers, buffers, buffers, {2, 4, 8, 16, 32}},
                      {LoopOrder::MNK, LoopOrder::NMK});
}

DesignGrid target_grid() {
    const auto array = range_values(kMinArray, kMaxArray, 1);
    const auto buffers = range_values(kMinBuffer, kMaxBuffer, kBufferStep);
    return DesignGrid("target", {array, array, buffers, buffers, buffers,
                                 range_values(kMinBandwidth, kMaxBandwidth, 1)},
                      {LoopOrder::MNK, LoopOrder::NMK});
}

DesignGrid target_grid_all_loops() {
    const auto fine = target_grid();
    std::array<std::vector<std::int64_t>, kNumNumeric> values;
    for (std::size_t i = 0; i < kNumNumeric; ++i) {
        values[i] = fine.values(static_cast<Param>(i));
    }
    return DesignGrid("target_all_loops", std::move(values),
                      std::vector<LoopOrder>(kAllLoopOrders.begin(), kAllLoopOrders.end()));
}

DesignGrid load_grid(std::string_view name_or_path) {
    if (name_or_path == "training") {
        return training_grid();
    }
    if (name_or_path == "target") {
        return target_grid();
    }
    const std::filesystem::path path(name_or_path);
    std::ifstream in(path);
    if (!in) {
        throw MissingArtifact("grid '" + std::string(name_or_path) +
                              "' is neither a built-in grid name nor a readable file");
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse grid file " + path.string() + ": " + e.what());
    }
    return DesignGrid::from_json(doc);
}

// ---------------------------------------------------------------------------
// Normalizer

Normalizer::Normalizer(std::array<MinMax, kNumNumeric> features, std::vector<WorkloadStats> workloads)
    : features_(features), workloads_(std::move(workloads)) {
    for (const auto& f : features_) {
        if (!(f.max > f.min)) {
            throw ConfigError("feature range requires max > min");
        }
    }
}

std::array<MinMax, kNumNumeric> Normalizer::feature_ranges(const DesignGrid& grid) {
    std::array<MinMax, kNumNumeric> out{};
    for (std::size_t i = 0; i < kNumNumeric; ++i) {
        const auto& list = grid.values(static_cast<Param>(i));
        out[i] = {static_cast<double>(list.front()), static_cast<double>(list.back())};
        if (list.size() == 1) {
            out[i].max = out[i].min + 1.0;
        }
    }
    return out;
}

const WorkloadStats* Normalizer::find(const Workload& w) const {
    for (const auto& s : workloads_) {
        if (s.workload == w) {
            return &s;
        }
    }
    return nullptr;
}

StatsLookup Normalizer::lookup(const Workload& w) const {
    if (const auto* s = find(w)) {
        return {s, true, 0.0};
    }
    StatsLookup best;
    best.distance = std::numeric_limits<double>::infinity();
    for (const auto& s : workloads_) {
        const double d = log_distance(w, s.workload);
        if (d < best.distance) {
            best = {&s, false, d};
        }
    }
    if (best.stats == nullptr) {
        throw MissingArtifact("normalizer holds no workload statistics");
    }
    return best;
}

nlohmann::json Normalizer::to_json() const {
    nlohmann::json doc;
    auto feats = nlohmann::json::object();
    for (std::size_t i = 0; i < kNumNumeric; ++i) {
        feats[std::string(kParamNames[i])] = minmax_json(features_[i]);
    }
    doc["features"] = feats;
    auto wl = nlohmann::json::array();
    for (const auto& s : workloads_) {
        wl.push_back({{"m", s.workload.m},
                      {"k", s.workload.k},
                      {"n", s.workload.n},
                      {"log_runtime", minmax_json(s.log_runtime)},
                      {"power", minmax_json(s.power)},
                      {"log_edp", minmax_json(s.log_edp)}});
    }
    doc["workloads"] = wl;
    return doc;
}

Normalizer Normalizer::from_json(const nlohmann::json& doc) {
    std::array<MinMax, kNumNumeric> feats{};
    for (std::size_t i = 0; i < kNumNumeric; ++i) {
        feats[i] = minmax_from(doc.at("features").at(std::string(kParamNames[i])));
    }
    std::vector<WorkloadStats> wl;
    for (const auto& j : doc.at("workloads")) {
        WorkloadStats s;
        s.workload = {j.at("m").get<std::int64_t>(), j.at("k").get<std::int64_t>(),
                      j.at("n").get<std::int64_t>()};
        s.log_runtime = minmax_from(j.at("log_runtime"));
        s.power = minmax_from(j.at("power"));
        s.log_edp = minmax_from(j.at("log_edp"));
        wl.push_back(s);
    }
    return Normalizer(feats, std::move(wl));
}

// ---------------------------------------------------------------------------
// Feature encoding

Features to_features(const HWConfig& hw, const std::array<MinMax, kNumNumeric>& ranges) {
    Features f;
    for (std::size_t i = 0; i < kNumNumeric; ++i) {
        double x = ranges[i].normalize(static_cast<double>(hw.get(static_cast<Param>(i))));
        if (x < 0.0 || x > 1.0) {
            f.clamped = true;
            x = std::clamp(x, 0.0, 1.0);
        }
        f.numeric[i] = static_cast<float>(x);
    }
    const auto slot = static_cast<std::size_t>(hw.loop);
    if (slot < f.loop_onehot.size()) {
        f.loop_onehot[slot] = 1.0f;
    } else {
        throw ConfigError("loop order " + std::string(to_string(hw.loop)) + " has no feature slot");
    }
    return f;
}

std::array<double, kNumNumeric> from_features(std::span<const float> numeric,
                                              const std::array<MinMax, kNumNumeric>& ranges) {
    if (numeric.size() != kNumNumeric) {
        throw Error("from_features expects 6 values, got " + std::to_string(numeric.size()));
    }
    std::array<double, kNumNumeric> out{};
    for (std::size_t i = 0; i < kNumNumeric; ++i) {
        out[i] = ranges[i].denormalize(static_cast<double>(numeric[i]));
    }
    return out;
}

HWConfig round_to_grid(std::span<const double> raw, std::span<const float> loop_logits,
                       const DesignGrid& grid) {
    if (raw.size() != kNumNumeric) {
        throw Error("round_to_grid expects 6 numeric values, got " + std::to_string(raw.size()));
    }
    HWConfig hw;
    for (std::size_t i = 0; i < kNumNumeric; ++i) {
        const auto p = static_cast<Param>(i);
        hw.set(p, grid.snap(p, raw[i]));
    }
    // Logit i scores kAllLoopOrders[i]; only orders present in the grid compete.
    std::optional<LoopOrder> best;
    float best_logit = -std::numeric_limits<float>::infinity();
    for (std::size_t i = 0; i < loop_logits.size() && i < kAllLoopOrders.size(); ++i) {
        const auto order = kAllLoopOrders[i];
        if (std::find(grid.loops().begin(), grid.loops().end(), order) == grid.loops().end()) {
            continue;
        }
        if (!best || loop_logits[i] > best_logit) {
            best = order;
            best_logit = loop_logits[i];
        }
    }
    hw.loop = best.value_or(grid.loops().front());
    return hw;
}

double normalize_runtime(double cycles, const WorkloadStats& stats) {
    if (!(cycles > 0.0)) {
        throw Error("runtime must be positive, got " + std::to_string(cycles));
    }
    return stats.log_runtime.normalize(std::log(cycles));
}

double denormalize_runtime(double p, const WorkloadStats& stats) {
    return std::exp(stats.log_runtime.denormalize(p));
}

double normalize_power(double watts, const WorkloadStats& stats) {
    return stats.power.normalize(watts);
}

double denormalize_power(double p, const WorkloadStats& stats) {
    return stats.power.denormalize(p);
}

double normalize_edp(double edp, const WorkloadStats& stats) {
    if (!(edp > 0.0)) {
        throw Error("EDP must be positive, got " + std::to_string(edp));
    }
    return stats.log_edp.normalize(std::log(edp));
}

double denormalize_edp(double p, const WorkloadStats& stats) {
    return std::exp(stats.log_edp.denormalize(p));
}

std::array<float, 3> normalize_workload(const Workload& w) {
    const std::array<std::int64_t, 3> dims = {w.m, w.k, w.n};
    std::array<float, 3> out{};
    for (std::size_t i = 0; i < 3; ++i) {
        const double x = std::log(static_cast<double>(std::max<std::int64_t>(dims[i], 1)));
        out[i] = static_cast<float>(x / std::log(static_cast<double>(kWorkloadDimMax[i])));
    }
    return out;
}

}  // namespace axe
