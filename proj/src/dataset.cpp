// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "axegen/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "axegen/csv.hpp"
#include "axegen/error.hpp"
#include "axegen/nn/rng.hpp"

namespace axe {

namespace fs = std::filesystem;

std::size_t Dataset::workload_index(const Workload& w) const {
    const auto it = std::find(suite.begin(), suite.end(), w);
    if (it == suite.end()) {
        throw Error("workload " + to_string(w) + " is not part of the dataset suite");
    }
    return static_cast<std::size_t>(it - suite.begin());
}

std::vector<Workload> sample_workloads(std::size_t count, nn::Pcg32& rng) {
    if (count == 0) {
        throw ConfigError("workload count must be at least 1");
    }
    auto draw = [&](std::size_t dim) {
        const double hi = std::log(static_cast<double>(kWorkloadDimMax[dim]));
        const double x = std::exp(rng.uniform() * hi);
        return std::clamp<std::int64_t>(std::llround(x), kWorkloadDimMin[dim],
                                        kWorkloadDimMax[dim]);
    };
    std::vector<Workload> out;
    std::set<Workload> seen;
    const std::size_t max_attempts = 1000 * count + 1000;
    for (std::size_t attempt = 0; out.size() < count; ++attempt) {
        if (attempt >= max_attempts) {
            throw ConfigError("could not draw " + std::to_string(count) + " distinct workloads");
        }
        Workload w;
        w.m = draw(0);
        w.k = draw(1);
        w.n = draw(2);
        if (seen.insert(w).second) {
            out.push_back(w);
        }
    }
    return out;
}

Normalizer compute_normalizer(const DesignGrid& grid, const std::vector<Workload>& suite,
                              const std::vector<DatasetRow>& rows,
                              const std::vector<std::uint32_t>& row_workload) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<WorkloadStats> stats(suite.size());
    for (std::size_t i = 0; i < suite.size(); ++i) {
        stats[i].workload = suite[i];
        stats[i].log_runtime = {inf, -inf};
        stats[i].power = {inf, -inf};
        stats[i].log_edp = {inf, -inf};
    }
    auto widen = [](MinMax& mm, double v) {
        mm.min = std::min(mm.min, v);
        mm.max = std::max(mm.max, v);
    };
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto& s = stats[row_workload[r]];
        const auto& p = rows[r].perf;
        widen(s.log_runtime, std::log(static_cast<double>(p.runtime_cycles)));
        widen(s.power, p.power_w);
        widen(s.log_edp, std::log(p.edp));
    }
    // A workload whose labels are all equal (e.g. a one-point grid) would give
    // an empty range; open it by one unit so normalization stays defined.
    for (auto& s : stats) {
        for (MinMax* mm : {&s.log_runtime, &s.power, &s.log_edp}) {
            if (!(mm->max > mm->min)) {
                if (!std::isfinite(mm->min)) {
                    throw Error("workload " + to_string(s.workload) + " has no rows");
                }
                mm->max = mm->min + 1.0;
            }
        }
    }
    return Normalizer(Normalizer::feature_ranges(grid), std::move(stats));
}

Dataset generate(std::vector<Workload> suite, const DesignGrid& grid, const CostParams& cp,
                 const Provenance& prov) {
    cp.validate();
    for (const auto& w : suite) {
        validate(w);
    }
    Dataset ds;
    ds.grid = grid;
    ds.cost = cp;
    ds.suite = std::move(suite);
    ds.provenance = prov;

    const std::uint64_t g = grid.size();
    const std::vector<HWConfig> configs = grid.enumerate();
    const std::size_t n_w = ds.suite.size();
    std::vector<std::vector<PerfRecord>> labels(n_w, std::vector<PerfRecord>(g));
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t wi = 0; wi < static_cast<std::int64_t>(n_w); ++wi) {
        const auto i = static_cast<std::size_t>(wi);
        reference::perf_batch(configs, ds.suite[i], cp, labels[i]);
    }

    ds.rows.resize(n_w * g);
    ds.row_workload.resize(n_w * g);
    for (std::size_t i = 0; i < n_w; ++i) {
        for (std::uint64_t j = 0; j < g; ++j) {
            const std::size_t r = i * g + j;
            ds.rows[r] = {configs[j], ds.suite[i], labels[i][j]};
            ds.row_workload[r] = static_cast<std::uint32_t>(i);
        }
    }
    ds.normalizer = compute_normalizer(grid, ds.suite, ds.rows, ds.row_workload);
    return ds;
}

namespace {

nlohmann::json suite_json(const std::vector<Workload>& suite) {
    auto arr = nlohmann::json::array();
    for (const auto& w : suite) {
        arr.push_back({w.m, w.k, w.n});
    }
    return arr;
}

}  // namespace

void save_dataset(const Dataset& ds, const fs::path& dir) {
    fs::create_directories(dir);
    const fs::path csv_path = dir / "dataset.csv";
    const fs::path json_path = dir / "dataset.json";

    std::string text;
    text.reserve(ds.rows.size() * 96 + 256);
    text += ds.provenance.csv_comment();
    text += '\n';
    text += kDatasetHeader;
    text += '\n';
    for (const auto& row : ds.rows) {
        const auto& h = row.hw;
        const auto& p = row.perf;
        csv::row(text, h.r, h.c, h.ip_bytes, h.wt_bytes, h.op_bytes, h.bw, to_string(h.loop),
                 row.w.m, row.w.k, row.w.n, p.runtime_cycles, p.dram_bytes, p.energy_pj,
                 p.power_w, p.edp);
    }

    nlohmann::json meta;
    meta["provenance"] = ds.provenance.to_json();
    meta["grid"] = ds.grid.to_json();
    meta["cost_params"] = ds.cost.to_json();
    meta["workload_sampling"] = ds.workload_sampling;
    meta["suite"] = suite_json(ds.suite);
    meta["rows"] = ds.rows.size();
    meta["normalizer"] = ds.normalizer.to_json();
    meta["csv_hash"] = hex64(fnv1a64(text));

    try {
        csv::write_atomic(csv_path, text);
        csv::write_atomic(json_path, meta.dump(2) + "\n");
    } catch (...) {
        std::error_code ec;
        fs::remove(csv_path, ec);
        fs::remove(json_path, ec);
        throw;
    }
}

Dataset load_dataset(const fs::path& dir) {
    const fs::path json_path = dir / "dataset.json";
    const fs::path csv_path = dir / "dataset.csv";
    if (!fs::exists(json_path) || !fs::exists(csv_path)) {
        throw MissingArtifact("dataset not found in " + dir.string() +
                              " (expected dataset.csv and dataset.json; run gen-dataset)");
    }
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(csv::read_file(json_path));
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed " + json_path.string() + ": " + e.what());
    }

    Dataset ds;
    ds.provenance = Provenance::from_json(meta.at("provenance"));
    ds.grid = DesignGrid::from_json(meta.at("grid"));
    ds.cost = CostParams::from_json(meta.at("cost_params"));
    ds.workload_sampling = meta.value("workload_sampling", "log_uniform");
    for (const auto& w : meta.at("suite")) {
        ds.suite.push_back({w.at(0).get<std::int64_t>(), w.at(1).get<std::int64_t>(),
                            w.at(2).get<std::int64_t>()});
    }
    ds.normalizer = Normalizer::from_json(meta.at("normalizer"));

    const std::string text = csv::read_file(csv_path);
    if (meta.contains("csv_hash") && meta["csv_hash"].get<std::string>() != hex64(fnv1a64(text))) {
        throw Error(csv_path.string() + " does not match the checksum recorded in dataset.json");
    }
    const auto expected_rows = meta.at("rows").get<std::size_t>();
    ds.rows.reserve(expected_rows);
    ds.row_workload.reserve(expected_rows);

    std::size_t pos = 0;
    bool header_seen = false;
    std::size_t line_no = 0;
    std::size_t last_w = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string::npos) {
            end = text.size();
        }
        const std::string_view line(text.data() + pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') {
            continue;
        }
        if (!header_seen) {
            if (line != kDatasetHeader) {
                throw Error(csv_path.string() + ": unexpected header");
            }
            header_seen = true;
            continue;
        }
        const auto f = csv::split_line(line);
        if (f.size() != 15) {
            throw Error(csv_path.string() + ":" + std::to_string(line_no) + ": expected 15 fields");
        }
        DatasetRow row;
        row.hw = {csv::to_int(f[0]), csv::to_int(f[1]), csv::to_int(f[2]), csv::to_int(f[3]),
                  csv::to_int(f[4]), csv::to_int(f[5]), parse_loop_order(f[6])};
        row.w = {csv::to_int(f[7]), csv::to_int(f[8]), csv::to_int(f[9])};
        row.perf = {csv::to_int(f[10]), csv::to_int(f[11]), csv::to_double(f[12]),
                    csv::to_double(f[13]), csv::to_double(f[14])};
        if (!(last_w < ds.suite.size() && ds.suite[last_w] == row.w)) {
            last_w = ds.workload_index(row.w);
        }
        ds.rows.push_back(row);
        ds.row_workload.push_back(static_cast<std::uint32_t>(last_w));
    }
    if (ds.rows.size() != expected_rows) {
        throw Error(csv_path.string() + ": " + std::to_string(ds.rows.size()) +
                    " rows, sidecar records " + std::to_string(expected_rows));
    }
    return ds;
}

Split split(const Dataset& ds, double val_fraction, nn::Pcg32& rng) {
    if (!(val_fraction > 0.0 && val_fraction < 0.5)) {
        throw ConfigError("val_fraction must lie in (0, 0.5)");
    }
    std::vector<std::vector<std::size_t>> strata(ds.suite.size());
    for (std::size_t r = 0; r < ds.rows.size(); ++r) {
        strata[ds.row_workload[r]].push_back(r);
    }
    Split out;
    for (auto& s : strata) {
        rng.shuffle(s.begin(), s.end());
        const auto n_val = static_cast<std::size_t>(
            std::llround(val_fraction * static_cast<double>(s.size())));
        out.val.insert(out.val.end(), s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n_val));
        out.train.insert(out.train.end(), s.begin() + static_cast<std::ptrdiff_t>(n_val), s.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    return out;
}

}  // namespace axe
