// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "axegen/run_config.hpp"

#include <set>

#include "axegen/csv.hpp"
#include "axegen/error.hpp"
#include "axegen/provenance.hpp"

namespace axe {

nlohmann::json RunConfig::to_json() const {
    nlohmann::json wl;
    if (workloads.empty()) {
        wl["count"] = workload_count;
    } else {
        wl["list"] = nlohmann::json::array();
        for (const auto& w : workloads) {
            wl["list"].push_back(to_string(w));
        }
    }
    return {{"seed", seed},
            {"grid", grid},
            {"workloads", wl},
            {"cost_params", cost.to_json()},
            {"phase1", {{"mode", to_string(phase1_mode)}, {"hyper", phase1.to_json()}}},
            {"phase2",
             {{"cond", to_string(cond)}, {"profile", to_string(profile)}, {"hyper", phase2.to_json()}}},
            {"classes", classes.to_json()},
            {"experiments", experiments.to_json()},
            {"paths", {{"root", root.string()}}},
            {"workers", workers}};
}

RunConfig RunConfig::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    static const std::set<std::string> known = {"seed",    "grid",   "workloads",   "cost_params",
                                                "phase1",  "phase2", "classes",     "experiments",
                                                "paths",   "workers"};
    for (const auto& [key, value] : doc.items()) {
        if (!known.contains(key)) {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    try {
        RunConfig c;
        c.seed = doc.value("seed", c.seed);
        c.grid = doc.value("grid", c.grid);
        if (doc.contains("workloads")) {
            const auto& wl = doc.at("workloads");
            c.workload_count = wl.value("count", c.workload_count);
            if (wl.contains("list")) {
                for (const auto& item : wl.at("list")) {
                    c.workloads.push_back(parse_workload(item.get<std::string>()));
                }
                c.workload_count = c.workloads.size();
            }
        }
        if (c.workload_count < 1) {
            throw ConfigError("workloads.count must be at least 1");
        }
        if (doc.contains("cost_params")) {
            c.cost = CostParams::from_json(doc.at("cost_params"));
        }
        if (doc.contains("phase1")) {
            const auto& p = doc.at("phase1");
            c.phase1_mode = parse_phase1_mode(p.value("mode", std::string("runtime")));
            if (p.contains("hyper")) {
                c.phase1 = Phase1Hyper::from_json(p.at("hyper"));
            }
        }
        if (doc.contains("phase2")) {
            const auto& p = doc.at("phase2");
            c.cond = parse_cond_mode(p.value("cond", std::string("runtime")));
            c.profile = parse_profile(p.value("profile", std::string("desk")));
            if (p.contains("hyper")) {
                c.phase2 = Phase2Hyper::from_json(p.at("hyper"));
            }
        }
        if (doc.contains("classes")) {
            c.classes = ClassCounts::from_json(doc.at("classes"));
        }
        if (doc.contains("experiments")) {
            c.experiments = ExperimentSettings::from_json(doc.at("experiments"));
        }
        if (doc.contains("paths")) {
            c.root = doc.at("paths").value("root", c.root.string());
        }
        c.workers = doc.value("workers", c.workers);
        if (c.workers < 0) {
            throw ConfigError("workers must be >= 0");
        }
        // The master seed drives both training phases.
        c.phase1.seed = c.seed;
        c.phase2.seed = c.seed;
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    const std::string text = csv::read_file(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return from_json(doc);
}

std::string RunConfig::hash() const {
    nlohmann::json doc = to_json();
    doc.erase("paths");
    doc.erase("workers");
    doc["phase1"].erase("mode");
    doc["phase2"].erase("cond");
    return json_hash(doc);
}

std::filesystem::path RunConfig::phase1_dir(Phase1Mode mode) const {
    return root / "checkpoints" / ("phase1_" + std::string(to_string(mode)));
}

std::filesystem::path RunConfig::phase2_dir(CondMode c) const {
    return root / "checkpoints" / ("phase2_" + std::string(to_string(c)));
}

}  // namespace axe
