// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "axegen/cli.hpp"
#include "axegen/csv.hpp"
#include "axegen/error.hpp"
#include "axegen/provenance.hpp"
#include "axegen/run_config.hpp"

using namespace axe;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args, std::string* out = nullptr) {
    args.insert(args.begin(), "axegen");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream captured, errors;
    auto* old_out = std::cout.rdbuf(captured.rdbuf());
    auto* old_err = std::cerr.rdbuf(errors.rdbuf());
    const int code = run_cli(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    if (out) *out = captured.str();
    return code;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("run config round trip and validation") {
    RunConfig built;
    built.seed = 9;
    built.workloads = {{64, 768, 768}, {1, 4096, 4096}};
    built.workload_count = 2;
    built.phase2.epochs = 7;
    // Loading propagates the master seed into both training phases.
    const RunConfig c = RunConfig::from_json(built.to_json());
    CHECK(c.phase2.seed == 9);
    const RunConfig back = RunConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK(back.hash() == c.hash());
    CHECK(back.phase1.seed == 9);

    RunConfig moved = c;
    moved.root = "/elsewhere";
    moved.workers = 3;
    moved.phase1_mode = Phase1Mode::Edp;
    moved.cond = CondMode::EdpClass;
    CHECK(moved.hash() == c.hash());
    RunConfig reseeded = c;
    reseeded.seed = 10;
    CHECK(reseeded.hash() != c.hash());
    RunConfig costed = c;
    costed.cost.clock_ghz *= 2;
    CHECK(costed.hash() != c.hash());

    CHECK_THROWS_AS(RunConfig::from_json({{"sed", 1}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::array()), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"workers", -1}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"seed", "one"}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"phase2", {{"cond", "fastest"}}}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::load("/nonexistent/axegen.json"), MissingArtifact);
}

TEST_CASE("exit codes") {
    TempDir tmp("axegen_cli_codes");
    std::string out;
    CHECK(run({"--version"}, &out) == 0);
    CHECK(out.rfind("axegen ", 0) == 0);
    CHECK(run({"--version", "--json"}, &out) == 0);
    const auto v = nlohmann::json::parse(out);
    CHECK(v.at("name") == "axegen");
    CHECK(v.contains("cost_model"));

    CHECK(run({"train-phase1", "--bogus"}) == 2);
    CHECK(run({"train-phase1", "--config", (tmp.path / "missing.json").string()}) == 2);
    write(tmp.path / "bad.json", "{\"seed\": 1, \"unknown\": true}");
    CHECK(run({"gen-dataset", "--config", (tmp.path / "bad.json").string()}) == 2);
    write(tmp.path / "broken.json", "{\"seed\": ");
    CHECK(run({"gen-dataset", "--config", (tmp.path / "broken.json").string()}) == 2);

    CHECK(run({"train-phase1", "--dataset", (tmp.path / "nothing").string(), "--quiet"}) == 3);
    CHECK(run({"eval-gen", "--dataset", (tmp.path / "nothing").string(), "--quiet"}) == 3);
    CHECK(run({"report", "--in", tmp.path.string(), "--quiet"}) == 3);
    CHECK(run({"generate", "--workload", "64,768,768", "--target-runtime", "1000", "--phase1",
               (tmp.path / "p1").string(), "--phase2", (tmp.path / "p2").string()}) == 3);
    CHECK(run({"generate", "--workload", "64,768"}) == 2);
}

TEST_CASE("oracle-eval agrees with the library") {
    TempDir tmp("axegen_cli_oracle");
    write(tmp.path / "in.csv",
          "# designs\nr,c,ip_bytes,wt_bytes,op_bytes,bw,loop\n16,32,8192,16384,4096,8,MNK\n4,4,4096,4096,4096,2,NMK\n");
    REQUIRE(run({"oracle-eval", "--in", (tmp.path / "in.csv").string(), "--workload", "64,768,768",
                 "--out", (tmp.path / "out.csv").string()}) == 0);
    const std::string text = csv::read_file(tmp.path / "out.csv");
    std::istringstream lines(text);
    std::string line;
    std::getline(lines, line);
    CHECK(line.rfind("# axegen", 0) == 0);
    std::getline(lines, line);
    CHECK(line.rfind("r,c,ip_bytes", 0) == 0);
    std::getline(lines, line);
    const auto f = csv::split_line(line);
    const HWConfig hw{16, 32, 8192, 16384, 4096, 8, LoopOrder::MNK};
    const PerfRecord p = perf(hw, {64, 768, 768}, CostParams{});
    CHECK(csv::to_int(f[10]) == static_cast<long long>(p.runtime_cycles));

    write(tmp.path / "reserved.csv", "r,c,ip_bytes,wt_bytes,op_bytes,bw,loop\n16,32,8192,16384,4096,8,KNM\n");
    CHECK(run({"oracle-eval", "--in", (tmp.path / "reserved.csv").string(), "--workload", "64,768,768"}) == 2);
    write(tmp.path / "nowl.csv", "r,c,ip_bytes,wt_bytes,op_bytes,bw,loop\n16,32,8192,16384,4096,8,MNK\n");
    CHECK(run({"oracle-eval", "--in", (tmp.path / "nowl.csv").string()}) == 2);
}

TEST_CASE("end-to-end pipeline on a small grid is reproducible") {
    TempDir tmp("axegen_cli_pipeline");
    const DesignGrid grid("tiny", {{{4, 16, 64}, {4, 16, 64}, {4096, 65536}, {4096, 65536}, {4096, 65536}, {2, 8}}},
                          {LoopOrder::MNK, LoopOrder::NMK});
    write(tmp.path / "grid.json", grid.to_json().dump());
    nlohmann::json cfg = {
        {"seed", 3},
        {"grid", (tmp.path / "grid.json").string()},
        {"workloads", {{"list", {"16,256,512", "200,64,3000"}}}},
        {"phase1", {{"hyper", {{"epochs", 2}, {"batch_size", 64}}}}},
        {"phase2", {{"profile", "desk"}, {"hyper", {{"epochs", 1}, {"batch_size", 256}}}}},
        {"experiments",
         {{"targets_per_workload", 2}, {"designs_per_target", 3}, {"seeds", {1}}, {"n_config", 2},
          {"grid", (tmp.path / "grid.json").string()}, {"latent_gd", {{"steps", 3}}}}},
        {"paths", {{"root", (tmp.path / "run").string()}}}};
    write(tmp.path / "cfg.json", cfg.dump());
    const std::string c = (tmp.path / "cfg.json").string();

    REQUIRE(run({"gen-dataset", "--config", c, "--quiet"}) == 0);
    REQUIRE(run({"train-phase1", "--config", c, "--quiet"}) == 0);
    REQUIRE(run({"train-phase2", "--config", c, "--quiet"}) == 0);
    REQUIRE(run({"eval-gen", "--config", c, "--quiet"}) == 0);
    const fs::path reports = tmp.path / "run" / "reports";
    const auto first = nlohmann::json::parse(csv::read_file(reports / "eval_gen.json"));
    CHECK(first.at("provenance").at("config_hash") == RunConfig::load(c).hash());
    const std::string ds_hash = file_hash(tmp.path / "run" / "dataset" / "dataset.csv");

    std::string gen_csv;
    REQUIRE(run({"generate", "--config", c, "--workload", "16,256,512", "--target-runtime", "5000", "--count",
                 "5", "--grid", (tmp.path / "grid.json").string()},
                &gen_csv) == 0);
    CHECK(std::count(gen_csv.begin(), gen_csv.end(), '\n') == 7);

    // Same config from scratch gives byte-identical data and the same summary.
    fs::remove_all(tmp.path / "run");
    REQUIRE(run({"gen-dataset", "--config", c, "--quiet"}) == 0);
    REQUIRE(run({"train-phase1", "--config", c, "--quiet"}) == 0);
    REQUIRE(run({"train-phase2", "--config", c, "--quiet"}) == 0);
    REQUIRE(run({"eval-gen", "--config", c, "--quiet"}) == 0);
    CHECK(file_hash(tmp.path / "run" / "dataset" / "dataset.csv") == ds_hash);
    const auto second = nlohmann::json::parse(csv::read_file(reports / "eval_gen.json"));
    CHECK(second.at("aggregate") == first.at("aggregate"));

    REQUIRE(run({"report", "--config", c, "--quiet"}) == 0);
    CHECK(fs::exists(reports / "summary.json"));

    // A summary produced under a different config refuses to merge.
    auto other = second;
    other["provenance"]["config_hash"] = "0000000000000000";
    fs::create_directories(tmp.path / "other");
    write(tmp.path / "other" / "dse_edp.json", other.dump());
    CHECK_THROWS_AS(pipeline::merge_reports({reports, tmp.path / "other"}, tmp.path / "m.json"), ConfigError);
    CHECK(run({"report", "--config", c, "--in", reports.string(), "--in", (tmp.path / "other").string(),
               "--quiet"}) == 2);

    // A checkpoint from a different config is rejected.
    auto cfg2 = cfg;
    cfg2["seed"] = 4;
    write(tmp.path / "cfg2.json", cfg2.dump());
    CHECK(run({"train-phase2", "--config", (tmp.path / "cfg2.json").string(), "--quiet"}) == 2);
}
