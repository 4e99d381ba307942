// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "axegen/cli.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <omp.h>

#include "axegen/csv.hpp"
#include "axegen/error.hpp"
#include "axegen/nn/checkpoint.hpp"
#include "axegen/nn/rng.hpp"
#include "axegen/sampler.hpp"

namespace axe {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
    csv::write_atomic(path, doc.dump(2) + "\n");
}

nlohmann::json eval_json(const Phase1Eval& ev) {
    return {{"rows", ev.rows},
            {"recon_loss", ev.recon_loss},
            {"pred_loss", ev.pred_loss},
            {"roundtrip_fraction", ev.roundtrip_fraction},
            {"pp_median_abs_rel_error", ev.pp_median_abs_rel_error}};
}

std::string checkpoint_hash(const nlohmann::json& manifest) {
    return manifest.at("provenance").at("config_hash").get<std::string>();
}

}  // namespace

namespace pipeline {

Provenance provenance(const RunConfig& cfg) {
    Provenance p;
    p.config_hash = cfg.hash();
    p.seed = cfg.seed;
    return p;
}

void require_hash(const fs::path& artifact, const std::string& found, const std::string& expected) {
    if (found != expected) {
        throw ConfigError(artifact.string() + " was produced with config_hash " + found +
                          " but the current config hashes to " + expected +
                          "; rerun the upstream stage with this config or pass the config it was "
                          "built with");
    }
}

Dataset gen_dataset(const RunConfig& cfg, const fs::path& out, const LogSink& log) {
    const auto t0 = Clock::now();
    std::vector<Workload> suite = cfg.workloads;
    std::string sampling = "explicit";
    if (suite.empty()) {
        auto rng = nn::Pcg32::derive(cfg.seed, 0xda7a5e7);
        suite = sample_workloads(cfg.workload_count, rng);
        sampling = "log_uniform";
    }
    Dataset ds = generate(suite, load_grid(cfg.grid), cfg.cost, provenance(cfg));
    ds.workload_sampling = sampling;
    save_dataset(ds, out);
    write_json(out / "timing.json", {{"stage", "gen-dataset"}, {"seconds", seconds_since(t0)}});
    log("dataset: " + std::to_string(ds.suite.size()) + " workloads x " +
        std::to_string(ds.grid.size()) + " designs = " + std::to_string(ds.size()) + " rows -> " +
        out.string());
    return ds;
}

nlohmann::json train_phase1(const RunConfig& cfg, const fs::path& dataset, const fs::path& out,
                            const LogSink& log) {
    const auto t0 = Clock::now();
    const Dataset ds = load_dataset(dataset);
    Phase1Model model(cfg.phase1_mode, ds.grid, ds.normalizer, cfg.seed);
    const auto result = axe::train_phase1(model, ds, cfg.phase1, [&](const Phase1EpochMetrics& e) {
        log("phase1 epoch " + std::to_string(e.epoch) + " lr " + fmt("%g", e.lr) + " train " +
            fmt("%.5f", e.train_loss) + " (recon " + fmt("%.5f", e.train_recon) + ", pred " +
            fmt("%.5f", e.train_pred) + ") val " + fmt("%.5f", e.val_loss));
    });
    const auto train_seconds = seconds_since(t0);

    const auto configs = ds.grid.enumerate();
    const double grid_roundtrip = roundtrip_fraction(model, configs, ds.grid);
    const auto quality =
        latent_quality_report(model, ds, 1000, nn::Pcg32::derive(cfg.seed, 0x1a7e).next_u64());
    const Provenance prov = provenance(cfg);

    nlohmann::json history = nlohmann::json::array();
    std::string metrics = prov.csv_comment() + "\n";
    csv::row(metrics, "epoch", "lr", "train_loss", "train_recon", "train_pred", "val_loss");
    for (const auto& e : result.history) {
        history.push_back({{"epoch", e.epoch},
                           {"lr", e.lr},
                           {"train_loss", e.train_loss},
                           {"train_recon", e.train_recon},
                           {"train_pred", e.train_pred},
                           {"val_loss", e.val_loss}});
        csv::row(metrics, e.epoch, e.lr, e.train_loss, e.train_recon, e.train_pred, e.val_loss);
    }
    nlohmann::json spearman = nlohmann::json::array();
    for (const auto& q : quality) {
        spearman.push_back(q.spearman);
    }
    nlohmann::json extra = {
        {"provenance", prov.to_json()},
        {"hyper", cfg.phase1.to_json()},
        {"cost_model", ds.cost.id},
        {"dataset", {{"config_hash", ds.provenance.config_hash},
                     {"csv_hash", file_hash((dataset / "dataset.csv").string())}}},
        {"history", history},
        {"validation", eval_json(result.validation)},
        {"grid_roundtrip_fraction", grid_roundtrip},
        {"latent_spearman", spearman}};
    model.save(out, extra);
    csv::write_atomic(out / "metrics.csv", metrics);
    csv::write_atomic(out / "latent_quality.csv", latent_quality_csv(quality, prov));
    write_json(out / "timing.json", {{"stage", "train-phase1"},
                                     {"train_seconds", train_seconds},
                                     {"total_seconds", seconds_since(t0)}});
    log("phase1 (" + std::string(to_string(cfg.phase1_mode)) + "): grid round-trip " +
        fmt("%.4f", grid_roundtrip) + ", held-out PP median rel. error " +
        fmt("%.4f", result.validation.pp_median_abs_rel_error) + " -> " + out.string());
    return nn::read_manifest(out);
}

nlohmann::json train_phase2(const RunConfig& cfg, const fs::path& dataset, const fs::path& phase1,
                            const fs::path& out, const LogSink& log) {
    const auto t0 = Clock::now();
    const auto p1_manifest = nn::read_manifest(phase1);
    require_hash(phase1, checkpoint_hash(p1_manifest), cfg.hash());
    const Dataset ds = load_dataset(dataset);
    const Phase1Model p1 = Phase1Model::load(phase1);
    Phase2Model model(cfg.cond, cfg.classes, cfg.profile, cfg.seed);
    const Phase2Data data = build_phase2_data(model, p1, ds);
    log("phase2 (" + std::string(to_string(cfg.cond)) + ", " +
        std::string(to_string(cfg.profile)) + "): " +
        std::to_string(model.denoiser().parameter_count()) + " parameters, " +
        std::to_string(data.latents.rows()) + " latents");

    const auto result = axe::train_phase2(model.denoiser(), model.schedule(), data, cfg.phase2,
                                          [&](const Phase2EpochMetrics& e) {
        log("phase2 epoch " + std::to_string(e.epoch) + " lr " + fmt("%g", e.lr) + " train " +
            fmt("%.5f", e.train_loss) + " val " + fmt("%.5f", e.val_loss));
    });
    const auto train_seconds = seconds_since(t0);

    const std::uint64_t eval_seed = cfg.seed ^ 0x7a11;
    const auto& dn = model.denoiser();
    const double val = noise_prediction_loss(dn, model.schedule(), data, result.val_rows, eval_seed);
    const double zero_pred = noise_prediction_loss(dn, model.schedule(), data, result.val_rows,
                                                   eval_seed, NoiseAblation::ZeroPrediction);
    const double zero_cond = noise_prediction_loss(dn, model.schedule(), data, result.val_rows,
                                                   eval_seed, NoiseAblation::ZeroCondition);
    const Provenance prov = provenance(cfg);

    nlohmann::json history = nlohmann::json::array();
    std::string metrics = prov.csv_comment() + "\n";
    csv::row(metrics, "epoch", "lr", "train_loss", "val_loss");
    for (const auto& e : result.history) {
        history.push_back({{"epoch", e.epoch},
                           {"lr", e.lr},
                           {"train_loss", e.train_loss},
                           {"val_loss", e.val_loss}});
        csv::row(metrics, e.epoch, e.lr, e.train_loss, e.val_loss);
    }
    nlohmann::json extra = {
        {"provenance", prov.to_json()},
        {"hyper", cfg.phase2.to_json()},
        {"phase1", {{"mode", p1_manifest.at("mode")}, {"checksum", p1_manifest.at("checksum")}}},
        {"history", history},
        {"validation",
         {{"rows", result.val_rows.size()},
          {"loss", val},
          {"zero_prediction_loss", zero_pred},
          {"zero_condition_loss", zero_cond}}}};
    if (cfg.cond != CondMode::Runtime) {
        extra["class_bins"] = ClassBinner::fit(ds, cfg.classes).to_json();
    }
    model.save(out, extra);
    csv::write_atomic(out / "metrics.csv", metrics);
    write_json(out / "timing.json", {{"stage", "train-phase2"},
                                     {"train_seconds", train_seconds},
                                     {"total_seconds", seconds_since(t0)}});
    log("phase2: val noise loss " + fmt("%.5f", val) + " (eps=0 baseline " + fmt("%.5f", zero_pred) +
        ", no condition " + fmt("%.5f", zero_cond) + ") -> " + out.string());
    return nn::read_manifest(out);
}

CondMode experiment_cond(Experiment e) {
    switch (e) {
        case Experiment::EvalGen: return CondMode::Runtime;
        case Experiment::DseEdp: return CondMode::PowerPerfClass;
        case Experiment::DsePerf: return CondMode::EdpClass;
    }
    return CondMode::Runtime;
}

ExperimentReport run_experiment(Experiment e, const RunConfig& cfg, const fs::path& dataset,
                                const fs::path& phase1, const fs::path& phase2, const fs::path& out,
                                const LogSink& log) {
    const auto t0 = Clock::now();
    require_hash(phase1, checkpoint_hash(nn::read_manifest(phase1)), cfg.hash());
    require_hash(phase2, checkpoint_hash(nn::read_manifest(phase2)), cfg.hash());
    const Dataset ds = load_dataset(dataset);
    const Phase1Model p1 = Phase1Model::load(phase1);
    const Phase2Model p2 = Phase2Model::load(phase2);
    const Provenance prov = provenance(cfg);
    ExperimentReport report;
    switch (e) {
        case Experiment::EvalGen:
            report = run_perf_generation_experiment(p1, p2, ds, cfg.experiments, prov);
            break;
        case Experiment::DseEdp: report = run_edp_dse(p1, p2, ds, cfg.experiments, prov); break;
        case Experiment::DsePerf: report = run_perf_dse(p1, p2, ds, cfg.experiments, prov); break;
    }
    report.timing["total_seconds"] = seconds_since(t0);
    write_report(report, out);
    log(report.name + ": " + report.summary["aggregate"].dump() + " -> " + out.string());
    return report;
}

nlohmann::json merge_reports(const std::vector<fs::path>& dirs, const fs::path& out) {
    nlohmann::json merged = {{"experiments", nlohmann::json::object()}};
    std::optional<std::string> hash;
    std::string first_source;
    for (const auto& dir : dirs) {
        for (const char* name : {"eval_gen", "dse_edp", "dse_perf"}) {
            const fs::path path = dir / (std::string(name) + ".json");
            if (!fs::exists(path)) {
                continue;
            }
            const auto doc = nlohmann::json::parse(csv::read_file(path));
            const auto h = doc.at("provenance").at("config_hash").get<std::string>();
            if (!hash) {
                hash = h;
                first_source = path.string();
                merged["provenance"] = doc.at("provenance");
                merged["settings"] = doc.at("settings");
            } else if (*hash != h) {
                throw ConfigError("refusing to merge " + path.string() + " (config_hash " + h +
                                  ") with " + first_source + " (config_hash " + *hash + ")");
            }
            merged["experiments"][name] = doc.at("aggregate");
        }
    }
    if (!hash) {
        throw MissingArtifact("no experiment summaries (eval_gen.json, dse_edp.json, "
                              "dse_perf.json) found; run eval-gen, dse-edp or dse-perf first");
    }
    fs::create_directories(out.parent_path().empty() ? fs::path(".") : out.parent_path());
    write_json(out, merged);
    return merged;
}

}  // namespace pipeline

// ---- command line -------------------------------------------------------------

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "Run configuration (JSON); flags override its fields")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "Master seed");
    cmd->add_option("--workers", c.workers, "OpenMP worker threads (0 = default)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_flag("--quiet", c.quiet, "Suppress progress messages");
}

RunConfig resolve(const Common& c) {
    RunConfig cfg = c.config.empty() ? RunConfig::from_json(nlohmann::json::object())
                                     : RunConfig::load(c.config);
    if (c.seed) {
        cfg.seed = *c.seed;
        cfg.phase1.seed = *c.seed;
        cfg.phase2.seed = *c.seed;
    }
    if (c.workers) {
        cfg.workers = *c.workers;
    }
    if (cfg.workers > 0) {
        omp_set_num_threads(cfg.workers);
    }
    return cfg;
}

LogSink make_log(const Common& c) {
    if (c.quiet) {
        return [](const std::string&) {};
    }
    return [](const std::string& line) { std::cerr << "axegen: " << line << std::endl; };
}

fs::path or_default(const std::string& flag, const fs::path& fallback) {
    return flag.empty() ? fallback : fs::path(flag);
}

std::string perf_header() {
    return "r,c,ip_bytes,wt_bytes,op_bytes,bw,loop,m,k,n,runtime_cycles,dram_bytes,energy_pj,power_w,edp";
}

void perf_row(std::string& out, const HWConfig& hw, const Workload& w, const PerfRecord& p) {
    csv::row(out, hw.r, hw.c, hw.ip_bytes, hw.wt_bytes, hw.op_bytes, hw.bw, to_string(hw.loop), w.m,
             w.k, w.n, p.runtime_cycles, p.dram_bytes, p.energy_pj, p.power_w, p.edp);
}

int cmd_generate(const Common& common, const std::string& phase1, const std::string& phase2,
                 const std::string& workload, std::optional<double> target, std::optional<int> cls,
                 std::size_t count, const std::string& grid_name, const std::string& out,
                 const std::string& timing) {
    const RunConfig cfg = resolve(common);
    const auto log = make_log(common);
    if (target.has_value() == cls.has_value()) {
        throw ConfigError("generate needs exactly one of --target-runtime or --class");
    }
    const fs::path p2_dir = or_default(phase2, cfg.phase2_dir(cls ? CondMode::EdpClass : CondMode::Runtime));
    const auto p2_manifest = nn::read_manifest(p2_dir);
    const Phase2Model p2 = Phase2Model::load(p2_dir);
    const fs::path p1_dir = or_default(phase1, cfg.phase1_dir(phase1_mode_for(p2.mode())));
    const auto p1_manifest = nn::read_manifest(p1_dir);
    pipeline::require_hash(p1_dir, checkpoint_hash(p1_manifest), checkpoint_hash(p2_manifest));
    const Phase1Model p1 = Phase1Model::load(p1_dir);
    const DesignGrid grid = load_grid(grid_name);

    GenerateRequest req;
    req.workload = parse_workload(workload);
    req.count = count;
    req.seed = cfg.seed;
    const Generation g = target ? generate_hw(p2, p1, *target, req, grid)
                                : generate_hw_class(p2, p1, *cls, req, grid);
    for (const auto& w : g.warnings) {
        std::cerr << "axegen: warning: " << w << std::endl;
    }
    std::vector<PerfRecord> perf(g.designs.size());
    perf_batch(g.designs, req.workload, cfg.cost, perf);

    Provenance prov;
    prov.config_hash = checkpoint_hash(p2_manifest);
    prov.seed = cfg.seed;
    std::string text = prov.csv_comment() + "\n" + perf_header() + "\n";
    for (std::size_t i = 0; i < g.designs.size(); ++i) {
        perf_row(text, g.designs[i], req.workload, perf[i]);
    }
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        csv::write_atomic(out, text);
    }
    const double per_design = g.seconds / static_cast<double>(g.designs.size());
    if (!timing.empty()) {
        write_json(timing, {{"stage", "generate"},
                            {"designs", g.designs.size()},
                            {"seconds", g.seconds},
                            {"seconds_per_design", per_design}});
    }
    log("generated " + std::to_string(g.designs.size()) + " designs in " + fmt("%.3f", g.seconds) +
        " s (" + fmt("%.3f", per_design * 1e3) + " ms per design)");
    return 0;
}

int cmd_oracle_eval(const Common& common, const std::string& in, const std::string& workload,
                    const std::string& out) {
    const RunConfig cfg = resolve(common);
    const std::string text = csv::read_file(in);
    std::istringstream lines(text);
    std::string line;
    std::vector<std::string_view> header;
    std::string header_line;
    std::vector<std::pair<HWConfig, Workload>> items;
    std::optional<Workload> fixed;
    if (!workload.empty()) {
        fixed = parse_workload(workload);
    }
    std::vector<int> col;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') {
            continue;
        }
        if (header_line.empty()) {
            header_line = line;
            header = csv::split_line(header_line);
            const auto find = [&](std::string_view name) {
                for (std::size_t i = 0; i < header.size(); ++i) {
                    if (header[i] == name) return static_cast<int>(i);
                }
                return -1;
            };
            for (const char* name : {"r", "c", "ip_bytes", "wt_bytes", "op_bytes", "bw", "loop"}) {
                col.push_back(find(name));
                if (col.back() < 0) {
                    throw ConfigError(in + ": missing column '" + name + "'");
                }
            }
            for (const char* name : {"m", "k", "n"}) {
                col.push_back(find(name));
            }
            if (!fixed && (col[7] < 0 || col[8] < 0 || col[9] < 0)) {
                throw ConfigError(in + ": no m,k,n columns; pass --workload M,K,N");
            }
            continue;
        }
        const auto f = csv::split_line(line);
        const auto at = [&](int i) {
            if (static_cast<std::size_t>(i) >= f.size()) {
                throw ConfigError(in + ":" + std::to_string(line_no) + ": too few fields");
            }
            return f[static_cast<std::size_t>(i)];
        };
        HWConfig hw;
        hw.r = csv::to_int(at(col[0]));
        hw.c = csv::to_int(at(col[1]));
        hw.ip_bytes = csv::to_int(at(col[2]));
        hw.wt_bytes = csv::to_int(at(col[3]));
        hw.op_bytes = csv::to_int(at(col[4]));
        hw.bw = csv::to_int(at(col[5]));
        hw.loop = parse_loop_order(at(col[6]));
        validate(hw);
        Workload w = fixed ? *fixed
                           : Workload{csv::to_int(at(col[7])), csv::to_int(at(col[8])),
                                      csv::to_int(at(col[9]))};
        validate(w);
        items.emplace_back(hw, w);
    }
    std::string result = pipeline::provenance(cfg).csv_comment() + "\n" + perf_header() + "\n";
    for (const auto& [hw, w] : items) {
        perf_row(result, hw, w, perf(hw, w, cfg.cost));
    }
    if (out.empty() || out == "-") {
        std::cout << result;
    } else {
        csv::write_atomic(out, result);
    }
    return 0;
}

nlohmann::json version_json() {
    return {{"name", "axegen"},
            {"version", std::string(version())},
            {"cost_model", CostParams{}.id},
            {"formats",
             {{"phase1", "axegen.phase1.ae_pp.v1"},
              {"phase2", "axegen.phase2.ddpm_mlp_unet.v1"},
              {"dataset_header", std::string(kDatasetHeader)}}},
            {"openmp_max_threads", omp_get_max_threads()}};
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"axegen: diffusion-based accelerator design generation and exploration"};
    app.require_subcommand(0, 1);
    bool show_version = false;
    bool version_as_json = false;
    app.add_flag("--version", show_version, "Print the version and exit");
    app.add_flag("--json", version_as_json, "With --version, print machine-readable JSON");

    // gen-dataset
    Common gd;
    std::string gd_out;
    std::optional<std::size_t> gd_workloads;
    std::string gd_grid;
    auto* gen = app.add_subcommand("gen-dataset", "Label every training-grid design for a workload suite");
    add_common(gen, gd);
    gen->add_option("--out", gd_out, "Dataset directory (default: <root>/dataset)");
    gen->add_option("--workloads", gd_workloads, "Number of log-uniformly sampled workloads")
        ->check(CLI::PositiveNumber);
    gen->add_option("--grid", gd_grid, "Design grid: training, target or a JSON file");

    // train-phase1
    Common t1;
    std::string t1_dataset, t1_mode, t1_out;
    std::optional<int> t1_epochs;
    auto* tp1 = app.add_subcommand("train-phase1", "Train the autoencoder and performance predictor");
    add_common(tp1, t1);
    tp1->add_option("--dataset", t1_dataset, "Dataset directory (default: <root>/dataset)");
    tp1->add_option("--mode", t1_mode, "Supervision: runtime, power_perf or edp");
    tp1->add_option("--epochs", t1_epochs, "Training epochs")->check(CLI::PositiveNumber);
    tp1->add_option("--out", t1_out, "Checkpoint directory (default: <root>/checkpoints/phase1_<mode>)");

    // train-phase2
    Common t2;
    std::string t2_dataset, t2_phase1, t2_cond, t2_profile, t2_out;
    std::optional<int> t2_epochs;
    auto* tp2 = app.add_subcommand("train-phase2", "Train the conditional diffusion model on phase-1 latents");
    add_common(tp2, t2);
    tp2->add_option("--dataset", t2_dataset, "Dataset directory (default: <root>/dataset)");
    tp2->add_option("--phase1", t2_phase1, "Phase-1 checkpoint (default: the one matching --cond)");
    tp2->add_option("--cond", t2_cond, "Conditioning: runtime, power_perf_class or edp_class");
    tp2->add_option("--profile", t2_profile, "Model size: paper or desk");
    tp2->add_option("--epochs", t2_epochs, "Training epochs")->check(CLI::PositiveNumber);
    tp2->add_option("--out", t2_out, "Checkpoint directory (default: <root>/checkpoints/phase2_<cond>)");

    // generate
    Common ge;
    std::string ge_phase1, ge_phase2, ge_workload, ge_grid = "target", ge_out, ge_timing;
    std::optional<double> ge_target;
    std::optional<int> ge_class;
    std::size_t ge_count = 1;
    auto* gcmd = app.add_subcommand("generate", "Generate designs for a runtime target or class");
    add_common(gcmd, ge);
    gcmd->add_option("--phase1", ge_phase1, "Phase-1 checkpoint");
    gcmd->add_option("--phase2", ge_phase2, "Phase-2 checkpoint");
    gcmd->add_option("--workload", ge_workload, "GEMM workload M,K,N")->required();
    gcmd->add_option("--target-runtime", ge_target, "Target runtime in cycles");
    gcmd->add_option("--class", ge_class, "Class id (0 = lowest power/runtime or lowest EDP)");
    gcmd->add_option("--count", ge_count, "Number of designs")->check(CLI::PositiveNumber);
    gcmd->add_option("--grid", ge_grid, "Rounding grid: target, training or a JSON file");
    gcmd->add_option("--out", ge_out, "Output CSV (default: stdout)");
    gcmd->add_option("--timing", ge_timing, "Write generation latency to this JSON file");

    // experiments
    struct ExpArgs {
        Common common;
        std::string dataset, phase1, phase2, out;
    };
    ExpArgs ea[3];
    const char* exp_names[3] = {"eval-gen", "dse-edp", "dse-perf"};
    const char* exp_help[3] = {
        "Runtime-targeted generation error against random search and latent GD",
        "Power-performance class DSE scored by EDP (search performance vs random search)",
        "Lowest-EDP class generation scored by best runtime"};
    CLI::App* exp_cmds[3];
    for (int i = 0; i < 3; ++i) {
        exp_cmds[i] = app.add_subcommand(exp_names[i], exp_help[i]);
        add_common(exp_cmds[i], ea[i].common);
        exp_cmds[i]->add_option("--dataset", ea[i].dataset, "Dataset directory");
        exp_cmds[i]->add_option("--phase1", ea[i].phase1, "Phase-1 checkpoint");
        exp_cmds[i]->add_option("--phase2", ea[i].phase2, "Phase-2 checkpoint");
        exp_cmds[i]->add_option("--out", ea[i].out, "Report directory (default: <root>/reports)");
    }

    // oracle-eval
    Common oe;
    std::string oe_in, oe_workload, oe_out;
    auto* ocmd = app.add_subcommand("oracle-eval", "Evaluate a CSV of designs with the cost model");
    add_common(ocmd, oe);
    ocmd->add_option("--in", oe_in, "CSV with r,c,ip_bytes,wt_bytes,op_bytes,bw,loop[,m,k,n]")
        ->required();
    ocmd->add_option("--workload", oe_workload, "Workload M,K,N for rows without m,k,n");
    ocmd->add_option("--out", oe_out, "Output CSV (default: stdout)");

    // report
    Common rp;
    std::vector<std::string> rp_in;
    std::string rp_out;
    auto* rcmd = app.add_subcommand("report", "Merge experiment summaries into one file");
    add_common(rcmd, rp);
    rcmd->add_option("--in", rp_in, "Report directories (default: <root>/reports)");
    rcmd->add_option("--out", rp_out, "Merged summary (default: <root>/reports/summary.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (show_version) {
            if (version_as_json) {
                std::cout << version_json().dump() << "\n";
            } else {
                std::cout << "axegen " << version() << "\n";
            }
            return 0;
        }
        if (gen->parsed()) {
            RunConfig cfg = resolve(gd);
            if (gd_workloads) {
                cfg.workload_count = *gd_workloads;
                cfg.workloads.clear();
            }
            if (!gd_grid.empty()) {
                cfg.grid = gd_grid;
            }
            pipeline::gen_dataset(cfg, or_default(gd_out, cfg.dataset_dir()), make_log(gd));
            return 0;
        }
        if (tp1->parsed()) {
            RunConfig cfg = resolve(t1);
            if (!t1_mode.empty()) cfg.phase1_mode = parse_phase1_mode(t1_mode);
            if (t1_epochs) cfg.phase1.epochs = *t1_epochs;
            pipeline::train_phase1(cfg, or_default(t1_dataset, cfg.dataset_dir()),
                                   or_default(t1_out, cfg.phase1_dir(cfg.phase1_mode)), make_log(t1));
            return 0;
        }
        if (tp2->parsed()) {
            RunConfig cfg = resolve(t2);
            if (!t2_cond.empty()) cfg.cond = parse_cond_mode(t2_cond);
            if (!t2_profile.empty()) cfg.profile = parse_profile(t2_profile);
            if (t2_epochs) cfg.phase2.epochs = *t2_epochs;
            pipeline::train_phase2(cfg, or_default(t2_dataset, cfg.dataset_dir()),
                                   or_default(t2_phase1, cfg.phase1_dir(phase1_mode_for(cfg.cond))),
                                   or_default(t2_out, cfg.phase2_dir(cfg.cond)), make_log(t2));
            return 0;
        }
        if (gcmd->parsed()) {
            return cmd_generate(ge, ge_phase1, ge_phase2, ge_workload, ge_target, ge_class, ge_count,
                                ge_grid, ge_out, ge_timing);
        }
        for (int i = 0; i < 3; ++i) {
            if (!exp_cmds[i]->parsed()) {
                continue;
            }
            const auto e = static_cast<pipeline::Experiment>(i);
            const RunConfig cfg = resolve(ea[i].common);
            const CondMode cond = pipeline::experiment_cond(e);
            pipeline::run_experiment(e, cfg, or_default(ea[i].dataset, cfg.dataset_dir()),
                                     or_default(ea[i].phase1, cfg.phase1_dir(phase1_mode_for(cond))),
                                     or_default(ea[i].phase2, cfg.phase2_dir(cond)),
                                     or_default(ea[i].out, cfg.reports_dir()), make_log(ea[i].common));
            return 0;
        }
        if (ocmd->parsed()) {
            return cmd_oracle_eval(oe, oe_in, oe_workload, oe_out);
        }
        if (rcmd->parsed()) {
            const RunConfig cfg = resolve(rp);
            std::vector<fs::path> dirs(rp_in.begin(), rp_in.end());
            if (dirs.empty()) {
                dirs.push_back(cfg.reports_dir());
            }
            const fs::path out = or_default(rp_out, cfg.reports_dir() / "summary.json");
            const auto merged = pipeline::merge_reports(dirs, out);
            if (!rp.quiet) {
                std::cout << merged.dump(2) << "\n";
            }
            return 0;
        }
        std::cout << app.help();
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "axegen: error: " << e.what() << std::endl;
        return 2;
    } catch (const MissingArtifact& e) {
        std::cerr << "axegen: missing artifact: " << e.what() << std::endl;
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "axegen: numerical failure: " << e.what() << std::endl;
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "axegen: error: " << e.what() << std::endl;
        return 1;
    }
}

}  // namespace axe
