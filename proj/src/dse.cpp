// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "axegen/dse.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "axegen/csv.hpp"
#include "axegen/error.hpp"
#include "axegen/nn/rng.hpp"
#include "axegen/sampler.hpp"

namespace axe {

using nn::Tensor;

double error_gen(double t_gen, double t_target) {
    if (!(t_target > 0.0)) {
        throw ConfigError("error_gen needs a positive target runtime");
    }
    return (t_gen - t_target) / t_target;
}

double median(std::vector<double> values) {
    if (values.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double hi = values[mid];
    if (values.size() % 2 == 1) {
        return hi;
    }
    const double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

namespace {

double mean(const std::vector<double>& values) {
    if (values.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

std::vector<double> abs_values(const std::vector<double>& values) {
    std::vector<double> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(), [](double v) { return std::abs(v); });
    return out;
}

std::vector<PerfRecord> evaluate(std::span<const HWConfig> configs, const Workload& w,
                                 const CostParams& cp) {
    std::vector<PerfRecord> out(configs.size());
    perf_batch(configs, w, cp, out);
    return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// ---- baselines ---------------------------------------------------------------

double objective_value(const PerfRecord& perf, SearchObjective objective, double target) {
    switch (objective) {
        case SearchObjective::MinEdp: return perf.edp;
        case SearchObjective::MinRuntime: return static_cast<double>(perf.runtime_cycles);
        case SearchObjective::TargetRuntime:
            return std::abs(error_gen(static_cast<double>(perf.runtime_cycles), target));
    }
    return 0.0;
}

SearchResult random_search_baseline(const DesignGrid& grid, std::size_t budget, const Workload& w,
                                    SearchObjective objective, double target, const CostParams& cp,
                                    nn::Pcg32& rng) {
    if (budget < 1) {
        throw ConfigError("random search budget must be at least 1");
    }
    std::vector<HWConfig> configs;
    if (grid.cardinality() <= budget) {
        configs = grid.enumerate();
    } else {
        configs.reserve(budget);
        for (std::size_t i = 0; i < budget; ++i) {
            configs.push_back(grid.sample_uniform(rng));
        }
    }
    const auto perf = evaluate(configs, w, cp);
    SearchResult best;
    best.objective = std::numeric_limits<double>::infinity();
    best.evaluations = configs.size();
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const double v = objective_value(perf[i], objective, target);
        if (v < best.objective) {
            best.objective = v;
            best.best = configs[i];
            best.perf = perf[i];
        }
    }
    return best;
}

nlohmann::json LatentGdOptions::to_json() const {
    return {{"steps", steps}, {"lr", lr}, {"max_restarts", max_restarts}};
}

LatentGdOptions LatentGdOptions::from_json(const nlohmann::json& doc) {
    LatentGdOptions o;
    o.steps = doc.value("steps", o.steps);
    o.lr = doc.value("lr", o.lr);
    o.max_restarts = doc.value("max_restarts", o.max_restarts);
    if (o.steps < 0 || !(o.lr > 0.0) || o.max_restarts < 0) {
        throw ConfigError("latent_gd needs steps >= 0, lr > 0 and max_restarts >= 0");
    }
    return o;
}

LatentGdResult latent_gd_baseline(const Phase1Model& phase1, double target_runtime_cycles,
                                  const Workload& w, const DesignGrid& grid,
                                  const LatentGdOptions& options, nn::Pcg32& rng) {
    std::size_t head = 0;
    switch (phase1.mode()) {
        case Phase1Mode::Runtime: head = 0; break;
        case Phase1Mode::PowerPerf: head = 1; break;
        case Phase1Mode::Edp:
            throw ConfigError("latent-space GD needs a runtime-supervised phase-1 model");
    }
    const auto lookup = phase1.normalizer().lookup(w);
    AXE_CHECK(lookup.stats != nullptr, "phase-1 normalizer holds no workload statistics");
    const double p_star = normalize_runtime(target_runtime_cycles, *lookup.stats);

    // The predictor is affine in v: g(v) = g(0) + v . grad.
    const std::size_t n_p = phase1.pp().outputs();
    Tensor e(1, n_p);
    e(0, head) = 1.0f;
    const Tensor grad = phase1.pp().input_gradient(e);
    const Tensor g0 = phase1.predict(Tensor(1, kLatentDim), std::span<const Workload>(&w, 1));
    const auto surrogate = [&](std::span<const float> v) {
        double g = g0(0, head);
        for (std::size_t i = 0; i < kLatentDim; ++i) {
            g += static_cast<double>(v[i]) * grad(0, i);
        }
        return g;
    };

    LatentGdResult result;
    Tensor v;
    double lr = options.lr;  // a divergent attempt restarts with the halved step size
    for (int attempt = 0;; ++attempt) {
        const HWConfig init = phase1.grid().sample_uniform(rng);
        v = phase1.encode(std::span<const HWConfig>(&init, 1));
        double g = surrogate(v.row(0));
        const double initial = (g - p_star) * (g - p_star);
        double loss = initial;
        bool diverged = false;
        Tensor trial(1, kLatentDim);
        for (int step = 0; step < options.steps; ++step) {
            const double scale = 2.0 * (g - p_star);
            for (std::size_t i = 0; i < kLatentDim; ++i) {
                trial(0, i) = static_cast<float>(v(0, i) - lr * scale * grad(0, i));
            }
            const double g_trial = surrogate(trial.row(0));
            const double trial_loss = (g_trial - p_star) * (g_trial - p_star);
            if (!std::isfinite(trial_loss) || trial_loss > 10.0 * initial + 1e-12) {
                diverged = true;
                lr *= 0.5;
                break;
            }
            if (trial_loss > loss) {
                lr *= 0.5;
                continue;
            }
            std::swap(v, trial);
            g = g_trial;
            loss = trial_loss;
        }
        if (attempt == 0) {
            result.initial_loss = initial;
        }
        result.final_loss = loss;
        result.restarts = attempt;
        if (!diverged || attempt >= options.max_restarts) {
            break;
        }
    }
    result.design = decode_latents(phase1, v, grid).front();
    return result;
}

// ---- experiments -------------------------------------------------------------

std::string_view to_string(TargetSpacing s) { return s == TargetSpacing::Log ? "log" : "linear"; }

TargetSpacing parse_target_spacing(std::string_view text) {
    if (text == "log") return TargetSpacing::Log;
    if (text == "linear") return TargetSpacing::Linear;
    throw ConfigError("unknown target spacing '" + std::string(text) + "' (expected log or linear)");
}

std::vector<double> runtime_targets(const WorkloadStats& stats, std::size_t count,
                                    TargetSpacing spacing) {
    AXE_CHECK(count >= 1, "need at least one target");
    std::vector<double> out(count);
    const double lo = std::exp(stats.log_runtime.min);
    const double hi = std::exp(stats.log_runtime.max);
    for (std::size_t j = 0; j < count; ++j) {
        const double f = count == 1 ? 0.5 : static_cast<double>(j) / static_cast<double>(count - 1);
        out[j] = spacing == TargetSpacing::Log ? denormalize_runtime(f, stats) : lo + f * (hi - lo);
    }
    out.front() = count == 1 ? out.front() : lo;
    if (count > 1) {
        out.back() = hi;
    }
    return out;
}

nlohmann::json ExperimentSettings::to_json() const {
    return {{"targets_per_workload", targets_per_workload},
            {"designs_per_target", designs_per_target},
            {"seeds", seeds},
            {"n_config", n_config},
            {"grid", grid},
            {"target_spacing", to_string(target_spacing)},
            {"latent_gd", latent_gd.to_json()}};
}

ExperimentSettings ExperimentSettings::from_json(const nlohmann::json& doc) {
    ExperimentSettings s;
    s.targets_per_workload = doc.value("targets_per_workload", s.targets_per_workload);
    s.designs_per_target = doc.value("designs_per_target", s.designs_per_target);
    s.seeds = doc.value("seeds", s.seeds);
    s.n_config = doc.value("n_config", s.n_config);
    s.grid = doc.value("grid", s.grid);
    s.target_spacing = parse_target_spacing(doc.value("target_spacing", std::string("log")));
    if (doc.contains("latent_gd")) {
        s.latent_gd = LatentGdOptions::from_json(doc.at("latent_gd"));
    }
    if (s.targets_per_workload < 1 || s.designs_per_target < 1 || s.n_config < 1 ||
        s.seeds.empty()) {
        throw ConfigError("experiment counts must be positive and at least one seed given");
    }
    return s;
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    csv::write_atomic(dir / (report.name + ".json"), report.summary.dump(2) + "\n");
    csv::write_atomic(dir / (report.name + "_workloads.csv"), report.workloads_csv);
    for (const auto& [file, contents] : report.plots) {
        csv::write_atomic(dir / file, contents);
    }
    csv::write_atomic(dir / (report.name + "_timing.json"), report.timing.dump(2) + "\n");
}

namespace {

struct GridBests {
    double runtime = std::numeric_limits<double>::infinity();
    double edp = std::numeric_limits<double>::infinity();
};

std::vector<GridBests> training_grid_bests(const Dataset& ds) {
    std::vector<GridBests> out(ds.suite.size());
    for (std::size_t r = 0; r < ds.size(); ++r) {
        auto& b = out[ds.row_workload[r]];
        b.runtime = std::min(b.runtime, static_cast<double>(ds.rows[r].perf.runtime_cycles));
        b.edp = std::min(b.edp, ds.rows[r].perf.edp);
    }
    return out;
}

const WorkloadStats& stats_for(const Dataset& ds, std::size_t wi) {
    return ds.normalizer.workloads()[wi];
}

nlohmann::json workload_json(const Workload& w) { return {w.m, w.k, w.n}; }

void check_models(const Phase1Model& phase1, const Phase2Model& phase2, CondMode expected) {
    if (phase2.mode() != expected) {
        throw ConfigError("experiment needs a phase-2 model conditioned on " +
                          std::string(to_string(expected)) + ", got " +
                          std::string(to_string(phase2.mode())));
    }
    if (phase1.mode() != phase1_mode_for(expected)) {
        throw ConfigError("experiment needs a phase-1 model trained in mode " +
                          std::string(to_string(phase1_mode_for(expected))));
    }
}

nlohmann::json base_summary(std::string_view name, const Dataset& ds,
                            const ExperimentSettings& settings, const Provenance& prov,
                            const DesignGrid& grid) {
    nlohmann::json suite = nlohmann::json::array();
    for (const auto& w : ds.suite) {
        suite.push_back(workload_json(w));
    }
    return {{"experiment", name},
            {"provenance", prov.to_json()},
            {"settings", settings.to_json()},
            {"grid", grid.name()},
            {"suite", suite}};
}

Tensor workload_conditions(const std::vector<Workload>& suite, std::size_t per_workload) {
    Tensor cw(suite.size() * per_workload, 3);
    for (std::size_t wi = 0; wi < suite.size(); ++wi) {
        const auto wv = normalize_workload(suite[wi]);
        for (std::size_t i = 0; i < per_workload; ++i) {
            std::copy(wv.begin(), wv.end(), cw.row(wi * per_workload + i).begin());
        }
    }
    return cw;
}

// Per-method accumulators of the generation experiment.
struct GenMethod {
    std::string name;
    std::vector<std::vector<double>> signed_err;  // per workload, all designs
    std::vector<std::vector<double>> best_abs;    // per workload, best-of-N per target
    std::vector<double> seed_median_abs;
    std::size_t evaluations = 0;
    double seconds = 0.0;
};

}  // namespace

ExperimentReport run_perf_generation_experiment(const Phase1Model& phase1, const Phase2Model& phase2,
                                                const Dataset& ds,
                                                const ExperimentSettings& settings,
                                                const Provenance& prov) {
    check_models(phase1, phase2, CondMode::Runtime);
    const DesignGrid grid = load_grid(settings.grid);
    const CostParams& cp = ds.cost;
    const std::size_t W = ds.suite.size();
    const std::size_t T = settings.targets_per_workload;
    const std::size_t N = settings.designs_per_target;

    std::vector<std::vector<double>> targets(W);
    for (std::size_t wi = 0; wi < W; ++wi) {
        targets[wi] = runtime_targets(stats_for(ds, wi), T, settings.target_spacing);
    }

    std::vector<GenMethod> methods(4);
    methods[0].name = "diffusion";
    methods[1].name = "untrained";
    methods[2].name = "random_search";
    methods[3].name = "latent_gd";
    for (auto& m : methods) {
        m.signed_err.resize(W);
        m.best_abs.resize(W);
    }
    std::vector<std::vector<double>> runtime_at_min(W);
    std::vector<std::vector<double>> runtime_at_max(W);
    std::size_t raw_in_range = 0;
    std::size_t raw_total = 0;

    std::string errors_csv = prov.csv_comment() + "\n";
    csv::row(errors_csv, "method", "seed", "m", "k", "n", "target_index", "target_cycles",
             "design_index", "runtime_cycles", "error_gen");

    // Scores one method's designs laid out as [workload][target][design].
    const auto score = [&](GenMethod& m, std::uint64_t seed, const std::vector<HWConfig>& designs) {
        std::vector<double> seed_abs;
        for (std::size_t wi = 0; wi < W; ++wi) {
            const auto first = designs.begin() + static_cast<std::ptrdiff_t>(wi * T * N);
            const std::vector<HWConfig> mine(first, first + static_cast<std::ptrdiff_t>(T * N));
            const auto perf = evaluate(mine, ds.suite[wi], cp);
            m.evaluations += perf.size();
            for (std::size_t j = 0; j < T; ++j) {
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t d = 0; d < N; ++d) {
                    const auto& p = perf[j * N + d];
                    const double rt = static_cast<double>(p.runtime_cycles);
                    const double e = error_gen(rt, targets[wi][j]);
                    m.signed_err[wi].push_back(e);
                    seed_abs.push_back(std::abs(e));
                    best = std::min(best, std::abs(e));
                    if (m.name == "diffusion" && j == 0) runtime_at_min[wi].push_back(rt);
                    if (m.name == "diffusion" && j == T - 1) runtime_at_max[wi].push_back(rt);
                    const auto& w = ds.suite[wi];
                    csv::row(errors_csv, m.name, seed, w.m, w.k, w.n, j, targets[wi][j], d,
                             p.runtime_cycles, e);
                }
                m.best_abs[wi].push_back(best);
            }
        }
        m.seed_median_abs.push_back(median(seed_abs));
    };

    for (const std::uint64_t seed : settings.seeds) {
        Tensor cond_p(W * T * N, 1);
        for (std::size_t wi = 0; wi < W; ++wi) {
            for (std::size_t j = 0; j < T; ++j) {
                const float p = static_cast<float>(
                    std::clamp(normalize_runtime(targets[wi][j], stats_for(ds, wi)), 0.0, 1.0));
                for (std::size_t d = 0; d < N; ++d) {
                    cond_p((wi * T + j) * N + d, 0) = p;
                }
            }
        }
        const Tensor cond_w = workload_conditions(ds.suite, T * N);

        auto t0 = std::chrono::steady_clock::now();
        Tensor raw;
        const auto diff = decode_latents(phase1, sample_latents(phase2, cond_p, cond_w, seed), grid, &raw);
        methods[0].seconds += seconds_since(t0);
        for (std::size_t i = 0; i < raw.rows(); ++i) {
            const auto r = raw.row(i);
            raw_in_range += std::all_of(r.begin(), r.end(),
                                        [](float x) { return x >= -0.2f && x <= 1.2f; });
            ++raw_total;
        }
        score(methods[0], seed, diff);

        Phase2Model untrained(phase2.mode(), phase2.counts(), phase2.profile(),
                              nn::Pcg32::derive(seed, 0x0badd1ff).next_u64());
        untrained.copy_standardization(phase2);
        t0 = std::chrono::steady_clock::now();
        const auto base = decode_latents(phase1, sample_latents(untrained, cond_p, cond_w, seed), grid);
        methods[1].seconds += seconds_since(t0);
        score(methods[1], seed, base);

        t0 = std::chrono::steady_clock::now();
        std::vector<HWConfig> random(W * T * N);
        for (std::size_t q = 0; q < W * T; ++q) {
            auto rng = nn::Pcg32::derive(seed, 0x100000 + q);
            for (std::size_t d = 0; d < N; ++d) {
                random[q * N + d] = grid.sample_uniform(rng);
            }
        }
        methods[2].seconds += seconds_since(t0);
        score(methods[2], seed, random);

        t0 = std::chrono::steady_clock::now();
        std::vector<HWConfig> gd(W * T * N);
#pragma omp parallel for schedule(dynamic, 16)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(W * T * N); ++i) {
            const auto idx = static_cast<std::size_t>(i);
            const std::size_t wi = idx / (T * N);
            const std::size_t j = (idx / N) % T;
            auto rng = nn::Pcg32::derive(seed, 0x200000 + idx);
            gd[idx] = latent_gd_baseline(phase1, targets[wi][j], ds.suite[wi], grid,
                                         settings.latent_gd, rng)
                          .design;
        }
        methods[3].seconds += seconds_since(t0);
        score(methods[3], seed, gd);
    }

    ExperimentReport report;
    report.name = "eval_gen";
    report.summary = base_summary(report.name, ds, settings, prov, grid);
    std::string wcsv = prov.csv_comment() + "\n";
    csv::row(wcsv, "m", "k", "n", "method", "designs", "evaluations_per_target",
             "median_abs_error_gen", "mean_error_gen", "mean_abs_error_gen",
             "median_best_of_n_abs_error_gen");
    nlohmann::json per_workload = nlohmann::json::array();
    for (std::size_t wi = 0; wi < W; ++wi) {
        const auto& w = ds.suite[wi];
        nlohmann::json entry = {{"workload", workload_json(w)},
                                {"median_runtime_at_min_target", median(runtime_at_min[wi])},
                                {"median_runtime_at_max_target", median(runtime_at_max[wi])}};
        for (const auto& m : methods) {
            const auto abs_err = abs_values(m.signed_err[wi]);
            entry[m.name] = {{"median_abs_error_gen", median(abs_err)},
                             {"mean_error_gen", mean(m.signed_err[wi])},
                             {"mean_abs_error_gen", mean(abs_err)},
                             {"median_best_of_n_abs_error_gen", median(m.best_abs[wi])}};
            csv::row(wcsv, w.m, w.k, w.n, m.name, m.signed_err[wi].size(), N, median(abs_err),
                     mean(m.signed_err[wi]), mean(abs_err), median(m.best_abs[wi]));
        }
        per_workload.push_back(entry);
    }
    nlohmann::json aggregate;
    nlohmann::json timing = {{"experiment", report.name}};
    for (const auto& m : methods) {
        std::vector<double> all;
        std::vector<double> best;
        for (std::size_t wi = 0; wi < W; ++wi) {
            all.insert(all.end(), m.signed_err[wi].begin(), m.signed_err[wi].end());
            best.insert(best.end(), m.best_abs[wi].begin(), m.best_abs[wi].end());
        }
        const auto abs_all = abs_values(all);
        aggregate[m.name] = {{"designs", all.size()},
                             {"evaluations", m.evaluations},
                             {"median_abs_error_gen", median(abs_all)},
                             {"mean_error_gen", mean(all)},
                             {"mean_abs_error_gen", mean(abs_all)},
                             {"median_best_of_n_abs_error_gen", median(best)},
                             {"per_seed_median_abs_error_gen", m.seed_median_abs}};
        timing[m.name] = {{"seconds", m.seconds},
                          {"seconds_per_design",
                           m.seconds / static_cast<double>(std::max<std::size_t>(all.size(), 1))}};
    }
    std::size_t ordered = 0;
    for (const auto& e : per_workload) {
        ordered += e["median_runtime_at_min_target"].get<double>() <
                   e["median_runtime_at_max_target"].get<double>();
    }
    aggregate["workloads_min_target_faster"] = ordered;
    aggregate["raw_numeric_in_range_fraction"] =
        raw_total == 0 ? 0.0 : static_cast<double>(raw_in_range) / static_cast<double>(raw_total);
    report.summary["workloads"] = per_workload;
    report.summary["aggregate"] = aggregate;
    report.workloads_csv = std::move(wcsv);
    report.plots.emplace_back("eval_gen_errors.csv", std::move(errors_csv));
    report.timing = timing;
    return report;
}

namespace {

// Class-conditioned designs laid out as [workload][class][design].
std::vector<HWConfig> generate_classes(const Phase1Model& phase1, const Phase2Model& phase2,
                                       const std::vector<Workload>& suite,
                                       const std::vector<int>& classes, std::size_t per_class,
                                       const DesignGrid& grid, std::uint64_t seed) {
    const std::size_t per_workload = classes.size() * per_class;
    std::vector<int> ids(suite.size() * per_workload);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        ids[i] = classes[(i % per_workload) / per_class];
    }
    const Tensor cond_p = phase2.class_condition(ids);
    const Tensor cond_w = workload_conditions(suite, per_workload);
    return decode_latents(phase1, sample_latents(phase2, cond_p, cond_w, seed), grid);
}

std::vector<HWConfig> random_designs(const DesignGrid& grid, std::size_t count, std::uint64_t seed,
                                     std::uint64_t index) {
    auto rng = nn::Pcg32::derive(seed, index);
    std::vector<HWConfig> out(count);
    for (auto& hw : out) {
        hw = grid.sample_uniform(rng);
    }
    return out;
}

void scatter_rows(std::string& out, std::string_view source, std::uint64_t seed, const Workload& w,
                  int class_id, std::span<const HWConfig> designs, std::span<const PerfRecord> perf) {
    for (std::size_t i = 0; i < designs.size(); ++i) {
        const auto& hw = designs[i];
        csv::row(out, source, seed, w.m, w.k, w.n, class_id, hw.r, hw.c, hw.ip_bytes, hw.wt_bytes,
                 hw.op_bytes, hw.bw, to_string(hw.loop), perf[i].power_w, perf[i].runtime_cycles,
                 perf[i].edp);
    }
}

std::string scatter_header(const Provenance& prov) {
    std::string out = prov.csv_comment() + "\n";
    csv::row(out, "source", "seed", "m", "k", "n", "class", "r", "c", "ip_bytes", "wt_bytes", "op_bytes",
             "bw", "loop", "power_w", "runtime_cycles", "edp");
    return out;
}

}  // namespace

ExperimentReport run_edp_dse(const Phase1Model& phase1, const Phase2Model& phase2, const Dataset& ds,
                             const ExperimentSettings& settings, const Provenance& prov) {
    check_models(phase1, phase2, CondMode::PowerPerfClass);
    const DesignGrid grid = load_grid(settings.grid);
    const CostParams& cp = ds.cost;
    const std::size_t W = ds.suite.size();
    const std::size_t K = phase2.n_classes();
    const std::size_t n = settings.n_config;
    const std::size_t budget = K * n;
    const auto bests = training_grid_bests(ds);
    std::vector<int> classes(K);
    std::iota(classes.begin(), classes.end(), 0);

    std::vector<std::vector<double>> sp(W);
    std::vector<std::vector<double>> grid_ratio(W);
    std::vector<std::vector<double>> best_method(W);
    std::vector<std::vector<double>> best_random(W);
    std::vector<std::vector<std::vector<double>>> class_edp(W, std::vector<std::vector<double>>(K));
    std::string scatter = scatter_header(prov);
    double method_seconds = 0.0;
    double random_seconds = 0.0;

    for (const std::uint64_t seed : settings.seeds) {
        auto t0 = std::chrono::steady_clock::now();
        const auto designs = generate_classes(phase1, phase2, ds.suite, classes, n, grid, seed);
        method_seconds += seconds_since(t0);
        for (std::size_t wi = 0; wi < W; ++wi) {
            const auto& w = ds.suite[wi];
            const std::span<const HWConfig> mine(designs.data() + wi * budget, budget);
            const auto perf = evaluate(mine, w, cp);
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < budget; ++i) {
                best = std::min(best, perf[i].edp);
                class_edp[wi][i / n].push_back(perf[i].edp);
            }
            for (std::size_t c = 0; c < K; ++c) {
                scatter_rows(scatter, "diffusion", seed, w, static_cast<int>(c),
                             mine.subspan(c * n, n), std::span(perf).subspan(c * n, n));
            }

            t0 = std::chrono::steady_clock::now();
            const auto random = random_designs(grid, budget, seed, 0x300000 + wi);
            const auto rperf = evaluate(random, w, cp);
            random_seconds += seconds_since(t0);
            double rbest = std::numeric_limits<double>::infinity();
            for (const auto& p : rperf) {
                rbest = std::min(rbest, p.edp);
            }
            scatter_rows(scatter, "random_search", seed, w, -1, random, rperf);

            best_method[wi].push_back(best);
            best_random[wi].push_back(rbest);
            sp[wi].push_back(rbest / best);
            grid_ratio[wi].push_back(best / bests[wi].edp);
        }
    }

    ExperimentReport report;
    report.name = "dse_edp";
    report.summary = base_summary(report.name, ds, settings, prov, grid);
    std::string wcsv = prov.csv_comment() + "\n";
    csv::row(wcsv, "m", "k", "n", "sp", "best_edp_method", "best_edp_random", "grid_best_edp",
             "best_vs_grid_ratio", "median_edp_first_class", "median_edp_last_class",
             "evaluations_method", "evaluations_random");
    nlohmann::json per_workload = nlohmann::json::array();
    std::vector<double> sp_all;
    std::size_t ordered = 0;
    std::size_t near_optimum = 0;
    for (std::size_t wi = 0; wi < W; ++wi) {
        const auto& w = ds.suite[wi];
        std::vector<double> class_medians(K);
        for (std::size_t c = 0; c < K; ++c) {
            class_medians[c] = median(class_edp[wi][c]);
        }
        const double sp_w = mean(sp[wi]);
        const double ratio = mean(grid_ratio[wi]);
        sp_all.push_back(sp_w);
        ordered += class_medians.front() < class_medians.back();
        near_optimum += ratio <= 1.10;
        per_workload.push_back({{"workload", workload_json(w)},
                                {"sp", sp_w},
                                {"sp_per_seed", sp[wi]},
                                {"best_edp_method", best_method[wi]},
                                {"best_edp_random", best_random[wi]},
                                {"grid_best_edp", bests[wi].edp},
                                {"best_vs_grid_ratio", ratio},
                                {"class_median_edp", class_medians},
                                {"evaluations_method", budget},
                                {"evaluations_random", budget}});
        csv::row(wcsv, w.m, w.k, w.n, sp_w, median(best_method[wi]), median(best_random[wi]),
                 bests[wi].edp, ratio, class_medians.front(), class_medians.back(), budget, budget);
    }
    report.summary["workloads"] = per_workload;
    report.summary["aggregate"] = {
        {"classes", K},
        {"designs_per_class", n},
        {"budget_per_workload", budget},
        {"sp_mean", mean(sp_all)},
        {"sp_median", median(sp_all)},
        {"workloads_first_class_lower_median_edp", ordered},
        {"workloads_within_10pct_of_grid_optimum", near_optimum},
        {"workloads", W}};
    report.workloads_csv = std::move(wcsv);
    report.plots.emplace_back("dse_edp_scatter.csv", std::move(scatter));
    report.timing = {{"experiment", report.name},
                     {"diffusion_seconds", method_seconds},
                     {"random_search_seconds", random_seconds},
                     {"diffusion_seconds_per_workload",
                      method_seconds / static_cast<double>(W * settings.seeds.size())}};
    return report;
}

ExperimentReport run_perf_dse(const Phase1Model& phase1, const Phase2Model& phase2, const Dataset& ds,
                              const ExperimentSettings& settings, const Provenance& prov) {
    check_models(phase1, phase2, CondMode::EdpClass);
    const DesignGrid grid = load_grid(settings.grid);
    const CostParams& cp = ds.cost;
    const std::size_t W = ds.suite.size();
    const std::size_t K = phase2.n_classes();
    const std::size_t n = settings.n_config;
    const auto bests = training_grid_bests(ds);
    const int last = static_cast<int>(K) - 1;
    const std::vector<int> classes = {0, last};

    std::vector<std::vector<double>> ratio_gen(W);
    std::vector<std::vector<double>> ratio_random(W);
    std::vector<std::vector<double>> best_gen(W);
    std::vector<std::vector<double>> first_edp(W);
    std::vector<std::vector<double>> last_edp(W);
    std::string scatter = scatter_header(prov);
    double method_seconds = 0.0;

    for (const std::uint64_t seed : settings.seeds) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto designs = generate_classes(phase1, phase2, ds.suite, classes, n, grid, seed);
        method_seconds += seconds_since(t0);
        for (std::size_t wi = 0; wi < W; ++wi) {
            const auto& w = ds.suite[wi];
            const std::span<const HWConfig> mine(designs.data() + wi * 2 * n, 2 * n);
            const auto perf = evaluate(mine, w, cp);
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) {
                best = std::min(best, static_cast<double>(perf[i].runtime_cycles));
                first_edp[wi].push_back(perf[i].edp);
                last_edp[wi].push_back(perf[n + i].edp);
            }
            scatter_rows(scatter, "diffusion", seed, w, 0, mine.subspan(0, n),
                         std::span(perf).subspan(0, n));
            scatter_rows(scatter, "diffusion", seed, w, last, mine.subspan(n, n),
                         std::span(perf).subspan(n, n));

            const auto random = random_designs(grid, n, seed, 0x400000 + wi);
            const auto rperf = evaluate(random, w, cp);
            double rbest = std::numeric_limits<double>::infinity();
            for (const auto& p : rperf) {
                rbest = std::min(rbest, static_cast<double>(p.runtime_cycles));
            }
            scatter_rows(scatter, "random_search", seed, w, -1, random, rperf);
            best_gen[wi].push_back(best);
            ratio_gen[wi].push_back(best / bests[wi].runtime);
            ratio_random[wi].push_back(rbest / bests[wi].runtime);
        }
    }

    ExperimentReport report;
    report.name = "dse_perf";
    report.summary = base_summary(report.name, ds, settings, prov, grid);
    std::string wcsv = prov.csv_comment() + "\n";
    csv::row(wcsv, "m", "k", "n", "best_runtime_generated", "grid_best_runtime",
             "best_generated_over_best_grid", "best_random_over_best_grid",
             "median_edp_first_class", "median_edp_last_class", "evaluations_method",
             "evaluations_random");
    nlohmann::json per_workload = nlohmann::json::array();
    std::size_t within = 0;
    std::size_t ordered = 0;
    std::size_t beats_random = 0;
    std::vector<double> ratios;
    for (std::size_t wi = 0; wi < W; ++wi) {
        const auto& w = ds.suite[wi];
        const double r = mean(ratio_gen[wi]);
        const double rr = mean(ratio_random[wi]);
        const double m0 = median(first_edp[wi]);
        const double m1 = median(last_edp[wi]);
        ratios.push_back(r);
        within += r <= 1.05;
        ordered += m0 < m1;
        beats_random += r <= rr;
        per_workload.push_back({{"workload", workload_json(w)},
                                {"best_runtime_generated", best_gen[wi]},
                                {"grid_best_runtime", bests[wi].runtime},
                                {"best_generated_over_best_grid", r},
                                {"best_random_over_best_grid", rr},
                                {"median_edp_first_class", m0},
                                {"median_edp_last_class", m1},
                                {"evaluations_method", n},
                                {"evaluations_random", n}});
        csv::row(wcsv, w.m, w.k, w.n, median(best_gen[wi]), bests[wi].runtime, r, rr, m0, m1, n, n);
    }
    report.summary["workloads"] = per_workload;
    report.summary["aggregate"] = {{"classes", K},
                                   {"designs_per_workload", n},
                                   {"median_ratio", median(ratios)},
                                   {"workloads_within_5pct_of_grid_best", within},
                                   {"workloads_first_class_lower_median_edp", ordered},
                                   {"workloads_generated_not_worse_than_random", beats_random},
                                   {"workloads", W}};
    report.workloads_csv = std::move(wcsv);
    report.plots.emplace_back("dse_perf_scatter.csv", std::move(scatter));
    report.timing = {{"experiment", report.name},
                     {"diffusion_seconds", method_seconds},
                     {"diffusion_seconds_per_workload",
                      method_seconds / static_cast<double>(W * settings.seeds.size())}};
    return report;
}

}  // namespace axe
