// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "axegen/conditioning.hpp"
#include "axegen/csv.hpp"
#include "axegen/dataset.hpp"
#include "axegen/dse.hpp"
#include "axegen/error.hpp"
#include "axegen/nn/rng.hpp"

using namespace axe;

namespace {

DesignGrid small_grid() {
    return DesignGrid("small", {{{4, 16, 64}, {4, 16, 64}, {4096, 65536}, {4096, 65536},
                                 {4096, 65536}, {2, 8}}},
                      {LoopOrder::MNK, LoopOrder::NMK});
}

const Dataset& small_dataset() {
    static const Dataset ds =
        generate({{16, 256, 512}, {200, 64, 3000}, {1, 4096, 4096}}, small_grid(), CostParams{}, Provenance{});
    return ds;
}

ExperimentSettings tiny_settings() {
    ExperimentSettings s;
    s.targets_per_workload = 3;
    s.designs_per_target = 4;
    s.seeds = {1, 2};
    s.n_config = 3;
    s.grid = "training";
    s.latent_gd.steps = 5;
    return s;
}

}  // namespace

TEST_CASE("class labels") {
    CHECK(class_label(0, 0, 3) == 0);
    CHECK(class_label(2, 2, 3) == 8);
    CHECK(class_label(1, 2, 3) == 7);
    std::set<int> labels;
    for (int p = 0; p < 3; ++p) {
        for (int f = 0; f < 4; ++f) labels.insert(class_label(p, f, 3));
    }
    CHECK(labels.size() == 12);
    CHECK(*labels.begin() == 0);
    CHECK(*labels.rbegin() == 11);
    CHECK(class_count(CondMode::PowerPerfClass, ClassCounts{}) == 9);
    CHECK(class_count(CondMode::EdpClass, ClassCounts{}) == 10);
    CHECK(cond_width(CondMode::Runtime, ClassCounts{}) == 1);
    CHECK(phase1_mode_for(CondMode::EdpClass) == Phase1Mode::Edp);
    CHECK(phase1_mode_for(CondMode::PowerPerfClass) == Phase1Mode::PowerPerf);
    CHECK_THROWS_AS(ClassCounts::from_json({{"n_power", 0}}), ConfigError);
}

TEST_CASE("generation error") {
    CHECK(error_gen(110, 100) == doctest::Approx(0.10));
    CHECK(error_gen(100, 100) == 0.0);
    CHECK(error_gen(50, 100) == doctest::Approx(-0.5));
    CHECK_THROWS_AS(error_gen(50, 0), ConfigError);
    CHECK_THROWS_AS(error_gen(50, -1), ConfigError);
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

TEST_CASE("percentile binning") {
    const Dataset& ds = small_dataset();
    const ClassBinner b = ClassBinner::fit(ds, ClassCounts{});
    const std::size_t per = small_grid().size();
    for (std::size_t wi = 0; wi < ds.suite.size(); ++wi) {
        std::vector<std::size_t> power(3), perf(3), edp(10);
        std::vector<double> edp_max(10, -INFINITY), edp_min(10, INFINITY);
        for (std::size_t r = wi * per; r < (wi + 1) * per; ++r) {
            power[static_cast<std::size_t>(b.power_bin(r))]++;
            perf[static_cast<std::size_t>(b.perf_bin(r))]++;
            const auto e = static_cast<std::size_t>(b.edp_bin(r));
            edp[e]++;
            edp_max[e] = std::max(edp_max[e], ds.rows[r].perf.edp);
            edp_min[e] = std::min(edp_min[e], ds.rows[r].perf.edp);
            const int c = b.power_perf_class(r);
            CHECK(c >= 0);
            CHECK(c < 9);
        }
        for (const auto n : power) CHECK(std::abs(static_cast<double>(n) - per / 3.0) <= 1.0);
        for (const auto n : perf) CHECK(std::abs(static_cast<double>(n) - per / 3.0) <= 1.0);
        for (const auto n : edp) CHECK(std::abs(static_cast<double>(n) - per / 10.0) <= 1.0);
        // Bins are ordered: nothing in bin k exceeds anything in bin k+1.
        for (std::size_t k = 0; k + 1 < 10; ++k) CHECK(edp_max[k] <= edp_min[k + 1]);
        const auto& cuts = b.edp_cuts()[wi];
        CHECK(cuts.size() == 9);
        CHECK(std::is_sorted(cuts.begin(), cuts.end()));
    }
}

TEST_CASE("random search baseline") {
    const DesignGrid tg = target_grid();
    const Workload w{64, 768, 768};
    const CostParams cp;
    nn::Pcg32 a(3), b(3);
    const auto one = random_search_baseline(tg, 1, w, SearchObjective::MinEdp, 0, cp, a);
    CHECK(one.evaluations == 1);
    CHECK(one.best == tg.sample_uniform(b));

    double prev = INFINITY;
    for (const std::size_t budget : {1u, 5u, 20u, 100u, 400u}) {
        nn::Pcg32 r(11);
        const auto res = random_search_baseline(tg, budget, w, SearchObjective::MinRuntime, 0, cp, r);
        CHECK(res.evaluations == budget);
        CHECK(res.objective <= prev);
        CHECK(res.objective == static_cast<double>(res.perf.runtime_cycles));
        prev = res.objective;
    }

    // Full budget on an enumerable grid is the brute-force optimum.
    const DesignGrid g = training_grid();
    std::vector<PerfRecord> all(g.size());
    perf_grid(g, w, cp, all);
    const auto best = std::min_element(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.edp < y.edp; });
    nn::Pcg32 r(1);
    const auto full = random_search_baseline(g, g.size(), w, SearchObjective::MinEdp, 0, cp, r);
    CHECK(full.perf.edp == best->edp);
    CHECK(full.best == g.at(static_cast<std::uint64_t>(best - all.begin())));
    CHECK(full.evaluations == g.size());

    const double target = 50000.0;
    nn::Pcg32 t(4);
    const auto near = random_search_baseline(g, 500, w, SearchObjective::TargetRuntime, target, cp, t);
    CHECK(near.objective == doctest::Approx(std::abs(error_gen(near.perf.runtime_cycles, target))));
    CHECK_THROWS_AS(random_search_baseline(g, 0, w, SearchObjective::MinEdp, 0, cp, t), ConfigError);
}

TEST_CASE("runtime targets") {
    WorkloadStats s;
    s.log_runtime = {std::log(100.0), std::log(1e6)};
    const auto log_t = runtime_targets(s, 5, TargetSpacing::Log);
    REQUIRE(log_t.size() == 5);
    CHECK(log_t.front() == doctest::Approx(100.0));
    CHECK(log_t.back() == doctest::Approx(1e6));
    CHECK(log_t[2] == doctest::Approx(1e4));
    const auto lin_t = runtime_targets(s, 3, TargetSpacing::Linear);
    CHECK(lin_t[1] == doctest::Approx((100.0 + 1e6) / 2));
    CHECK(parse_target_spacing("linear") == TargetSpacing::Linear);
    CHECK_THROWS_AS(parse_target_spacing("cubic"), ConfigError);
}

TEST_CASE("latent gradient descent baseline") {
    const Dataset& ds = small_dataset();
    const Phase1Model p1(Phase1Mode::Runtime, ds.grid, ds.normalizer, 6);
    LatentGdOptions opt;
    opt.steps = 30;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        nn::Pcg32 rng(seed);
        const auto& st = ds.normalizer.workloads()[0];
        const double target = std::exp(st.log_runtime.min + 0.3 * (st.log_runtime.max - st.log_runtime.min));
        const auto res = latent_gd_baseline(p1, target, ds.suite[0], target_grid(), opt, rng);
        CHECK(res.final_loss <= res.initial_loss);
        CHECK(target_grid().contains(res.design));
        CHECK(res.restarts <= opt.max_restarts);
    }
    const auto back = LatentGdOptions::from_json(opt.to_json());
    CHECK(back.steps == 30);
}

TEST_CASE("experiments are reproducible and budget-matched") {
    const Dataset& ds = small_dataset();
    const ExperimentSettings s = tiny_settings();
    Provenance prov;
    prov.seed = 1;

    const Phase1Model p1(Phase1Mode::Runtime, ds.grid, ds.normalizer, 1);
    const Phase2Model p2(CondMode::Runtime, {}, DiffusionProfile::Desk, 1);
    const auto a = run_perf_generation_experiment(p1, p2, ds, s, prov);
    const auto b = run_perf_generation_experiment(p1, p2, ds, s, prov);
    CHECK(a.summary == b.summary);
    CHECK(a.workloads_csv == b.workloads_csv);
    const auto& agg = a.summary.at("aggregate");
    const std::size_t designs = ds.suite.size() * 3 * 4 * 2;
    for (const char* m : {"diffusion", "untrained", "random_search", "latent_gd"}) {
        CHECK(agg.at(m).at("designs").get<std::size_t>() == designs);
        CHECK(agg.at(m).at("evaluations").get<std::size_t>() == designs);
        CHECK(std::isfinite(agg.at(m).at("median_abs_error_gen").get<double>()));
    }
    CHECK(a.summary.at("workloads").size() == ds.suite.size());

    const Phase1Model pp1(Phase1Mode::PowerPerf, ds.grid, ds.normalizer, 1);
    const Phase2Model pp2(CondMode::PowerPerfClass, {}, DiffusionProfile::Desk, 1);
    const auto e = run_edp_dse(pp1, pp2, ds, s, prov);
    const auto e2 = run_edp_dse(pp1, pp2, ds, s, prov);
    CHECK(e.summary == e2.summary);
    CHECK(e.summary.at("aggregate").at("budget_per_workload").get<std::size_t>() == 9 * 3);
    for (const auto& w : e.summary.at("workloads")) {
        CHECK(w.at("evaluations_method") == w.at("evaluations_random"));
        CHECK(w.at("sp").get<double>() > 0.0);
        CHECK(w.at("best_vs_grid_ratio").get<double>() >= 1.0 - 1e-12);
    }
    CHECK_THROWS_AS(run_edp_dse(p1, p2, ds, s, prov), ConfigError);

    const Phase1Model ep1(Phase1Mode::Edp, ds.grid, ds.normalizer, 1);
    const Phase2Model ep2(CondMode::EdpClass, {}, DiffusionProfile::Desk, 1);
    const auto d = run_perf_dse(ep1, ep2, ds, s, prov);
    for (const auto& w : d.summary.at("workloads")) {
        CHECK(w.contains("best_generated_over_best_grid"));
        CHECK(w.at("evaluations_method") == w.at("evaluations_random"));
    }

    const auto dir = std::filesystem::temp_directory_path() / "axegen_test_report";
    std::filesystem::remove_all(dir);
    write_report(a, dir);
    CHECK(std::filesystem::exists(dir / "eval_gen.json"));
    CHECK(std::filesystem::exists(dir / "eval_gen_workloads.csv"));
    CHECK(std::filesystem::exists(dir / "eval_gen_errors.csv"));
    CHECK(std::filesystem::exists(dir / "eval_gen_timing.json"));
    CHECK(csv::read_file(dir / "eval_gen_workloads.csv").rfind("# axegen", 0) == 0);
    std::filesystem::remove_all(dir);
}
