// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "axegen/dataset.hpp"
#include "axegen/error.hpp"
#include "axegen/nn/rng.hpp"
#include "axegen/perf_oracle.hpp"
#include "cost_oracle.hpp"

using namespace axe;

namespace {

HWConfig make(std::int64_t r, std::int64_t c, std::int64_t ip, std::int64_t wt, std::int64_t op,
              std::int64_t bw, LoopOrder loop = LoopOrder::MNK) {
    HWConfig h;
    h.r = r;
    h.c = c;
    h.ip_bytes = ip;
    h.wt_bytes = wt;
    h.op_bytes = op;
    h.bw = bw;
    h.loop = loop;
    return h;
}

std::vector<Workload> random_workloads(std::size_t n, std::uint64_t seed) {
    nn::Pcg32 rng(seed);
    return sample_workloads(n, rng);
}

}  // namespace

TEST_CASE("compute cycles closed form") {
    CHECK(compute_cycles(make(4, 4, 4096, 4096, 4096, 2), {4, 4, 4}) == 14);
    CHECK(compute_cycles(make(4, 4, 4096, 4096, 4096, 2, LoopOrder::NMK), {4, 4, 4}) == 14);
    // A decode-shaped workload: a 4-row array beats a 128-row one.
    const Workload decode{1, 4096, 4096};
    CHECK(compute_cycles(make(4, 32, 65536, 65536, 65536, 8), decode) <
          compute_cycles(make(128, 32, 65536, 65536, 65536, 8), decode));
    HWConfig reserved = make(4, 4, 4096, 4096, 4096, 2, LoopOrder::KNM);
    CHECK_THROWS_AS(compute_cycles(reserved, decode), ConfigError);
}

TEST_CASE("oracle agrees with the independent restatement") {
    const DesignGrid g = training_grid();
    const CostParams cp;
    nn::Pcg32 rng(77);
    for (const auto& w : random_workloads(20, 4)) {
        for (int i = 0; i < 400; ++i) {
            const HWConfig h = g.sample_uniform(rng);
            const auto o = oracle::eval(h, w, cp);
            const PerfRecord p = perf(h, w, cp);
            REQUIRE(compute_cycles(h, w) == o.compute);
            const DramTraffic t = dram_traffic(h, w, cp);
            CHECK(t.in_bytes == o.in);
            CHECK(t.wt_bytes == o.wt);
            CHECK(t.out_bytes == o.out);
            CHECK(p.runtime_cycles == o.runtime);
            CHECK(p.dram_bytes == o.in + o.wt + o.out);
            CHECK(p.energy_pj == doctest::Approx(o.energy).epsilon(1e-12));
            CHECK(p.power_w == doctest::Approx(o.energy * 1e-12 / (o.runtime * 1e-9)).epsilon(1e-12));
            CHECK(p.edp == doctest::Approx(o.energy * 1e-6 * o.runtime).epsilon(1e-12));
        }
    }
}

TEST_CASE("DRAM traffic cases") {
    const CostParams cp;
    const Workload w{256, 512, 1024};
    // MNK with the whole weight matrix on chip: no weight refetch.
    const HWConfig fits = make(16, 16, 4096, 1024 * 1024, 4096, 8);
    CHECK(dram_traffic(fits, w, cp).wt_bytes == 512 * 1024);
    // NMK with too small an input buffer: inputs refetched once per column tile.
    const HWConfig nmk = make(16, 16, 4096, 4096, 4096, 8, LoopOrder::NMK);
    CHECK(dram_traffic(nmk, w, cp).in_bytes == 256 * 512 * (1024 / 16));
    // Single tile with everything resident.
    const Workload small{4, 8, 4};
    const auto t = dram_traffic(make(4, 4, 4096, 4096, 4096, 2), small, cp);
    CHECK(t.total() == 4 * 8 + 8 * 4 + 4 * 4 * 4);
}

TEST_CASE("runtime bandwidth monotonicity and compute-bound case") {
    const CostParams cp;
    const Workload w{128, 1024, 1024};
    const HWConfig fast = make(32, 32, 65536, 65536, 65536, 32);
    HWConfig slow = fast;
    slow.bw = 2;
    CHECK(runtime(fast, w, cp) <= runtime(slow, w, cp));

    const Workload tiny{4, 4, 4};
    const HWConfig h = make(8, 8, 4096, 4096, 4096, 32);
    const std::int64_t stall = 8 * 8 * 4 > 4096 ? 1 : 0;
    CHECK(runtime(h, tiny, cp) == compute_cycles(h, tiny) + stall);
}

TEST_CASE("transposition duality on random cases") {
    const CostParams cp;
    const DesignGrid tg = target_grid();
    nn::Pcg32 rng(31);
    for (int i = 0; i < 10000; ++i) {
        const HWConfig h = tg.sample_uniform(rng);
        const Workload w{1 + static_cast<std::int64_t>(rng.below(1024)),
                         1 + static_cast<std::int64_t>(rng.below(4096)),
                         1 + static_cast<std::int64_t>(rng.below(30000))};
        const PerfRecord a = perf(h, w, cp);
        const PerfRecord b = perf(oracle::transpose(h), oracle::transpose(w), cp);
        REQUIRE(a.runtime_cycles == b.runtime_cycles);
        REQUIRE(a.dram_bytes == b.dram_bytes);
    }
}

TEST_CASE("energy properties") {
    const Workload w{64, 768, 768};
    const HWConfig h = make(32, 16, 65536, 131072, 4096, 8);
    CostParams cp;
    CostParams leaky = cp;
    leaky.leak_per_kb_cycle *= 2.0;
    CHECK(energy(h, w, leaky) > energy(h, w, cp));

    // M=1: an oversized array burns more energy than a right-sized one even
    // where it is not faster.
    const Workload decode{1, 4096, 4096};
    const HWConfig big = make(128, 16, 65536, 65536, 65536, 8);
    const HWConfig right = make(4, 16, 65536, 65536, 65536, 8);
    CHECK(runtime(right, decode, cp) <= runtime(big, decode, cp));
    CHECK(energy(big, decode, cp) > energy(right, decode, cp));

    CostParams fast = cp;
    fast.clock_ghz = 2.0;
    CHECK(perf(h, w, fast).power_w == doctest::Approx(2.0 * perf(h, w, cp).power_w).epsilon(1e-12));
}

TEST_CASE("positivity and lower bound on the training grid") {
    const DesignGrid g = training_grid();
    const CostParams cp;
    for (const auto& w : random_workloads(3, 17)) {
        std::vector<PerfRecord> out(g.size());
        perf_grid(g, w, cp, out);
        std::size_t bad = 0;
        g.for_each([&](std::uint64_t i, const HWConfig& h) {
            const auto& p = out[i];
            const auto tiles = tile_counts(h, w);
            if (!(p.runtime_cycles >= tiles.row_tiles * tiles.col_tiles * w.k && p.energy_pj > 0 &&
                  p.power_w > 0 && p.edp > 0 && p.dram_bytes > 0)) {
                ++bad;
            }
        });
        CHECK(bad == 0);
    }
}

TEST_CASE("parallel batch evaluation is bit-identical to the serial reference") {
    const DesignGrid g = training_grid();
    const CostParams cp;
    const Workload w{100, 300, 5000};
    std::vector<PerfRecord> par(g.size()), ser(g.size());
    perf_grid(g, w, cp, par);
    reference::perf_grid(g, w, cp, ser);
    CHECK(par == ser);

    const auto configs = g.enumerate();
    std::vector<PerfRecord> bp(configs.size()), bs(configs.size());
    perf_batch(configs, w, cp, bp);
    reference::perf_batch(configs, w, cp, bs);
    CHECK(bp == bs);
    CHECK(bp == par);
    std::vector<PerfRecord> wrong(3);
    CHECK_THROWS_AS(perf_batch(configs, w, cp, wrong), Error);
}

TEST_CASE("cost parameters JSON") {
    CostParams cp;
    cp.e_dram = 33.0;
    const CostParams back = CostParams::from_json(cp.to_json());
    CHECK(back.e_dram == 33.0);
    CHECK(back.id == "cost_model_v1");
    CHECK(CostParams::from_json(nlohmann::json::object()).e_mac == CostParams{}.e_mac);
    CHECK_THROWS_AS(CostParams::from_json({{"e_mac", 0.0}}), ConfigError);
    CHECK_THROWS_AS(CostParams::from_json({{"clock_ghz", -1.0}}), ConfigError);
}
