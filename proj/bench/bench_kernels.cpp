// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <vector>

#include "axegen/design_space.hpp"
#include "axegen/nn/kernels.hpp"
#include "axegen/nn/rng.hpp"
#include "axegen/perf_oracle.hpp"

namespace {

using axe::nn::Pcg32;

std::vector<float> random_matrix(std::size_t n, std::uint64_t seed) {
    Pcg32 rng(seed);
    std::vector<float> v(n);
    for (auto& x : v) {
        x = rng.uniform_f() - 0.5f;
    }
    return v;
}

template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const auto k = static_cast<std::size_t>(state.range(1));
    const auto n = static_cast<std::size_t>(state.range(2));
    const auto a = random_matrix(m * k, 1);
    const auto b = random_matrix(k * n, 2);
    std::vector<float> c(m * n);
    for (auto _ : state) {
        if constexpr (Parallel) {
            axe::nn::kernels::gemm(m, n, k, a.data(), b.data(), c.data(), false);
        } else {
            axe::nn::kernels::reference::gemm(m, n, k, a.data(), b.data(), c.data(), false);
        }
        benchmark::DoNotOptimize(c.data());
    }
    state.counters["GFLOP/s"] = benchmark::Counter(
        2.0 * static_cast<double>(m * n * k), benchmark::Counter::kIsIterationInvariantRate,
        benchmark::Counter::kIs1000);
}

template <bool Parallel>
void BM_OracleGrid(benchmark::State& state) {
    const auto grid = axe::training_grid();
    const axe::Workload w{static_cast<std::int64_t>(state.range(0)), 768, 3072};
    std::vector<axe::PerfRecord> out(grid.size());
    for (auto _ : state) {
        if constexpr (Parallel) {
            axe::perf_grid(grid, w, {}, out);
        } else {
            axe::reference::perf_grid(grid, w, {}, out);
        }
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.size()));
}

}  // namespace

BENCHMARK(BM_Gemm<true>)->Args({512, 14, 512})->Args({512, 512, 256})->Args({128, 1536, 1024});
BENCHMARK(BM_Gemm<false>)->Args({512, 14, 512})->Args({512, 512, 256})->Args({128, 1536, 1024});
BENCHMARK(BM_OracleGrid<true>)->Arg(1)->Arg(512);
BENCHMARK(BM_OracleGrid<false>)->Arg(1)->Arg(512);

BENCHMARK_MAIN();
