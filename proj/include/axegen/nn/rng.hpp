// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>

namespace axe::nn {

std::uint64_t splitmix64(std::uint64_t& state);

// PCG32 (XSH-RR output, 64-bit LCG state). The sequence is fully specified by
// (seed, stream) and identical on every platform; all distributions below are
// derived from raw 32-bit draws without the standard library's
// implementation-defined distributions.
class Pcg32 {
public:
    explicit Pcg32(std::uint64_t seed = 0x853c49e6748fea9bULL, std::uint64_t stream = 0);

    // Independent generator for a sub-task, keyed by (this generator's seed, index).
    static Pcg32 derive(std::uint64_t master_seed, std::uint64_t index);

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    // Uniform in [0, 1).
    double uniform();
    float uniform_f();
    // Uniform integer in [0, bound), unbiased.
    std::uint64_t below(std::uint64_t bound);
    // Standard normal via Box-Muller.
    double normal();

    template <typename RandomIt>
    void shuffle(RandomIt first, RandomIt last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const auto j = below(i);
            using std::swap;
            swap(first[static_cast<std::ptrdiff_t>(i - 1)], first[static_cast<std::ptrdiff_t>(j)]);
        }
    }

private:
    std::uint64_t state_ = 0;
    std::uint64_t inc_ = 1;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace axe::nn
