// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "axegen/nn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace axe::nn::kernels {

namespace {

constexpr std::size_t kMr = 4;    // rows per register tile
constexpr std::size_t kNr = 32;   // columns per register tile
constexpr std::size_t kKc = 256;  // k panel depth

// acc[MR][NR] lives in registers for the whole k panel.
inline void micro_tile(std::size_t kc, const float* a, std::size_t lda, const float* b,
                       std::size_t ldb, float* c, std::size_t ldc) {
    float acc[kMr][kNr];
    for (std::size_t i = 0; i < kMr; ++i) {
#pragma omp simd
        for (std::size_t j = 0; j < kNr; ++j) {
            acc[i][j] = c[i * ldc + j];
        }
    }
    for (std::size_t p = 0; p < kc; ++p) {
        const float* brow = b + p * ldb;
        for (std::size_t i = 0; i < kMr; ++i) {
            const float av = a[i * lda + p];
#pragma omp simd
            for (std::size_t j = 0; j < kNr; ++j) {
                acc[i][j] = std::fma(av, brow[j], acc[i][j]);
            }
        }
    }
    for (std::size_t i = 0; i < kMr; ++i) {
#pragma omp simd
        for (std::size_t j = 0; j < kNr; ++j) {
            c[i * ldc + j] = acc[i][j];
        }
    }
}

// Remainder columns [j0, n) for rows [i0, i1) over the k panel [p0, p1).
inline void edge_tile(std::size_t i0, std::size_t i1, std::size_t j0, std::size_t n,
                      std::size_t p0, std::size_t p1, std::size_t k, const float* a, const float* b,
                      float* c) {
    for (std::size_t i = i0; i < i1; ++i) {
        float* crow = c + i * n;
        for (std::size_t p = p0; p < p1; ++p) {
            const float av = a[i * k + p];
            const float* brow = b + p * n;
            for (std::size_t j = j0; j < n; ++j) {
                crow[j] = std::fma(av, brow[j], crow[j]);
            }
        }
    }
}

void gemm_rows(std::size_t i0, std::size_t i1, std::size_t n, std::size_t k, const float* a,
               const float* b, float* c) {
    const std::size_t n_full = n - n % kNr;
    for (std::size_t p0 = 0; p0 < k; p0 += kKc) {
        const std::size_t p1 = std::min(k, p0 + kKc);
        if (i1 - i0 == kMr) {
            for (std::size_t j = 0; j < n_full; j += kNr) {
                micro_tile(p1 - p0, a + i0 * k + p0, k, b + p0 * n + j, n, c + i0 * n + j, n);
            }
            edge_tile(i0, i1, n_full, n, p0, p1, k, a, b, c);
        } else {
            edge_tile(i0, i1, 0, n, p0, p1, k, a, b, c);
        }
    }
}

}  // namespace

void gemm(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c,
          bool accumulate) {
    if (!accumulate) {
        std::fill(c, c + m * n, 0.0f);
    }
    if (m == 0 || n == 0 || k == 0) {
        return;
    }
    const auto blocks = static_cast<std::int64_t>((m + kMr - 1) / kMr);
#pragma omp parallel for schedule(static)
    for (std::int64_t blk = 0; blk < blocks; ++blk) {
        const std::size_t i0 = static_cast<std::size_t>(blk) * kMr;
        const std::size_t i1 = std::min(m, i0 + kMr);
        gemm_rows(i0, i1, n, k, a, b, c);
    }
}

void transpose(std::size_t rows, std::size_t cols, const float* src, float* dst) {
    constexpr std::size_t kBlock = 32;
    for (std::size_t i0 = 0; i0 < rows; i0 += kBlock) {
        for (std::size_t j0 = 0; j0 < cols; j0 += kBlock) {
            const std::size_t i1 = std::min(rows, i0 + kBlock);
            const std::size_t j1 = std::min(cols, j0 + kBlock);
            for (std::size_t i = i0; i < i1; ++i) {
                for (std::size_t j = j0; j < j1; ++j) {
                    dst[j * rows + i] = src[i * cols + j];
                }
            }
        }
    }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c,
             bool accumulate) {
    std::vector<float> bt(k * n);
    transpose(n, k, b, bt.data());
    gemm(m, n, k, a, bt.data(), c, accumulate);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c,
             bool accumulate) {
    std::vector<float> at(m * k);
    transpose(k, m, a, at.data());
    gemm(m, n, k, at.data(), b, c, accumulate);
}

namespace reference {

void gemm(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c,
          bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            float s = accumulate ? c[i * n + j] : 0.0f;
            for (std::size_t p = 0; p < k; ++p) {
                s = std::fma(a[i * k + p], b[p * n + j], s);
            }
            c[i * n + j] = s;
        }
    }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c,
             bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            float s = accumulate ? c[i * n + j] : 0.0f;
            for (std::size_t p = 0; p < k; ++p) {
                s = std::fma(a[i * k + p], b[j * k + p], s);
            }
            c[i * n + j] = s;
        }
    }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c,
             bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            float s = accumulate ? c[i * n + j] : 0.0f;
            for (std::size_t p = 0; p < k; ++p) {
                s = std::fma(a[p * m + i], b[p * n + j], s);
            }
            c[i * n + j] = s;
        }
    }
}

}  // namespace reference

}  // namespace axe::nn::kernels
