// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

// Dense float kernels behind every layer. All matrices are row-major and
// contiguous. Each output element is accumulated with fused multiply-adds in
// ascending k order, so the blocked OpenMP kernels and the serial reference
// produce bit-identical results for any thread count.
namespace axe::nn::kernels {

// C[m x n] (+)= A[m x k] * B[k x n]
void gemm(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c,
          bool accumulate);
// C[m x n] (+)= A[m x k] * B^T, B stored [n x k]
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c,
             bool accumulate);
// C[m x n] (+)= A^T * B, A stored [k x m]
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c,
             bool accumulate);

void transpose(std::size_t rows, std::size_t cols, const float* src, float* dst);

namespace reference {
void gemm(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c,
          bool accumulate);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c,
             bool accumulate);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c,
             bool accumulate);
}  // namespace reference

}  // namespace axe::nn::kernels
